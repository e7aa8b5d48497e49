import hashlib
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from Correspondence_Analysis.Wordlist_Processor.alignment import GAP, SegmentClass
from Correspondence_Analysis.Wordlist_Processor.wordlist import (
    Segment,
    Wordlist,
    WordForm,
    inventory,
)
from utils.exceptions import ConfigError, InjectionImpossible

logger = logging.getLogger(__name__)

CONSONANT_POOL = ("k", "l", "r", "j", "w", "p", "t", "m", "n", "s", "b", "d", "g", "h", "f", "v", "z", "x")
VOWEL_POOL = ("a", "e", "i", "u", "o", "y")
SYLLABLE_TEMPLATE = (SegmentClass.CONSONANT, SegmentClass.VOWEL, SegmentClass.CONSONANT, SegmentClass.VOWEL)
PROTO_DOCULECT = "Proto"
# float products such as 0.29 * 100 must not lose a position to rounding
_FLOOR_EPSILON = 1e-9


def derive_seed(*parts) -> int:
    """64-bit seed from the parts; independent of call order and process."""
    digest = hashlib.sha256("|".join(str(part) for part in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def _floor(value: float) -> int:
    return int(math.floor(value + _FLOOR_EPSILON))


@dataclass(frozen=True)
class SimulationConfig:
    n_concepts: int = 200
    n_consonants: int = 10
    n_vowels: int = 4
    n_daughters: int = 10
    max_mergers: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_concepts < 1 or self.n_daughters < 1:
            raise ConfigError("n_concepts and n_daughters must be positive")
        if self.n_consonants < 2 or self.n_vowels < 2:
            raise ConfigError("mergers need at least two consonants and two vowels")
        if self.n_consonants > len(CONSONANT_POOL) or self.n_vowels > len(VOWEL_POOL):
            raise ConfigError(
                f"phone pools hold {len(CONSONANT_POOL)} consonants and {len(VOWEL_POOL)} vowels"
            )
        if self.max_mergers < 0:
            raise ConfigError("max_mergers must not be negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def consonants(self) -> tuple[str, ...]:
        return CONSONANT_POOL[: self.n_consonants]

    @property
    def vowels(self) -> tuple[str, ...]:
        return VOWEL_POOL[: self.n_vowels]

    @classmethod
    def from_settings(cls, settings: dict, **overrides) -> "SimulationConfig":
        """Builds a config from the `simulation` section of the settings; explicit overrides win."""
        known = {name: settings[name] for name in cls.__dataclass_fields__ if name in settings}
        known.update({name: value for name, value in overrides.items() if value is not None})
        return cls(**known)


@dataclass(frozen=True)
class Merger:
    source: str
    target: str

    def apply(self, phone: str) -> str:
        return self.target if phone == self.source else phone


@dataclass(frozen=True)
class GroundTruth:
    replaced: dict = field(default_factory=dict)
    noise_positions: frozenset = frozenset()


def _form(form_id, doculect, concept, tokens, cogid) -> WordForm:
    tokens = tuple(tokens)
    return WordForm(
        id=form_id,
        doculect=doculect,
        concept=concept,
        segments=tuple(Segment.from_token(token) for token in tokens),
        cogid=cogid,
        alignment=tokens,
    )


def generate_proto(cfg: SimulationConfig) -> Wordlist:
    """One CVCV proto-form per concept; cogid is the concept index starting at 1."""
    rng = np.random.default_rng(derive_seed(cfg.seed, "proto"))
    pools = {SegmentClass.CONSONANT: cfg.consonants, SegmentClass.VOWEL: cfg.vowels}
    forms = []
    for index in range(1, cfg.n_concepts + 1):
        tokens = [pools[klass][rng.integers(len(pools[klass]))] for klass in SYLLABLE_TEMPLATE]
        forms.append(_form(index, PROTO_DOCULECT, f"C{index:03d}", tokens, index))
    return Wordlist(doculects=(PROTO_DOCULECT,), forms=tuple(forms))


def sample_mergers(cfg: SimulationConfig, daughter_index: int) -> list[Merger]:
    """
    Draws 0..max_mergers mergers for one daughter. Each merger picks a class
    with two or more surviving phones, two distinct phones of that class, and
    one of them as the target. Later mergers apply to the output of earlier ones.
    """
    rng = np.random.default_rng(derive_seed(cfg.seed, "mergers", daughter_index))
    surviving = {SegmentClass.CONSONANT: list(cfg.consonants), SegmentClass.VOWEL: list(cfg.vowels)}
    mergers = []
    for _ in range(int(rng.integers(cfg.max_mergers + 1))):
        classes = [klass for klass in (SegmentClass.CONSONANT, SegmentClass.VOWEL) if len(surviving[klass]) >= 2]
        if not classes:
            break
        klass = classes[rng.integers(len(classes))]
        first, second = rng.choice(len(surviving[klass]), size=2, replace=False)
        pair = (surviving[klass][first], surviving[klass][second])
        target = pair[rng.integers(2)]
        source = pair[1] if target == pair[0] else pair[0]
        surviving[klass].remove(source)
        mergers.append(Merger(source=source, target=target))
    return mergers


def daughter_name(index: int) -> str:
    return f"Lang{index + 1:02d}"


def evolve(proto: Wordlist, mergers_per_daughter) -> Wordlist:
    """
    Applies each daughter's mergers position-wise to every proto-form.
    Alignments are the identity, so every site is fully regular.
    """
    mergers_per_daughter = [list(mergers) for mergers in mergers_per_daughter]
    doculects = tuple(daughter_name(index) for index in range(len(mergers_per_daughter)))
    forms = []
    form_id = 1
    for doculect, mergers in zip(doculects, mergers_per_daughter):
        for proto_form in proto.forms:
            tokens = []
            for phone in proto_form.tokens:
                for merger in mergers:
                    phone = merger.apply(phone)
                tokens.append(phone)
            forms.append(_form(form_id, doculect, proto_form.concept, tokens, proto_form.cogid))
            form_id += 1
    return Wordlist(doculects=doculects, forms=tuple(forms))


def _rewrite(form: WordForm, replacements: dict) -> WordForm:
    """Replaces segments by token index, keeping gap positions of the alignment row."""
    tokens = list(form.tokens)
    for index, token in replacements.items():
        tokens[index] = token
    alignment = None
    if form.alignment is not None:
        cells, cursor = [], 0
        for cell in form.alignment:
            if cell == GAP:
                cells.append(cell)
            else:
                cells.append(tokens[cursor])
                cursor += 1
        alignment = tuple(cells)
    return replace(
        form,
        segments=tuple(Segment.from_token(token) for token in tokens),
        alignment=alignment,
    )


def _alternatives(inventories: dict, form: WordForm, index: int) -> list[str]:
    segment = form.segments[index]
    return [phone for phone in inventories[form.doculect].phones(segment.klass) if phone != segment.token]


def inject_noise(wl: Wordlist, rate: float, seed: int) -> tuple[Wordlist, frozenset]:
    """
    Replaces floor(rate * number of segments) segments, drawn without
    replacement, each with a different phone of the same class from the
    doculect's inventory.

    Returns:
        tuple: The noised wordlist and the (form id, segment index) positions changed.
    """
    if not 0 <= rate <= 1:
        raise ConfigError(f"noise rate must lie in [0, 1], got {rate}")
    slots = [(position, index) for position, form in enumerate(wl.forms) for index in range(len(form.segments))]
    n_noise = _floor(rate * len(slots))
    if n_noise == 0:
        return wl, frozenset()

    rng = np.random.default_rng(seed)
    inventories = {doculect: inventory(wl, doculect) for doculect in wl.doculects}
    chosen = sorted(int(i) for i in rng.choice(len(slots), size=n_noise, replace=False))

    per_form: dict[int, dict[int, str]] = {}
    skipped = 0
    for slot in chosen:
        position, index = slots[slot]
        form = wl.forms[position]
        alternatives = _alternatives(inventories, form, index)
        if not alternatives:
            skipped += 1
            continue
        per_form.setdefault(position, {})[index] = alternatives[rng.integers(len(alternatives))]
    if skipped:
        logger.warning(f"Skipped {skipped} noise positions without an alternative phone of the same class.")

    forms = list(wl.forms)
    positions = set()
    for position, replacements in per_form.items():
        forms[position] = _rewrite(forms[position], replacements)
        positions.update((forms[position].id, index) for index in replacements)
    logger.info(f"Replaced {len(positions)} of {len(slots)} segments (rate {rate}).")
    return replace(wl, forms=tuple(forms)), frozenset(positions)


def _replacement_for(form: WordForm, inventories: dict, rng) -> dict[int, str]:
    replacements = {}
    for index, segment in enumerate(form.segments):
        if segment.klass not in (SegmentClass.CONSONANT, SegmentClass.VOWEL):
            continue
        alternatives = _alternatives(inventories, form, index)
        if not alternatives:
            raise InjectionImpossible(form.cogid, f"'{form.doculect}' has no alternative for '{segment.token}'")
        replacements[index] = alternatives[rng.integers(len(alternatives))]
    return replacements


def inject_replacements(wl: Wordlist, fraction: float, seed: int) -> tuple[Wordlist, dict]:
    """
    Replaces one random member in floor(fraction * eligible) cognate sets
    (at least one when fraction > 0), where eligible sets have three or more
    members. Every consonant and vowel of the chosen form becomes a different
    phone of the same class from the doculect's inventory.

    Returns:
        tuple: The perturbed wordlist and a mapping cogid -> replaced form id.
    """
    if not 0 <= fraction <= 1:
        raise ConfigError(f"replacement fraction must lie in [0, 1], got {fraction}")
    eligible = [(cogid, members) for cogid, members in wl.cognate_sets() if len(members) >= 3]
    if fraction == 0 or not eligible:
        if fraction > 0:
            logger.warning("No cognate set with at least three members; nothing injected.")
        return wl, {}

    target = max(1, _floor(fraction * len(eligible)))
    rng = np.random.default_rng(seed)
    inventories = {doculect: inventory(wl, doculect) for doculect in wl.doculects}
    position_of = {form.id: position for position, form in enumerate(wl.forms)}

    forms = list(wl.forms)
    replaced = {}
    for choice in rng.permutation(len(eligible)):
        if len(replaced) == target:
            break
        cogid, members = eligible[int(choice)]
        member = members[rng.integers(len(members))]
        try:
            replacements = _replacement_for(member, inventories, rng)
        except InjectionImpossible as e:
            logger.warning(f"Resampling: {e}")
            continue
        forms[position_of[member.id]] = _rewrite(member, replacements)
        replaced[cogid] = member.id

    if len(replaced) < target:
        logger.warning(f"Only {len(replaced)} of {target} cognate sets could be perturbed.")
    return replace(wl, forms=tuple(forms)), dict(sorted(replaced.items()))


def simulate_wordlist(cfg: SimulationConfig, noise: float = 0.0, fraction: float = 0.0) -> tuple[Wordlist, GroundTruth]:
    """generate_proto -> sample_mergers -> evolve -> inject_noise -> inject_replacements, all seeded by cfg.seed."""
    proto = generate_proto(cfg)
    mergers = [sample_mergers(cfg, index) for index in range(cfg.n_daughters)]
    wl = evolve(proto, mergers)
    wl, positions = inject_noise(wl, noise, derive_seed(cfg.seed, "noise"))
    wl, replaced = inject_replacements(wl, fraction, derive_seed(cfg.seed, "replace"))
    logger.info(
        f"Simulated {cfg.n_daughters} daughters x {cfg.n_concepts} concepts "
        f"(noise {noise}, {len(replaced)} replaced forms, seed {cfg.seed})."
    )
    return wl, GroundTruth(replaced=replaced, noise_positions=positions)
