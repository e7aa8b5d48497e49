import csv
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import pandas as pd

from Correspondence_Analysis.Wordlist_Processor.alignment import (
    GAP,
    Alignment,
    AlignmentRow,
    SegmentClass,
    classify,
)
from utils.exceptions import (
    AlignmentMismatch,
    DataError,
    InvalidSample,
    InvalidSegment,
    ParseError,
    UnknownDoculect,
)

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("ID", "DOCULECT", "CONCEPT", "TOKENS", "COGID")
ALIGNMENT_COLUMN = "ALIGNMENT"


@dataclass(frozen=True)
class Segment:
    token: str
    klass: SegmentClass

    @classmethod
    def from_token(cls, token: str) -> "Segment":
        if any(char.isspace() for char in token):
            raise InvalidSegment(f"segment '{token}' contains whitespace")
        return cls(token=token, klass=classify(token))


@dataclass(frozen=True)
class WordForm:
    id: int
    doculect: str
    concept: str
    segments: tuple[Segment, ...]
    cogid: int
    alignment: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.segments:
            raise DataError(f"word form {self.id} has no segments")
        if self.alignment is not None:
            ungapped = tuple(cell for cell in self.alignment if cell != GAP)
            if ungapped != self.tokens:
                raise AlignmentMismatch(self.id)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(segment.token for segment in self.segments)


@dataclass(frozen=True)
class Inventory:
    doculect: str
    consonants: frozenset = field(default_factory=frozenset)
    vowels: frozenset = field(default_factory=frozenset)

    def phones(self, klass: SegmentClass) -> tuple[str, ...]:
        """Sorted tokens of one class; tones and markers have no inventory."""
        if klass == SegmentClass.CONSONANT:
            return tuple(sorted(segment.token for segment in self.consonants))
        if klass == SegmentClass.VOWEL:
            return tuple(sorted(segment.token for segment in self.vowels))
        return ()


@dataclass(frozen=True)
class Wordlist:
    """
    Immutable comparative wordlist. Cognate grouping and provided alignments
    are computed once on first access.
    """

    doculects: tuple[str, ...]
    forms: tuple[WordForm, ...]

    def __post_init__(self):
        if len(set(self.doculects)) != len(self.doculects):
            raise DataError("doculect names must be unique")
        known = set(self.doculects)
        seen_ids = set()
        for form in self.forms:
            if form.doculect not in known:
                raise UnknownDoculect(f"form {form.id} refers to unknown doculect '{form.doculect}'")
            if form.id in seen_ids:
                raise DataError(f"duplicate form id {form.id}")
            seen_ids.add(form.id)

    @cached_property
    def _cognate_groups(self) -> tuple:
        order = {name: index for index, name in enumerate(self.doculects)}
        groups: dict[int, dict[str, WordForm]] = {}
        for form in self.forms:
            if form.cogid <= 0:
                continue
            members = groups.setdefault(form.cogid, {})
            if form.doculect in members:
                logger.warning(
                    f"Cognate set {form.cogid} has a second form for '{form.doculect}' "
                    f"(form {form.id}); keeping form {members[form.doculect].id}."
                )
                continue
            members[form.doculect] = form
        return tuple(
            (cogid, tuple(sorted(members.values(), key=lambda f: order[f.doculect])))
            for cogid, members in sorted(groups.items())
            if len(members) >= 2
        )

    def cognate_sets(self) -> list[tuple[int, tuple[WordForm, ...]]]:
        return list(self._cognate_groups)

    @cached_property
    def _provided(self) -> dict:
        alignments = {}
        for cogid, members in self._cognate_groups:
            rows = [member.alignment for member in members]
            if all(row is None for row in rows):
                continue
            if any(row is None for row in rows):
                logger.warning(f"Cognate set {cogid} is only partially aligned; it will be realigned.")
                continue
            if len({len(row) for row in rows}) != 1:
                logger.warning(f"Cognate set {cogid} has alignment rows of unequal width; it will be realigned.")
                continue
            alignments[cogid] = Alignment.from_rows(
                cogid,
                [AlignmentRow(form_id=m.id, doculect=m.doculect, cells=m.alignment) for m in members],
            )
        return alignments

    def provided_alignments(self) -> dict[int, Alignment]:
        return dict(self._provided)

    @property
    def concepts(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(form.concept for form in self.forms))

    def form(self, form_id: int) -> WordForm:
        return self._forms_by_id[form_id]

    @cached_property
    def _forms_by_id(self) -> dict:
        return {form.id: form for form in self.forms}

    def to_frame(self) -> pd.DataFrame:
        has_alignment = any(form.alignment is not None for form in self.forms)
        records = []
        for form in self.forms:
            record = {
                "ID": form.id,
                "DOCULECT": form.doculect,
                "CONCEPT": form.concept,
                "TOKENS": " ".join(form.tokens),
                "COGID": form.cogid,
            }
            if has_alignment:
                record[ALIGNMENT_COLUMN] = " ".join(form.alignment) if form.alignment else ""
            records.append(record)
        columns = list(REQUIRED_COLUMNS) + ([ALIGNMENT_COLUMN] if has_alignment else [])
        return pd.DataFrame.from_records(records, columns=columns)


def _split_segments(value: str, line: int, column: str) -> list[str]:
    pieces = value.strip().split(" ")
    if any(piece == "" for piece in pieces):
        raise ParseError(line, f"{column} contains an empty segment (double space?)")
    return pieces


def parse_wordlist(text: str) -> Wordlist:
    """
    Parses a tab-separated wordlist with header row.

    Args:
        text (str): Document with the columns ID, DOCULECT, CONCEPT, TOKENS, COGID
            (any case, any order) and an optional ALIGNMENT column.

    Returns:
        Wordlist: The validated wordlist. Rows with COGID <= 0 are kept but not grouped.

    Raises:
        ParseError: Malformed header (line 1) or malformed row (its line number).
        AlignmentMismatch: An ALIGNMENT row whose non-gap cells differ from TOKENS.
    """
    lines = text.replace("\r\n", "\n").split("\n")
    if not lines or not lines[0].strip():
        raise ParseError(1, "missing header")

    header = [name.strip().upper() for name in lines[0].lstrip("\ufeff").split("\t")]
    missing = [name for name in REQUIRED_COLUMNS if name not in header]
    if missing:
        raise ParseError(1, f"header lacks required columns {missing}")
    if len(set(header)) != len(header):
        raise ParseError(1, "header contains duplicate column names")
    index = {name: position for position, name in enumerate(header)}
    has_alignment = ALIGNMENT_COLUMN in index

    doculects: dict[str, None] = {}
    forms = []
    seen_ids = set()
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise ParseError(line_number, f"expected {len(header)} columns, found {len(cells)}")

        try:
            form_id = int(cells[index["ID"]])
            cogid = int(cells[index["COGID"]])
        except ValueError as e:
            raise ParseError(line_number, f"ID and COGID must be integers ({e})") from e
        if form_id in seen_ids:
            raise ParseError(line_number, f"duplicate ID {form_id}")
        seen_ids.add(form_id)

        doculect = cells[index["DOCULECT"]].strip()
        if not doculect:
            raise ParseError(line_number, "empty DOCULECT")
        tokens_value = cells[index["TOKENS"]]
        if not tokens_value.strip():
            raise ParseError(line_number, "empty TOKENS")
        try:
            segments = tuple(
                Segment.from_token(token) for token in _split_segments(tokens_value, line_number, "TOKENS")
            )
        except InvalidSegment as e:
            raise ParseError(line_number, str(e)) from e

        alignment = None
        if has_alignment and cells[index[ALIGNMENT_COLUMN]].strip():
            alignment = tuple(_split_segments(cells[index[ALIGNMENT_COLUMN]], line_number, ALIGNMENT_COLUMN))

        doculects.setdefault(doculect, None)
        forms.append(
            WordForm(
                id=form_id,
                doculect=doculect,
                concept=cells[index["CONCEPT"]].strip(),
                segments=segments,
                cogid=cogid,
                alignment=alignment,
            )
        )

    return Wordlist(doculects=tuple(doculects), forms=tuple(forms))


def serialize_wordlist(wl: Wordlist) -> str:
    # cells hold no tabs or newlines
    return wl.to_frame().to_csv(sep="\t", index=False, lineterminator="\n", quoting=csv.QUOTE_NONE)


class WordlistReader:
    def __init__(self, input_file_path: str):
        """
        Initializes the reader with the path to a wordlist TSV file.

        Args:
            input_file_path (str): Path to the UTF-8 wordlist.
        """
        self.input_file_path = input_file_path
        if not os.path.exists(self.input_file_path):
            logger.error(f"Input file not found: {self.input_file_path}")
            raise DataError(f"Input file not found: {self.input_file_path}")

    def process(self) -> Wordlist:
        logger.info(f"Loading wordlist from {self.input_file_path}")
        with open(self.input_file_path, 'rb') as f:
            raw = f.read()
        try:
            text = raw.decode('utf-8')
        except UnicodeDecodeError as e:
            line = raw.count(b"\n", 0, e.start) + 1
            logger.error(f"{self.input_file_path} is not valid UTF-8 (line {line}).")
            raise ParseError(line, f"invalid UTF-8 byte {raw[e.start:e.start + 1]!r}") from e
        wl = parse_wordlist(text)
        logger.info(
            f"Loaded {len(wl.forms)} forms, {len(wl.doculects)} doculects, "
            f"{len(wl.cognate_sets())} cognate sets."
        )
        return wl


def read_wordlist(path: str) -> Wordlist:
    return WordlistReader(path).process()


def cognate_sets(wl: Wordlist) -> list[tuple[int, tuple[WordForm, ...]]]:
    """Cognate sets with at least two members, by cogid; members in doculect order."""
    return wl.cognate_sets()


def subsample(wl: Wordlist, k: int, seed: int) -> Wordlist:
    """
    Restricts a wordlist to k doculects drawn uniformly without replacement.

    Raises:
        InvalidSample: If k is not in 1..number of doculects.
    """
    if k < 1 or k > len(wl.doculects):
        raise InvalidSample(f"cannot sample {k} of {len(wl.doculects)} doculects")
    rng = np.random.default_rng(seed)
    chosen = sorted(int(i) for i in rng.choice(len(wl.doculects), size=k, replace=False))
    doculects = tuple(wl.doculects[i] for i in chosen)
    keep = set(doculects)
    return Wordlist(doculects=doculects, forms=tuple(form for form in wl.forms if form.doculect in keep))


def inventory(wl: Wordlist, doculect: str) -> Inventory:
    if doculect not in wl.doculects:
        raise UnknownDoculect(f"unknown doculect '{doculect}'")
    segments = {segment for form in wl.forms if form.doculect == doculect for segment in form.segments}
    return Inventory(
        doculect=doculect,
        consonants=frozenset(s for s in segments if s.klass == SegmentClass.CONSONANT),
        vowels=frozenset(s for s in segments if s.klass == SegmentClass.VOWEL),
    )


def meets_thresholds(wl: Wordlist, min_doculects: int = 10, min_concepts: int = 140) -> bool:
    """Dataset selection thresholds; reported by the callers, never enforced here."""
    passed = len(wl.doculects) >= min_doculects and len(wl.concepts) >= min_concepts
    if not passed:
        logger.warning(
            f"Wordlist has {len(wl.doculects)} doculects and {len(wl.concepts)} concepts, "
            f"below the thresholds ({min_doculects}, {min_concepts})."
        )
    return passed
