import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from Correspondence_Analysis.Wordlist_Processor.alignment import GAP, MISSING, align_wordlist
from utils.exceptions import DataError, UnknownDoculect

logger = logging.getLogger(__name__)

UNRESOLVED = MISSING
UNRESOLVED_LABEL = "?"
MAX_REFINEMENT_PASSES = 10

_WILDCARD = -1
_UNSEEN = -2


@dataclass(frozen=True)
class Site:
    """One alignment column; values are doculect-indexed (sound, GAP or MISSING)."""

    site_id: tuple[int, int]
    values: tuple[str, ...]

    @property
    def cogid(self) -> int:
        return self.site_id[0]

    @property
    def column(self) -> int:
        return self.site_id[1]

    @property
    def concrete(self) -> int:
        return sum(1 for value in self.values if value != MISSING)


@dataclass(frozen=True)
class Pattern:
    values: tuple[str, ...]
    assigned_sites: frozenset
    doculects: tuple[str, ...] = ()

    @property
    def recurrence(self) -> int:
        return len(self.assigned_sites)


def _values(item) -> tuple[str, ...]:
    return tuple(item.values) if hasattr(item, "values") else tuple(item)


def compatible(a, b) -> bool:
    """True iff both sides agree wherever both hold a sound or a gap."""
    left, right = _values(a), _values(b)
    if len(left) != len(right):
        raise DataError(f"cannot compare vectors of length {len(left)} and {len(right)}")
    return all(x == y or x == MISSING or y == MISSING for x, y in zip(left, right))


def _compatible_rows(matrix: np.ndarray, row: np.ndarray) -> np.ndarray:
    return ((matrix == row) | (matrix == _WILDCARD) | (row == _WILDCARD)).all(axis=1)


class PatternCollection:
    """
    Result of the greedy cover. Besides the patterns it keeps the sites it
    was built from and an integer-coded copy of the pattern vectors, so that
    compatibility against all patterns is one vectorized comparison.
    """

    def __init__(self, doculects, sites, patterns, assignment, symbols, matrix, refinement_passes=0):
        self.doculects = tuple(doculects)
        self.sites = tuple(sites)
        self.patterns = list(patterns)
        self.assignment = dict(assignment)
        self.total_sites = len(self.sites)
        self.refinement_passes = refinement_passes
        self._symbols = symbols
        self._matrix = matrix
        self._sizes = np.array([pattern.recurrence for pattern in self.patterns], dtype=np.int64)

    def encode(self, values) -> np.ndarray:
        return np.array(
            [_WILDCARD if value == MISSING else self._symbols.get(value, _UNSEEN) for value in values],
            dtype=np.int64,
        )

    def compatible_patterns(self, values) -> np.ndarray:
        values = _values(values)
        if len(values) != len(self.doculects):
            raise DataError(f"site has {len(values)} entries, collection has {len(self.doculects)} doculects")
        if not self.patterns:
            return np.array([], dtype=np.int64)
        return np.flatnonzero(_compatible_rows(self._matrix, self.encode(values)))

    def max_recurrence(self, values) -> int:
        hits = self.compatible_patterns(values)
        if hits.size == 0:
            return 1
        return int(self._sizes[hits].max())


def extract_sites(alignments, doculects) -> list[Site]:
    """
    One site per alignment column, ordered by cogid and column. Doculects
    without a row in a cognate set are MISSING at every site of that set.
    """
    doculects = tuple(doculects)
    if isinstance(alignments, dict):
        alignments = alignments.values()
    sites = []
    for alignment in sorted(alignments, key=lambda a: a.cogid):
        rows = {}
        for row in alignment.rows:
            if row.doculect in rows:
                logger.warning(
                    f"Cognate set {alignment.cogid} has several rows for '{row.doculect}'; using the first."
                )
                continue
            rows[row.doculect] = row
        for column in range(alignment.width):
            values = tuple(rows[d].cells[column] if d in rows else MISSING for d in doculects)
            sites.append(Site(site_id=(alignment.cogid, column), values=values))
    return sites


def _decode(row: np.ndarray, inverse: list[str]) -> tuple[str, ...]:
    return tuple(UNRESOLVED if code == _WILDCARD else inverse[code] for code in row)


def infer_patterns(sites, doculects=None, max_passes: int = MAX_REFINEMENT_PASSES) -> PatternCollection:
    """
    Groups all sites into correspondence patterns by greedy clique cover.

    Sites are visited most concrete first (ties by site id) and join the
    first compatible pattern in creation order, filling its unresolved
    slots; otherwise they open a new pattern. Refinement passes then move
    each site to the largest compatible pattern when that one is strictly
    larger than its own, until nothing moves or max_passes is reached.
    """
    sites = list(sites)
    if not sites:
        raise DataError("pattern inference needs at least one site")
    n_doculects = len(sites[0].values)
    if any(len(site.values) != n_doculects for site in sites):
        raise DataError("all sites must have the same number of doculects")
    if doculects is None:
        doculects = tuple(f"D{index + 1}" for index in range(n_doculects))

    symbols: dict[str, int] = {}
    codes = np.full((len(sites), n_doculects), _WILDCARD, dtype=np.int64)
    for i, site in enumerate(sites):
        for j, value in enumerate(site.values):
            if value != MISSING:
                codes[i, j] = symbols.setdefault(value, len(symbols))

    order = sorted(range(len(sites)), key=lambda i: (-sites[i].concrete, sites[i].site_id))
    matrix = np.full((len(sites), n_doculects), _WILDCARD, dtype=np.int64)
    sizes = np.zeros(len(sites), dtype=np.int64)
    owner = np.full(len(sites), -1, dtype=np.int64)
    n_patterns = 0

    for i in order:
        row = codes[i]
        hits = np.flatnonzero(_compatible_rows(matrix[:n_patterns], row)) if n_patterns else []
        if len(hits):
            target = hits[0]
            fill = matrix[target] == _WILDCARD
            matrix[target, fill] = row[fill]
        else:
            target = n_patterns
            matrix[target] = row
            n_patterns += 1
        owner[i] = target
        sizes[target] += 1

    passes = 0
    for passes in range(1, max_passes + 1):
        moved = 0
        for i in order:
            row = codes[i]
            hits = np.flatnonzero(_compatible_rows(matrix[:n_patterns], row) & (sizes[:n_patterns] > 0))
            best = hits[np.argmax(sizes[hits])]
            own = owner[i]
            if best != own and sizes[best] > sizes[own]:
                fill = matrix[best] == _WILDCARD
                matrix[best, fill] = row[fill]
                sizes[own] -= 1
                sizes[best] += 1
                owner[i] = best
                moved += 1

        # vectors may still hold values of sites that moved away
        matrix[:n_patterns] = _WILDCARD
        for i in order:
            fill = matrix[owner[i]] == _WILDCARD
            matrix[owner[i], fill] = codes[i, fill]
        if not moved:
            break
    else:
        logger.warning(f"Pattern refinement stopped after {max_passes} passes without converging.")

    alive = [p for p in range(n_patterns) if sizes[p] > 0]
    new_index = {old: new for new, old in enumerate(alive)}
    inverse = [None] * len(symbols)
    for symbol, code in symbols.items():
        inverse[code] = symbol

    members: dict[int, list] = {p: [] for p in alive}
    for i, site in enumerate(sites):
        members[owner[i]].append(site.site_id)
    patterns = [
        Pattern(values=_decode(matrix[p], inverse), assigned_sites=frozenset(members[p]), doculects=tuple(doculects))
        for p in alive
    ]
    assignment = {site.site_id: new_index[owner[i]] for i, site in enumerate(sites)}

    logger.info(f"Grouped {len(sites)} sites into {len(patterns)} correspondence patterns ({passes} refinement passes).")
    return PatternCollection(
        doculects=doculects,
        sites=sites,
        patterns=patterns,
        assignment=assignment,
        symbols=symbols,
        matrix=matrix[alive].copy(),
        refinement_passes=passes,
    )


def wordlist_patterns(wl, alignments=None) -> PatternCollection:
    """Aligns (where needed), extracts the sites of every cognate set and infers patterns."""
    if alignments is None:
        alignments = align_wordlist(wl)
    sites = extract_sites(alignments, wl.doculects)
    if not sites:
        raise DataError("wordlist has no cognate set with at least two members")
    return infer_patterns(sites, wl.doculects)


def site_recurrence(s, pc: PatternCollection) -> int:
    """Recurrence of the largest pattern compatible with the site, at least 1."""
    return pc.max_recurrence(s)


def predict_reflex(p: Pattern, doculect: str) -> str | None:
    """Expected reflex (sound or gap) of a doculect under a pattern; None when unresolved."""
    if doculect not in p.doculects:
        raise UnknownDoculect(f"unknown doculect '{doculect}'")
    value = p.values[p.doculects.index(doculect)]
    return None if value == UNRESOLVED else value


def patterns_frame(pc: PatternCollection) -> pd.DataFrame:
    records = []
    for index, pattern in enumerate(pc.patterns, start=1):
        record = {"PATTERN_ID": index, "RECURRENCE": pattern.recurrence}
        for doculect, value in zip(pc.doculects, pattern.values):
            record[doculect] = UNRESOLVED_LABEL if value == UNRESOLVED else value
        records.append(record)
    return pd.DataFrame.from_records(records, columns=["PATTERN_ID", "RECURRENCE", *pc.doculects])


def assignment_frame(pc: PatternCollection) -> pd.DataFrame:
    records = [
        {"COGID": site.cogid, "COLUMN": site.column + 1, "PATTERN_ID": pc.assignment[site.site_id] + 1}
        for site in pc.sites
    ]
    return pd.DataFrame.from_records(records, columns=["COGID", "COLUMN", "PATTERN_ID"])


__all__ = [
    "GAP",
    "MISSING",
    "Pattern",
    "PatternCollection",
    "Site",
    "assignment_frame",
    "compatible",
    "extract_sites",
    "infer_patterns",
    "patterns_frame",
    "predict_reflex",
    "site_recurrence",
    "wordlist_patterns",
]
