import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from utils.exceptions import AlignmentMismatch, InvalidSegment, TooSmall

logger = logging.getLogger(__name__)

GAP = "-"
MISSING = "Ø"

MATCH_SCORE = 2
CLASS_SCORE = 1
MISMATCH_SCORE = -2
GAP_SCORE = -1

VOWEL_LETTERS = frozenset(
    "aeiouy"
    "ɑɐɒæɛɜɞəɘɚɝɤɨɪʉʊʌɯɔøœɶʏɵɿʅɷᴇ"
)
TONE_CHARACTERS = frozenset("˥˦˧˨˩꜒꜓꜔꜕꜖¹²³⁴⁵⁶⁷⁸⁹⁰0123456789")
MARKERS = frozenset({"+", "_", "#"})
# modifier letters and symbols (ʰ, ⁿ, ː ...) and combining marks never form the base
_NON_BASE_CATEGORIES = frozenset({"Mn", "Me", "Lm", "Sk"})


class SegmentClass(str, Enum):
    CONSONANT = "consonant"
    VOWEL = "vowel"
    TONE = "tone"
    MARKER = "marker"


@lru_cache(maxsize=4096)
def classify(token: str) -> SegmentClass:
    """
    Assigns a coarse sound class to one phonetic segment.

    The class is decided by the base character of the segment, so that
    aspiration, length and other diacritics do not change it ("kʰ" is a
    consonant, "aː" a vowel).

    Raises:
        InvalidSegment: For empty tokens and the gap/missing symbols.
    """
    if not token or token in (GAP, MISSING):
        raise InvalidSegment(f"'{token}' is not a phonetic segment")
    if token in MARKERS:
        return SegmentClass.MARKER
    if all(char in TONE_CHARACTERS for char in token):
        return SegmentClass.TONE

    for char in unicodedata.normalize("NFD", token):
        if unicodedata.category(char) in _NON_BASE_CATEGORIES:
            continue
        return SegmentClass.VOWEL if char.lower() in VOWEL_LETTERS else SegmentClass.CONSONANT
    return SegmentClass.CONSONANT


@dataclass(frozen=True)
class AlignmentRow:
    form_id: int
    doculect: str
    cells: tuple[str, ...]


@dataclass(frozen=True)
class Alignment:
    """Matrix view of one cognate set: one row per word form, one column per site."""

    cogid: int
    rows: tuple[AlignmentRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise AlignmentMismatch(self.cogid, "alignment without rows")
        widths = {len(row.cells) for row in self.rows}
        if len(widths) != 1 or 0 in widths:
            raise AlignmentMismatch(self.cogid, f"rows have unequal or zero width {sorted(widths)}")
        for column in range(self.width):
            if all(cell == GAP for cell in self.column(column)):
                raise AlignmentMismatch(self.cogid, f"column {column} consists of gaps only")

    @property
    def width(self) -> int:
        return len(self.rows[0].cells)

    @classmethod
    def from_rows(cls, cogid: int, rows) -> "Alignment":
        """Builds an alignment, deleting columns that consist of gaps only."""
        rows = tuple(rows)
        if not rows:
            raise AlignmentMismatch(cogid, "alignment without rows")
        width = len(rows[0].cells)
        if any(len(row.cells) != width for row in rows):
            raise AlignmentMismatch(cogid, "rows have unequal width")
        keep = [column for column in range(width) if any(row.cells[column] != GAP for row in rows)]
        trimmed = tuple(replace(row, cells=tuple(row.cells[c] for c in keep)) for row in rows)
        return cls(cogid=cogid, rows=trimmed)

    def column(self, index: int) -> tuple[str, ...]:
        return tuple(row.cells[index] for row in self.rows)


def _pair_score(a: str, b: str) -> int:
    if a == b:
        return MATCH_SCORE
    if classify(a) == classify(b):
        return CLASS_SCORE
    return MISMATCH_SCORE


def pairwise_align(x, y) -> tuple[tuple[str, ...], tuple[str, ...], int]:
    """
    Global alignment of two segment sequences (Needleman-Wunsch).

    Args:
        x, y: Non-empty sequences of segment tokens.

    Returns:
        tuple: (aligned x, aligned y, score). Traceback prefers a match or
        mismatch over a gap in y, and a gap in y over a gap in x.
    """
    x, y = tuple(x), tuple(y)
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise TooSmall("pairwise alignment needs two non-empty sequences")

    matrix = np.zeros((n + 1, m + 1), dtype=np.int64)
    matrix[:, 0] = np.arange(n + 1) * GAP_SCORE
    matrix[0, :] = np.arange(m + 1) * GAP_SCORE
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            matrix[i, j] = max(
                matrix[i - 1, j - 1] + _pair_score(x[i - 1], y[j - 1]),
                matrix[i - 1, j] + GAP_SCORE,
                matrix[i, j - 1] + GAP_SCORE,
            )

    aligned_x, aligned_y = [], []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and matrix[i, j] == matrix[i - 1, j - 1] + _pair_score(x[i - 1], y[j - 1]):
            aligned_x.append(x[i - 1])
            aligned_y.append(y[j - 1])
            i, j = i - 1, j - 1
        elif i > 0 and (j == 0 or matrix[i, j] == matrix[i - 1, j] + GAP_SCORE):
            aligned_x.append(x[i - 1])
            aligned_y.append(GAP)
            i -= 1
        else:
            aligned_x.append(GAP)
            aligned_y.append(y[j - 1])
            j -= 1

    return tuple(reversed(aligned_x)), tuple(reversed(aligned_y)), int(matrix[n, m])


def _consensus(profile: list[list[str]]) -> list[str]:
    consensus = []
    for column in range(len(profile[0])):
        counts = Counter(row[column] for row in profile if row[column] != GAP)
        consensus.append(counts.most_common(1)[0][0])
    return consensus


def _doculect_key(doculects):
    if doculects is None:
        return lambda form: (form.doculect, form.id)
    order = {name: index for index, name in enumerate(doculects)}
    return lambda form: (order.get(form.doculect, len(order)), form.id)


def progressive_align(members, doculects=None, cogid: int | None = None) -> Alignment:
    """
    Multiple alignment of the word forms of one cognate set.

    Forms are merged one at a time into a growing profile, most similar
    first (average pairwise score), each aligned against the profile's
    consensus. Gaps in the profile are never removed once introduced.

    Args:
        members: Word forms of one cognate set (at least two).
        doculects: Doculect order used for tie-breaking and row order.
        cogid: Cognate set id, defaults to the members' cogid.

    Returns:
        Alignment: Rows in doculect order.
    """
    members = list(members)
    if len(members) < 2:
        raise TooSmall(f"progressive alignment needs at least two forms, got {len(members)}")
    cogid = members[0].cogid if cogid is None else cogid
    doculect_key = _doculect_key(doculects)
    members.sort(key=doculect_key)

    totals = [0] * len(members)
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            _, _, score = pairwise_align(members[a].tokens, members[b].tokens)
            totals[a] += score
            totals[b] += score
    # equal denominators, so integer totals order the averages
    guide = sorted(range(len(members)), key=lambda k: (-totals[k], doculect_key(members[k])))

    profile = [list(members[guide[0]].tokens)]
    for index in guide[1:]:
        aligned_consensus, aligned_new, _ = pairwise_align(_consensus(profile), members[index].tokens)
        merged = [[] for _ in profile]
        column = 0
        for consensus_cell in aligned_consensus:
            if consensus_cell == GAP:
                for row in merged:
                    row.append(GAP)
            else:
                for row, old in zip(merged, profile):
                    row.append(old[column])
                column += 1
        profile = merged + [list(aligned_new)]

    by_member = {guide[position]: cells for position, cells in enumerate(profile)}
    rows = [
        AlignmentRow(form_id=form.id, doculect=form.doculect, cells=tuple(by_member[k]))
        for k, form in enumerate(members)
    ]
    return Alignment.from_rows(cogid, rows)


def align_wordlist(wl) -> dict[int, Alignment]:
    """
    Alignments for every cognate set of a wordlist. Provided ALIGNMENT rows
    take precedence; the remaining sets are aligned progressively.
    """
    provided = wl.provided_alignments()
    alignments = {}
    computed = 0
    for cogid, members in wl.cognate_sets():
        if cogid in provided:
            alignments[cogid] = provided[cogid]
        else:
            alignments[cogid] = progressive_align(members, wl.doculects, cogid)
            computed += 1
    if computed:
        logger.info(f"Computed {computed} alignments, reused {len(alignments) - computed} provided alignments.")
    return alignments


def with_alignments(wl, alignments: dict[int, Alignment]):
    """Returns a copy of the wordlist whose forms carry the given alignment rows."""
    rows_by_form = {
        row.form_id: row.cells for alignment in alignments.values() for row in alignment.rows
    }
    forms = tuple(
        replace(form, alignment=rows_by_form[form.id]) if form.id in rows_by_form else form
        for form in wl.forms
    )
    return replace(wl, forms=forms)
