import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from Correspondence_Analysis.Pattern_Analyzer.patterns import (
    PatternCollection,
    site_recurrence,
    wordlist_patterns,
)
from Correspondence_Analysis.Wordlist_Processor.alignment import Alignment, align_wordlist
from Correspondence_Analysis.Wordlist_Processor.wordlist import Wordlist
from scoring_models.regularity_scores import (
    SCORE_DECIMALS,
    cogset_score,
    dataset_score,
    normalized_log_recurrences,
)
from utils.exceptions import DataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CogsetRegularity:
    recurrences: tuple[int, ...]
    score: float

    @property
    def n_sites(self) -> int:
        return len(self.recurrences)


@dataclass(frozen=True)
class RegularityReport:
    """
    Regularity of one dataset.

    per_cogset maps cogid to the recurrences of its sites (in column order)
    and their geometric mean. site_frame holds one row per site with the
    normalized log-recurrence ln(r / total_sites).
    """

    dataset_score: float
    per_cogset: dict
    total_sites: int
    site_frame: pd.DataFrame

    def cogset_frame(self) -> pd.DataFrame:
        records = [
            {"COGID": cogid, "N_SITES": entry.n_sites, "SCORE": round(entry.score, SCORE_DECIMALS)}
            for cogid, entry in sorted(self.per_cogset.items())
        ]
        return pd.DataFrame.from_records(records, columns=["COGID", "N_SITES", "SCORE"])


def report(wl: Wordlist, pc: PatternCollection) -> RegularityReport:
    """Scores every site, cognate set and the dataset against a pattern collection built from wl."""
    by_cogset: dict[int, list[int]] = {}
    records = []
    for site in pc.sites:
        recurrence = site_recurrence(site, pc)
        by_cogset.setdefault(site.cogid, []).append(recurrence)
        records.append({"COGID": site.cogid, "COLUMN": site.column + 1, "RECURRENCE": recurrence})

    all_recurrences = [record["RECURRENCE"] for record in records]
    site_frame = pd.DataFrame.from_records(records, columns=["COGID", "COLUMN", "RECURRENCE"])
    site_frame["NORMALIZED_LOG"] = np.round(
        normalized_log_recurrences(all_recurrences, pc.total_sites), SCORE_DECIMALS
    )

    per_cogset = {
        cogid: CogsetRegularity(recurrences=tuple(recurrences), score=cogset_score(recurrences))
        for cogid, recurrences in by_cogset.items()
    }
    score = dataset_score(all_recurrences, pc.total_sites)
    logger.info(
        f"Dataset score {score:.{SCORE_DECIMALS}f} over {pc.total_sites} sites in {len(per_cogset)} cognate sets "
        f"({len(wl.doculects)} doculects)."
    )
    return RegularityReport(
        dataset_score=score,
        per_cogset=per_cogset,
        total_sites=pc.total_sites,
        site_frame=site_frame,
    )


def score_wordlist(wl: Wordlist, alignments=None) -> RegularityReport:
    return report(wl, wordlist_patterns(wl, alignments))


def _without_doculect(wl: Wordlist, alignments: dict, doculect: str) -> tuple[Wordlist, dict]:
    reduced = Wordlist(
        doculects=tuple(d for d in wl.doculects if d != doculect),
        forms=tuple(form for form in wl.forms if form.doculect != doculect),
    )
    kept = {}
    for cogid, alignment in alignments.items():
        rows = [row for row in alignment.rows if row.doculect != doculect]
        if len(rows) >= 2:
            kept[cogid] = Alignment.from_rows(cogid, rows)
    return reduced, kept


def doculect_profile(wl: Wordlist, alignments=None) -> pd.DataFrame:
    """
    Dataset score after leaving out each doculect in turn.

    Alignments of the full wordlist are reused with the doculect's rows
    removed, so the profile measures the doculect and not realignment
    effects. A positive DELTA means the dataset is more regular without it.
    """
    if alignments is None:
        alignments = align_wordlist(wl)
    full = score_wordlist(wl, alignments).dataset_score

    records = []
    for doculect in wl.doculects:
        reduced, kept = _without_doculect(wl, alignments, doculect)
        try:
            score = score_wordlist(reduced, kept).dataset_score
        except DataError as e:
            logger.warning(f"Dataset without '{doculect}' cannot be scored: {e}")
            score = float("nan")
        records.append(
            {
                "DOCULECT": doculect,
                "SCORE_WITHOUT": round(score, SCORE_DECIMALS),
                "DELTA": round(score - full, SCORE_DECIMALS),
            }
        )
    return pd.DataFrame.from_records(records, columns=["DOCULECT", "SCORE_WITHOUT", "DELTA"])
