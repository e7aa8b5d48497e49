import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from Correspondence_Analysis.Pattern_Analyzer.patterns import (
    MISSING,
    PatternCollection,
    Site,
    infer_patterns,
    site_recurrence,
)
from Correspondence_Analysis.Wordlist_Processor.wordlist import Wordlist
from scoring_models.regularity_scores import SCORE_DECIMALS, cogset_score
from utils.exceptions import TooSmall, UnknownMember

logger = logging.getLogger(__name__)

MIN_CONCRETE = 2
MIN_MEMBERS_FOR_BEST = 3
# gains closer than this count as equal when picking the best word
_GAIN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DetectionResult:
    cogid: int
    baseline: float
    per_word: dict = field(default_factory=dict)
    best: int | None = None
    best_gain: float = 0.0
    best_doculect: str | None = None


def mask_word(sites, doculect: str, doculects) -> list[Site]:
    """
    Sets one doculect's entries to MISSING in every site of a cognate set.
    Sites left with fewer than two concrete entries carry no correspondence
    evidence and are dropped.

    Raises:
        UnknownMember: The doculect has no row in the set.
    """
    doculects = tuple(doculects)
    sites = list(sites)
    if doculect not in doculects:
        raise UnknownMember(f"'{doculect}' is not a doculect of this dataset")
    index = doculects.index(doculect)
    if all(site.values[index] == MISSING for site in sites):
        raise UnknownMember(f"'{doculect}' has no word in this cognate set")

    masked = []
    for site in sites:
        values = site.values[:index] + (MISSING,) + site.values[index + 1:]
        if sum(1 for value in values if value != MISSING) >= MIN_CONCRETE:
            masked.append(Site(site_id=site.site_id, values=values))
    return masked


def _mean_log_recurrence(sites, pc: PatternCollection) -> float:
    return float(np.mean([math.log(site_recurrence(site, pc)) for site in sites]))


def _result(cogid: int, baseline: float, gains: dict, members: dict) -> DetectionResult:
    doculect_of = {form_id: doculect for doculect, form_id in members.items()}
    best, best_gain = None, 0.0
    if gains:
        top = max(gains.values())
        candidates = sorted(form_id for form_id, gain in gains.items() if gain >= top - _GAIN_TOLERANCE)
        if len(members) >= MIN_MEMBERS_FOR_BEST and top > _GAIN_TOLERANCE:
            best, best_gain = candidates[0], gains[candidates[0]]
    return DetectionResult(
        cogid=cogid,
        baseline=baseline,
        per_word=dict(gains),
        best=best,
        best_gain=best_gain,
        best_doculect=doculect_of.get(best),
    )


def _check_members(sites, members: dict) -> int:
    sites = list(sites)
    if not sites:
        raise TooSmall("cognate set without sites")
    if len(members) < 2:
        raise TooSmall(f"cognate set {sites[0].cogid} has {len(members)} member(s), need at least 2")
    return sites[0].cogid


def loo_gains(sites, pc: PatternCollection, members: dict) -> DetectionResult:
    """
    Leave-one-out gains of one cognate set against a fixed pattern collection.

    Args:
        sites: The sites of the cognate set, as extracted for pc.
        pc (PatternCollection): Patterns inferred from the whole (perturbed) wordlist.
        members (dict): doculect -> word form id of every member.

    Returns:
        DetectionResult: gain per word = mean log-recurrence of the masked sites
        minus the baseline mean log-recurrence. Words whose masking drops every
        site get no entry.
    """
    sites = list(sites)
    cogid = _check_members(sites, members)
    baseline = _mean_log_recurrence(sites, pc)

    gains = {}
    for doculect, form_id in members.items():
        masked = mask_word(sites, doculect, pc.doculects)
        if masked:
            gains[form_id] = _mean_log_recurrence(masked, pc) - baseline
    return _result(cogid, baseline, gains, members)


def loo_gains_reinferred(sites, pc: PatternCollection, members: dict) -> DetectionResult:
    """
    Same as loo_gains, but every masking re-infers the patterns of the whole
    dataset with the masked set in place. Quadratic in practice; small data only.
    """
    sites = list(sites)
    cogid = _check_members(sites, members)
    baseline = _mean_log_recurrence(sites, pc)
    others = [site for site in pc.sites if site.cogid != cogid]

    gains = {}
    for doculect, form_id in members.items():
        masked = mask_word(sites, doculect, pc.doculects)
        if not masked:
            continue
        rescored = infer_patterns(others + masked, pc.doculects)
        gains[form_id] = _mean_log_recurrence(masked, rescored) - baseline
    return _result(cogid, baseline, gains, members)


def cogset_members(wl: Wordlist) -> dict[int, dict[str, int]]:
    """cogid -> {doculect: form id} for every cognate set of at least two members."""
    return {cogid: {form.doculect: form.id for form in members} for cogid, members in wl.cognate_sets()}


def sites_by_cogset(pc: PatternCollection) -> dict[int, list[Site]]:
    grouped: dict[int, list[Site]] = {}
    for site in pc.sites:
        grouped.setdefault(site.cogid, []).append(site)
    return grouped


def detect_irregular(
    wl: Wordlist,
    pc: PatternCollection,
    score_threshold: float = math.inf,
    reinfer: bool = False,
) -> list[DetectionResult]:
    """
    Leave-one-out detection for every cognate set whose score is below the
    threshold, least regular (lowest baseline) first.
    """
    members = cogset_members(wl)
    compute = loo_gains_reinferred if reinfer else loo_gains
    results = []
    for cogid, sites in sorted(sites_by_cogset(pc).items()):
        if cogid not in members:
            logger.warning(f"Cognate set {cogid} has sites but no members in the wordlist; skipped.")
            continue
        score = cogset_score([site_recurrence(site, pc) for site in sites])
        if score >= score_threshold:
            continue
        results.append(compute(sites, pc, members[cogid]))

    results.sort(key=lambda r: (r.baseline, r.cogid))
    flagged = sum(1 for r in results if r.best is not None)
    logger.info(f"Checked {len(results)} cognate sets, {flagged} with a candidate irregular word.")
    return results


def detection_frame(results) -> pd.DataFrame:
    records = [
        {
            "COGID": r.cogid,
            "BASELINE": round(r.baseline, SCORE_DECIMALS),
            "BEST_FORM_ID": r.best if r.best is not None else "",
            "BEST_DOCULECT": r.best_doculect or "",
            "GAIN": round(r.best_gain, SCORE_DECIMALS),
        }
        for r in results
    ]
    return pd.DataFrame.from_records(records, columns=["COGID", "BASELINE", "BEST_FORM_ID", "BEST_DOCULECT", "GAIN"])


def gains_frame(results) -> pd.DataFrame:
    records = [
        {"COGID": r.cogid, "FORM_ID": form_id, "GAIN": round(gain, SCORE_DECIMALS)}
        for r in results
        for form_id, gain in sorted(r.per_word.items())
    ]
    return pd.DataFrame.from_records(records, columns=["COGID", "FORM_ID", "GAIN"])
