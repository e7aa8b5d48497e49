import concurrent.futures
import logging
import math
import os
from dataclasses import asdict, dataclass, replace

import pandas as pd

from Correspondence_Analysis.Pattern_Analyzer.detect import cogset_members, loo_gains, sites_by_cogset
from Correspondence_Analysis.Pattern_Analyzer.patterns import wordlist_patterns
from Correspondence_Analysis.Pattern_Analyzer.regularity import score_wordlist
from Correspondence_Analysis.Simulation.simulate import (
    SimulationConfig,
    derive_seed,
    inject_replacements,
    simulate_wordlist,
)
from Correspondence_Analysis.Wordlist_Processor.alignment import align_wordlist, with_alignments
from Correspondence_Analysis.Wordlist_Processor.wordlist import (
    Wordlist,
    meets_thresholds,
    read_wordlist,
    subsample,
)
from scoring_models.regularity_scores import SCORE_DECIMALS
from utils.exceptions import InvalidSample, RegularityError, TrialSkipped

logger = logging.getLogger(__name__)

SIMULATED = "sim"
REAL = "real"
SIMULATED_LABEL = "simulated"


@dataclass(frozen=True)
class TrialResult:
    dataset: str
    condition: str
    value: float
    run: int
    n_injected: int
    n_correct: int
    accuracy: float
    status: str = "ok"

    @property
    def key(self) -> tuple:
        return (self.dataset, self.condition, self.value, self.run)


def trial_seed(master: int, dataset: str, condition: str, value, run: int) -> int:
    return derive_seed(master, dataset, condition, value, run)


def count_identified(wl: Wordlist, replaced: dict) -> int:
    """Number of perturbed cognate sets whose best leave-one-out candidate is the injected form."""
    pc = wordlist_patterns(wl)
    members = cogset_members(wl)
    sites = sites_by_cogset(pc)
    correct = 0
    for cogid, form_id in replaced.items():
        result = loo_gains(sites[cogid], pc, members[cogid])
        if result.best == form_id:
            correct += 1
        else:
            logger.debug(f"Cognate set {cogid}: injected form {form_id}, best candidate {result.best}.")
    return correct


def _result(dataset, condition, value, run, n_injected, n_correct) -> TrialResult:
    return TrialResult(
        dataset=dataset,
        condition=condition,
        value=value,
        run=run,
        n_injected=n_injected,
        n_correct=n_correct,
        accuracy=n_correct / n_injected,
    )


def _skipped(dataset, condition, value, run) -> TrialResult:
    return TrialResult(dataset, condition, value, run, 0, 0, math.nan, status="skipped")


def _simulated_trial(task) -> TrialResult:
    cfg, rate, run, fraction = task
    seed = trial_seed(cfg.seed, SIMULATED_LABEL, SIMULATED, rate, run)
    wl, truth = simulate_wordlist(replace(cfg, seed=seed), noise=rate, fraction=fraction)
    if not truth.replaced:
        logger.warning(f"Simulated trial (noise {rate}, run {run}) has no injected form; skipped.")
        return _skipped(SIMULATED_LABEL, SIMULATED, rate, run)
    return _result(SIMULATED_LABEL, SIMULATED, rate, run, len(truth.replaced), count_identified(wl, truth.replaced))


def _injection_trial(task) -> TrialResult:
    label, wl, k, run, fraction, master = task
    seed = trial_seed(master, label, REAL, k, run)
    try:
        sample = subsample(wl, k, derive_seed(seed, "sample"))
        sample = with_alignments(sample, align_wordlist(sample))
        perturbed, replaced = inject_replacements(sample, fraction, derive_seed(seed, "replace"))
        if not replaced:
            raise TrialSkipped(run)
    except TrialSkipped as e:
        logger.warning(f"{label} (k={k}): {e}")
        return _skipped(label, REAL, k, run)
    return _result(label, REAL, k, run, len(replaced), count_identified(perturbed, replaced))


def _run_pool(function, tasks, jobs: int) -> list[TrialResult]:
    """Runs trials inline for jobs == 1, otherwise in a process pool; results sorted by trial key."""
    if jobs == 1 or len(tasks) <= 1:
        results = [function(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(function, task) for task in tasks]
            results = [future.result() for future in futures]
    return sorted(results, key=lambda r: r.key)


def default_jobs() -> int:
    return os.cpu_count() or 1


def run_simulated(
    cfg: SimulationConfig,
    rates,
    runs: int,
    fraction: float = 0.2,
    jobs: int = 1,
) -> list[TrialResult]:
    """
    Simulated experiment: for every noise rate and run, simulate a wordlist
    with noise and replacements, infer patterns and count the perturbed sets
    whose injected form is identified. The master seed is cfg.seed.
    """
    rates = [float(rate) for rate in rates]
    if any(not 0 <= rate <= 1 for rate in rates):
        raise InvalidSample(f"noise rates must lie in [0, 1], got {rates}")
    tasks = [(cfg, rate, run, fraction) for rate in rates for run in range(runs)]
    logger.info(f"Running {len(tasks)} simulated trials ({len(rates)} noise rates x {runs} runs, jobs={jobs}).")
    return _run_pool(_simulated_trial, tasks, jobs)


def run_injection(
    wl: Wordlist,
    k: int,
    runs: int,
    fraction: float = 0.2,
    seed: int = 0,
    label: str = "dataset",
    jobs: int = 1,
) -> list[TrialResult]:
    """
    Injection experiment on one wordlist: per run, subsample k doculects,
    align, replace one form in a fraction of the cognate sets and count how
    many injected forms are identified. Runs without an eligible cognate set
    are recorded as skipped.
    """
    if len(wl.doculects) < k:
        raise InvalidSample(f"{label} has {len(wl.doculects)} doculects, cannot sample {k}")
    tasks = [(label, wl, k, run, fraction, seed) for run in range(runs)]
    logger.info(f"Running {runs} injection trials on {label} (k={k}, jobs={jobs}).")
    return _run_pool(_injection_trial, tasks, jobs)


def regularity_sweep(wordlists: dict, thresholds: tuple[int, int] | None = None) -> tuple[pd.DataFrame, pd.DataFrame]:
    """
    Per dataset: normalized log-recurrence of every site and the dataset score.

    Args:
        wordlists (dict): label -> Wordlist or path of a wordlist TSV.
        thresholds: (min_doculects, min_concepts); datasets below them are skipped.

    Returns:
        tuple: (site table DATASET, COGID, COLUMN, RECURRENCE, NORMALIZED_LOG;
        score table DATASET, N_SITES, SCORE). Datasets that fail are logged and left out.
    """
    site_frames, scores = [], []
    for label, source in wordlists.items():
        try:
            wl = read_wordlist(source) if isinstance(source, str) else source
            if thresholds is not None and not meets_thresholds(wl, *thresholds):
                logger.warning(f"Skipping {label}: below dataset thresholds.")
                continue
            result = score_wordlist(wl)
        except RegularityError as e:
            logger.error(f"Skipping {label}: {e}", exc_info=True)
            continue
        site_frames.append(result.site_frame.assign(DATASET=label))
        scores.append({"DATASET": label, "N_SITES": result.total_sites, "SCORE": round(result.dataset_score, SCORE_DECIMALS)})

    site_columns = ["DATASET", "COGID", "COLUMN", "RECURRENCE", "NORMALIZED_LOG"]
    sites = pd.concat(site_frames, ignore_index=True)[site_columns] if site_frames else pd.DataFrame(columns=site_columns)
    return sites, pd.DataFrame.from_records(scores, columns=["DATASET", "N_SITES", "SCORE"])


def trials_frame(trials) -> pd.DataFrame:
    frame = pd.DataFrame.from_records(
        [asdict(trial) for trial in trials],
        columns=["dataset", "condition", "value", "run", "n_injected", "n_correct", "accuracy", "status"],
    )
    frame.columns = [column.upper() for column in frame.columns]
    return frame


def summarize(trials) -> pd.DataFrame:
    """Mean and standard deviation of accuracy per (dataset, condition, value), skipped trials counted apart."""
    frame = trials_frame(trials)
    columns = ["DATASET", "CONDITION", "VALUE", "N_TRIALS", "N_SKIPPED", "MEAN", "SD"]
    if frame.empty:
        return pd.DataFrame(columns=columns)
    keys = ["DATASET", "CONDITION", "VALUE"]
    counts = frame.groupby(keys).agg(
        N_TRIALS=("RUN", "size"),
        N_SKIPPED=("STATUS", lambda status: int((status == "skipped").sum())),
    )
    stats = frame[frame["STATUS"] == "ok"].groupby(keys)["ACCURACY"].agg(MEAN="mean", SD="std")
    summary = counts.join(stats, how="left").reset_index()
    summary["SD"] = summary["SD"].fillna(0.0).where(summary["MEAN"].notna())
    return summary[columns].round(SCORE_DECIMALS)


def plot_frames(trials, sweep=None) -> dict[str, pd.DataFrame]:
    """Long-format tables for the accuracy and regularity plots, keyed by file name."""
    frame = trials_frame(trials)
    ok = frame[frame["STATUS"] == "ok"]
    plots = {}
    simulated = ok[ok["CONDITION"] == SIMULATED]
    if not simulated.empty:
        plots["accuracy_by_noise"] = simulated.rename(columns={"VALUE": "NOISE"})[["DATASET", "NOISE", "RUN", "ACCURACY"]]
    real = ok[ok["CONDITION"] == REAL]
    if not real.empty:
        real = real.rename(columns={"VALUE": "SAMPLE_SIZE"})[["DATASET", "SAMPLE_SIZE", "RUN", "ACCURACY"]]
        plots["accuracy_by_sample"] = real.astype({"SAMPLE_SIZE": int})
    if sweep is not None:
        plots["site_recurrence"], plots["dataset_scores"] = sweep
    return plots


def write_experiment(writer, trials, summary: pd.DataFrame, plotdata: dict):
    """trials, summary and plotdata/<name> through a TableWriter."""
    if trials is not None:
        writer.write_table("trials", trials_frame(trials))
    if summary is not None:
        writer.write_table("summary", summary)
    for name, frame in plotdata.items():
        writer.write_table(os.path.join("plotdata", name), frame)
