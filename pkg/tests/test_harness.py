import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from Correspondence_Analysis.Simulation.harness import (
    REAL,
    SIMULATED,
    default_jobs,
    plot_frames,
    regularity_sweep,
    run_injection,
    run_simulated,
    summarize,
    trials_frame,
    write_experiment,
)
from Correspondence_Analysis.Simulation.simulate import SimulationConfig, simulate_wordlist
from Correspondence_Analysis.storage.table_writer import TableWriter
from utils.exceptions import InvalidSample

SMALL = SimulationConfig(n_concepts=30, n_daughters=6, seed=4)


def test_simulated_runs_are_reproducible():
    first = run_simulated(SMALL, [0.0, 0.2], runs=2)
    second = run_simulated(SMALL, [0.0, 0.2], runs=2)
    assert first == second
    assert [trial.key for trial in first] == sorted(trial.key for trial in first)
    assert all(trial.n_injected == 6 for trial in first)
    assert all(trial.condition == SIMULATED for trial in first)


def test_process_pool_matches_inline_runs():
    assert run_simulated(SMALL, [0.1], runs=3, jobs=2) == run_simulated(SMALL, [0.1], runs=3, jobs=1)


def test_rates_must_be_proportions():
    with pytest.raises(InvalidSample):
        run_simulated(SMALL, [1.5], runs=1)


def test_clean_simulations_are_identified():
    trials = run_simulated(SimulationConfig(n_concepts=60, seed=2), [0.0], runs=3)
    assert np.mean([trial.accuracy for trial in trials]) >= 0.8


def test_summary_matches_the_trials():
    trials = run_simulated(SMALL, [0.0, 0.3], runs=3)
    summary = summarize(trials)
    assert summary.columns.tolist() == ["DATASET", "CONDITION", "VALUE", "N_TRIALS", "N_SKIPPED", "MEAN", "SD"]
    for rate in (0.0, 0.3):
        accuracies = [trial.accuracy for trial in trials if trial.value == rate]
        row = summary[summary["VALUE"] == rate].iloc[0]
        assert row["N_TRIALS"] == 3
        assert row["N_SKIPPED"] == 0
        assert row["MEAN"] == pytest.approx(round(np.mean(accuracies), 4))
        assert row["SD"] == pytest.approx(round(np.std(accuracies, ddof=1), 4))


def test_injection_trials_on_simulated_data():
    wl, _ = simulate_wordlist(SimulationConfig(n_concepts=40, seed=6), noise=0.05)
    trials = run_injection(wl, 4, runs=3, seed=1, label="sim40")
    assert [trial.run for trial in trials] == [0, 1, 2]
    assert all(trial.condition == REAL and trial.value == 4 for trial in trials)
    assert all(trial.n_injected == 8 for trial in trials)
    assert all(0 <= trial.accuracy <= 1 for trial in trials)
    assert trials == run_injection(wl, 4, runs=3, seed=1, label="sim40")


def test_injection_needs_enough_doculects(toy_wordlist):
    with pytest.raises(InvalidSample):
        run_injection(toy_wordlist, 5, runs=1)


def test_trials_without_eligible_sets_are_skipped(toy_wordlist):
    trials = run_injection(toy_wordlist, 2, runs=3, label="toy")
    assert all(trial.status == "skipped" for trial in trials)
    assert all(trial.n_injected == 0 and math.isnan(trial.accuracy) for trial in trials)
    row = summarize(trials).iloc[0]
    assert (row["N_TRIALS"], row["N_SKIPPED"]) == (3, 3)
    assert math.isnan(row["MEAN"])
    assert "accuracy_by_sample" not in plot_frames(trials)


def test_regularity_sweep(toy_wordlist, toy_file, tmp_path):
    sites, scores = regularity_sweep(
        {"toy": toy_wordlist, "file": toy_file, "missing": str(tmp_path / "missing.tsv")}
    )
    assert scores["DATASET"].tolist() == ["toy", "file"]
    assert scores["N_SITES"].tolist() == [11, 11]
    assert scores["SCORE"].iloc[0] == scores["SCORE"].iloc[1]
    assert sites.columns.tolist() == ["DATASET", "COGID", "COLUMN", "RECURRENCE", "NORMALIZED_LOG"]
    assert len(sites) == 22


def test_regularity_sweep_thresholds(toy_wordlist):
    sites, scores = regularity_sweep({"toy": toy_wordlist}, thresholds=(5, 1))
    assert sites.empty and scores.empty
    assert scores.columns.tolist() == ["DATASET", "N_SITES", "SCORE"]


def test_experiment_tables(toy_wordlist, tmp_path):
    trials = run_simulated(SMALL, [0.0], runs=2)
    plots = plot_frames(trials, regularity_sweep({"toy": toy_wordlist}))
    assert set(plots) == {"accuracy_by_noise", "site_recurrence", "dataset_scores"}
    assert plots["accuracy_by_noise"].columns.tolist() == ["DATASET", "NOISE", "RUN", "ACCURACY"]

    out = tmp_path / "experiment"
    with TableWriter(str(out)) as writer:
        write_experiment(writer, trials, summarize(trials), plots)
    assert (out / "trials.tsv").exists()
    assert (out / "summary.tsv").exists()
    assert (out / "plotdata" / "accuracy_by_noise.tsv").exists()
    assert trials_frame(trials).columns[0] == "DATASET"


@pytest.mark.slow
def test_accuracy_degrades_with_noise():
    rates = [round(0.05 * step, 2) for step in range(11)]
    trials = run_simulated(SimulationConfig(seed=0), rates, runs=10, jobs=default_jobs())
    summary = summarize(trials).set_index("VALUE")["MEAN"]
    assert summary[0.0] >= 0.95
    assert 0.75 <= summary[0.1] <= 1.0
    assert summary[0.4] <= 0.25
    assert summary[0.5] <= 0.25
    correlation, _ = spearmanr(summary.index, summary.values)
    assert correlation <= -0.9


@pytest.mark.slow
def test_smaller_samples_are_easier():
    wl, _ = simulate_wordlist(SimulationConfig(n_daughters=15, seed=0), noise=0.1)
    jobs = default_jobs()
    five = run_injection(wl, 5, runs=20, seed=3, jobs=jobs)
    ten = run_injection(wl, 10, runs=20, seed=3, jobs=jobs)
    assert np.mean([t.accuracy for t in five]) >= np.mean([t.accuracy for t in ten])


def test_sweep_continues_past_an_unreadable_dataset(toy_text, toy_file, tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_bytes(toy_text.encode("utf-8") + b"12\tL4\tD\tk \xff\t4\tk \xff\n")
    sites, scores = regularity_sweep({"bad": str(bad), "good": toy_file})
    assert scores["DATASET"].tolist() == ["good"]
    assert set(sites["DATASET"]) == {"good"}
