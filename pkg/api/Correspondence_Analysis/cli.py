import argparse
import logging
import math
import os
import sys

import pandas as pd

from Correspondence_Analysis.config import config_loader
from Correspondence_Analysis.Pattern_Analyzer.detect import detect_irregular, detection_frame, gains_frame
from Correspondence_Analysis.Pattern_Analyzer.patterns import assignment_frame, patterns_frame, wordlist_patterns
from Correspondence_Analysis.Pattern_Analyzer.regularity import doculect_profile, report
from Correspondence_Analysis.Simulation.harness import (
    default_jobs,
    plot_frames,
    regularity_sweep,
    run_injection,
    run_simulated,
    summarize,
    write_experiment,
)
from Correspondence_Analysis.Simulation.simulate import SimulationConfig, simulate_wordlist
from Correspondence_Analysis.storage.table_writer import FORMATS, TableWriter, render_table
from Correspondence_Analysis.Wordlist_Processor.alignment import align_wordlist, with_alignments
from Correspondence_Analysis.Wordlist_Processor.wordlist import meets_thresholds, read_wordlist, serialize_wordlist
from scoring_models.regularity_scores import SCORE_DECIMALS
from utils.exceptions import RegularityError, UsageError
from utils.logger_config import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; usage errors here map to exit code 1."""

    def error(self, message):
        raise UsageError(message)


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML file merged over the packaged settings")
    common.add_argument("--log-dir", help="directory for a timestamped log file")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--jobs", type=int, help="worker processes (default: available cores)")
    common.add_argument("--format", choices=FORMATS, help="table format (default from settings)")
    common.add_argument("--out", help="output directory; tables go to standard output otherwise")
    common.add_argument("--seed", type=int, help="master seed for all randomness (default 0)")
    return common


def _simulation_options() -> argparse.ArgumentParser:
    simulation = _Parser(add_help=False)
    simulation.add_argument("--concepts", type=int, help="number of concepts")
    simulation.add_argument("--consonants", type=int, help="consonant inventory size")
    simulation.add_argument("--vowels", type=int, help="vowel inventory size")
    simulation.add_argument("--daughters", type=int, help="number of daughter languages")
    simulation.add_argument("--max-mergers", type=int, help="maximum mergers per daughter")
    return simulation


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    simulation = _simulation_options()

    parser = _Parser(prog="lingreg", description="Regularity of sound correspondence patterns in wordlists")
    commands = parser.add_subparsers(dest="command", required=True)

    align = commands.add_parser("align", parents=[common], help="align every cognate set")
    align.add_argument("--input", required=True)

    patterns = commands.add_parser("patterns", parents=[common], help="infer correspondence patterns")
    patterns.add_argument("--input", required=True)

    regularity = commands.add_parser("regularity", parents=[common], help="score regularity")
    regularity.add_argument("--input", required=True)
    regularity.add_argument("--by-doculect", action="store_true", help="score the dataset without each doculect")

    detect = commands.add_parser("detect", parents=[common], help="leave-one-out irregular word detection")
    detect.add_argument("--input", required=True)
    detect.add_argument("--threshold", type=float, help="only sets scoring below this (default: all)")
    detect.add_argument("--reinfer", action="store_true", default=None, help="re-infer patterns per masking")
    detect.add_argument("--all-gains", action="store_true", help="also write the gain of every word")

    simulate = commands.add_parser("simulate", parents=[common, simulation], help="simulate a wordlist")
    simulate.add_argument("--noise", type=float, default=0.0, help="fraction of phones replaced")
    simulate.add_argument("--fraction", type=float, default=0.0, help="fraction of cognate sets with a replaced word")

    evaluate = commands.add_parser("evaluate", parents=[common, simulation], help="run the validation experiments")
    evaluate.add_argument("--mode", choices=("sim", "inject", "sweep"), required=True)
    evaluate.add_argument("--runs", type=int)
    evaluate.add_argument("--sample-size", type=int, nargs="+")
    evaluate.add_argument("--noise", type=float, nargs="+")
    evaluate.add_argument("--fraction", type=float)
    evaluate.add_argument("--input", nargs="+", help="wordlist TSVs (inject and sweep modes)")
    return parser


def _emit(writer, name: str, frame: pd.DataFrame, fmt: str, to_stdout: bool = True):
    if writer is not None:
        writer.write_table(name, frame)
    elif to_stdout:
        sys.stdout.write(render_table(frame, fmt))


def _seed(args, settings) -> int:
    return args.seed if args.seed is not None else settings.get("simulation", {}).get("seed", 0)


def _jobs(args, settings) -> int:
    jobs = args.jobs if args.jobs is not None else settings.get("experiment", {}).get("jobs") or default_jobs()
    if jobs < 1:
        raise UsageError(f"--jobs must be positive, got {jobs}")
    return jobs


def _thresholds(settings):
    filters = settings.get("dataset_filters", {})
    if not filters.get("enabled", False):
        return None
    return filters.get("min_doculects", 10), filters.get("min_concepts", 140)


def _simulation_config(args, settings) -> SimulationConfig:
    return SimulationConfig.from_settings(
        settings.get("simulation", {}),
        n_concepts=args.concepts,
        n_consonants=args.consonants,
        n_vowels=args.vowels,
        n_daughters=args.daughters,
        max_mergers=args.max_mergers,
        seed=_seed(args, settings),
    )


def _labelled_inputs(paths) -> dict[str, str]:
    labelled = {}
    for path in paths:
        label = os.path.splitext(os.path.basename(path))[0]
        if label in labelled:
            raise UsageError(f"two inputs share the dataset label '{label}'")
        labelled[label] = path
    return labelled


def run_align(args, settings, writer, fmt):
    wl = read_wordlist(args.input)
    aligned = with_alignments(wl, align_wordlist(wl))
    text = serialize_wordlist(aligned)
    if writer is not None:
        writer.write_text("wordlist.tsv", text)
    else:
        sys.stdout.write(text)


def run_patterns(args, settings, writer, fmt):
    wl = read_wordlist(args.input)
    pc = wordlist_patterns(wl)
    _emit(writer, "patterns", patterns_frame(pc), fmt)
    _emit(writer, "assignments", assignment_frame(pc), fmt, to_stdout=False)


def run_regularity(args, settings, writer, fmt):
    wl = read_wordlist(args.input)
    alignments = align_wordlist(wl)
    result = report(wl, wordlist_patterns(wl, alignments))
    sys.stdout.write(f"{result.dataset_score:.{SCORE_DECIMALS}f}\n")
    if writer is not None:
        writer.write_table("cogsets", result.cogset_frame())
        writer.write_table("sites", result.site_frame)
    if args.by_doculect:
        _emit(writer, "doculects", doculect_profile(wl, alignments), fmt)


def run_detect(args, settings, writer, fmt):
    detection = settings.get("detection", {})
    threshold = args.threshold if args.threshold is not None else float(detection.get("threshold", math.inf))
    reinfer = args.reinfer if args.reinfer is not None else bool(detection.get("reinfer", False))
    wl = read_wordlist(args.input)
    results = detect_irregular(wl, wordlist_patterns(wl), threshold, reinfer=reinfer)
    _emit(writer, "detections", detection_frame(results), fmt)
    if args.all_gains:
        _emit(writer, "gains", gains_frame(results), fmt)


def run_simulate(args, settings, writer, fmt):
    cfg = _simulation_config(args, settings)
    wl, truth = simulate_wordlist(cfg, noise=args.noise, fraction=args.fraction)
    text = serialize_wordlist(wl)
    if writer is None:
        sys.stdout.write(text)
        return
    writer.write_text("wordlist.tsv", text)
    writer.write_table(
        "truth",
        pd.DataFrame(sorted(truth.replaced.items()), columns=["COGID", "REPLACED_FORM_ID"]),
    )
    writer.write_table(
        "noise",
        pd.DataFrame(sorted(truth.noise_positions), columns=["FORM_ID", "INDEX"]),
    )


def run_evaluate(args, settings, writer, fmt):
    experiment = settings.get("experiment", {})
    runs = args.runs if args.runs is not None else experiment.get("runs", 10)
    fraction = args.fraction if args.fraction is not None else experiment.get("fraction", 0.2)
    jobs = _jobs(args, settings)
    if args.mode != "sim" and not args.input:
        raise UsageError(f"--mode {args.mode} needs --input")

    trials, sweep = None, None
    if args.mode == "sim":
        rates = args.noise or experiment.get("noise_rates", [])
        trials = run_simulated(_simulation_config(args, settings), rates, runs, fraction, jobs=jobs)
    elif args.mode == "inject":
        sizes = args.sample_size or experiment.get("sample_sizes", [5, 10])
        thresholds = _thresholds(settings)
        trials = []
        for label, path in _labelled_inputs(args.input).items():
            wl = read_wordlist(path)
            if thresholds is not None and not meets_thresholds(wl, *thresholds):
                logger.warning(f"Skipping {label}: below dataset thresholds.")
                continue
            for k in sizes:
                if len(wl.doculects) < k:
                    logger.warning(f"Skipping {label} for k={k}: only {len(wl.doculects)} doculects.")
                    continue
                trials.extend(run_injection(wl, k, runs, fraction, seed=_seed(args, settings), label=label, jobs=jobs))
    else:
        sweep = regularity_sweep(_labelled_inputs(args.input), _thresholds(settings))

    summary = summarize(trials) if trials is not None else None
    plots = plot_frames(trials or [], sweep)
    if writer is not None:
        write_experiment(writer, trials, summary, plots)
    elif summary is not None:
        sys.stdout.write(render_table(summary, fmt))
    else:
        sys.stdout.write(render_table(sweep[1], fmt))


COMMANDS = {
    "align": run_align,
    "patterns": run_patterns,
    "regularity": run_regularity,
    "detect": run_detect,
    "simulate": run_simulate,
    "evaluate": run_evaluate,
}


def main(argv=None) -> int:
    """
    Runs one subcommand.

    Returns:
        int: 0 on success, 1 on usage or configuration errors, 2 on data errors.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = config_loader.load_config(args.config) if args.config else config_loader.CONFIG
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return e.exit_code
    except RegularityError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_OK

    log_settings = settings.get("logging", {})
    setup_logging(args.log_dir or log_settings.get("log_dir"), args.log_level or log_settings.get("level"))
    fmt = args.format or settings.get("output", {}).get("format", "tsv")
    logger.info(f"Running '{args.command}'.")

    try:
        if args.out:
            decimals = settings.get("output", {}).get("decimals", SCORE_DECIMALS)
            with TableWriter(args.out, fmt, decimals) as writer:
                COMMANDS[args.command](args, settings, writer, fmt)
        else:
            COMMANDS[args.command](args, settings, None, fmt)
    except RegularityError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected failure in '{args.command}': {e}", exc_info=True)
        return 2

    logger.info(f"'{args.command}' finished.")
    return EXIT_OK
