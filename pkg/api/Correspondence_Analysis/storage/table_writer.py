import json
import logging
import os

import pandas as pd

from scoring_models.regularity_scores import SCORE_DECIMALS
from utils.exceptions import UsageError

logger = logging.getLogger(__name__)

FORMATS = ("tsv", "json")


class TableWriter:
    """
    Writes result tables below one output directory and remembers every file
    and directory it created, so that a failed command can remove its partial
    outputs. Used as a context manager: an exception inside the block triggers
    the cleanup.
    """

    def __init__(self, out_dir: str, fmt: str = "tsv", decimals: int = SCORE_DECIMALS):
        if fmt not in FORMATS:
            raise UsageError(f"unknown output format '{fmt}', expected one of {FORMATS}")
        self.out_dir = out_dir
        self.fmt = fmt
        self.decimals = decimals
        self.created_files: list[str] = []
        self.created_dirs: list[str] = []

    def __enter__(self):
        self._ensure_dir(self.out_dir)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.cleanup()
        return False

    def _ensure_dir(self, path: str):
        missing = []
        while path and not os.path.isdir(path):
            missing.append(path)
            path = os.path.dirname(path)
        for directory in reversed(missing):
            os.makedirs(directory, exist_ok=True)
            self.created_dirs.append(directory)

    def _path(self, name: str) -> str:
        path = os.path.join(self.out_dir, f"{name}.{self.fmt}")
        self._ensure_dir(os.path.dirname(path))
        return path

    def write_table(self, name: str, frame: pd.DataFrame) -> str:
        """
        Saves a DataFrame as <name>.tsv or <name>.json (list of records).
        Floats are rounded to the configured decimals in both formats.
        """
        frame = frame.round(self.decimals)
        path = self._path(name)
        self.created_files.append(path)
        if self.fmt == "tsv":
            frame.to_csv(path, sep="\t", index=False, lineterminator="\n")
        else:
            records = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(records, f, ensure_ascii=False, indent=4)
        logger.info(f"Saved {len(frame)} rows to {path}")
        return path

    def write_text(self, filename: str, text: str) -> str:
        path = os.path.join(self.out_dir, filename)
        self._ensure_dir(os.path.dirname(path))
        self.created_files.append(path)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info(f"Saved {path}")
        return path

    def cleanup(self):
        for path in reversed(self.created_files):
            try:
                os.remove(path)
            except FileNotFoundError:
                pass
            except OSError as e:
                logger.error(f"Could not remove partial output {path}: {e}", exc_info=True)
        for directory in reversed(self.created_dirs):
            try:
                os.rmdir(directory)
            except OSError:
                logger.warning(f"Output directory {directory} is not empty; left in place.")
        if self.created_files:
            logger.warning(f"Removed {len(self.created_files)} partial output file(s) from {self.out_dir}.")
        self.created_files.clear()
        self.created_dirs.clear()


def render_table(frame: pd.DataFrame, fmt: str = "tsv", decimals: int = SCORE_DECIMALS) -> str:
    """Same rendering as TableWriter, for printing a table to standard output."""
    frame = frame.round(decimals)
    if fmt == "json":
        records = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
        return json.dumps(records, ensure_ascii=False, indent=4) + "\n"
    return frame.to_csv(sep="\t", index=False, lineterminator="\n")
