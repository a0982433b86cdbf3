"""
CSV and manifest output for experiment runs.

Every CSV starts with a `# col1,col2,...` comment line naming its columns.
Manifests are flat `key=value` files with sorted keys and no timestamps, so
two runs with the same parameters produce byte-identical output.
"""
import csv
import io
import logging
import os
import tempfile
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

FALLBACK_VERSION = "0.1.0"


def code_version() -> str:
    try:
        return version("wormhole-lab")
    except PackageNotFoundError:
        return FALLBACK_VERSION


CODE_VERSION = code_version()

SCAN_COLUMNS = ("quantity", "fermion", "time", "real", "imag")
PROTOCOL_COLUMNS = ("mode", "beta", "t0", "t1", "mu", "mutual_info_bits")


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def scan_rows(quantity: str, fermion: int, times: Sequence[float], values: Sequence[complex]) -> List[tuple]:
    """Rows of the scan CSV schema for one complex series."""
    return [(quantity, fermion, float(t), float(np.real(v)), float(np.imag(v))) for t, v in zip(times, values)]


def protocol_rows(series) -> List[tuple]:
    """Rows of the protocol CSV schema for a TeleportSeries."""
    config = series.config
    return [
        (config.mode.value, config.beta, config.t0, float(t1), mu, float(value))
        for mu, row in zip(series.mus, series.values)
        for t1, value in zip(series.times, row)
    ]


class ResultsWriter:
    """Writes one experiment's artifacts into an output directory"""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.written: List[Path] = []

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        buffer = io.StringIO()
        buffer.write("# " + ",".join(columns) + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        count = 0
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"Row of width {len(row)} for {len(columns)} columns in {name}")
            writer.writerow([format_value(v) for v in row])
            count += 1
        path = self.output_dir / f"{name}.csv"
        _atomic_write(path, buffer.getvalue())
        self.written.append(path)
        logger.info(f"Wrote {count} rows to {path}")
        return path

    def write_manifest(self, parameters: Mapping[str, Any], name: str = "manifest") -> Path:
        entries = dict(parameters)
        entries.setdefault("code_version", CODE_VERSION)
        text = "".join(f"{key}={format_value(entries[key])}\n" for key in sorted(entries))
        path = self.output_dir / f"{name}.txt"
        _atomic_write(path, text)
        self.written.append(path)
        logger.info(f"Wrote manifest {path}")
        return path


def read_csv(path: Path) -> tuple:
    """(columns, rows as string lists) of a CSV written by ResultsWriter."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        header = f.readline()
        if not header.startswith("# "):
            raise ValueError(f"{path} has no column comment line")
        columns = header[2:].strip().split(",")
        rows = list(csv.reader(f))
    return columns, rows
