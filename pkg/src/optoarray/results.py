from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .metrics import FIDELITY_CONVENTION
from .typing import Metadata
from .utils import package_versions

CSV_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ResultFiles:
    csv: Path
    metadata: Path
    gnuplot: Optional[Path] = None


def _plain(value: Any) -> Any:
    """Numpy scalars and arrays as plain JSON values, non-finite floats as strings."""
    if isinstance(value, np.ndarray):
        return [_plain(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def fieldnames_of(rows: Sequence[Mapping[str, Any]]) -> List[str]:
    names: List[str] = []
    for row in rows:
        for name in row:
            if name not in names:
                names.append(name)
    return names


def write_csv(
    path: Path, rows: Sequence[Mapping[str, Any]], fieldnames: Optional[Sequence[str]] = None
) -> Path:
    if fieldnames is None:
        fieldnames = fieldnames_of(rows)
    with open(path, "w", newline="", encoding="utf-8") as file_:
        writer = csv.DictWriter(file_, fieldnames=list(fieldnames), extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: _format_cell(row.get(name)) for name in fieldnames})
    return path


def write_json(path: Path, document: Mapping[str, Any]) -> Path:
    with open(path, "w", encoding="utf-8") as file_:
        json.dump(_plain(document), file_, indent=2, sort_keys=True, ensure_ascii=False)
        file_.write("\n")
    return path


def write_gnuplot(
    path: Path, csv_name: str, fieldnames: Sequence[str], x: str, ys: Iterable[str]
) -> Path:
    columns = {name: index + 1 for index, name in enumerate(fieldnames)}
    plots = ", \\\n     ".join(
        f"'{csv_name}' using {columns[x]}:{columns[y]} with linespoints title '{y}'"
        for y in ys
        if y in columns
    )
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{x}'",
        "set ylabel 'fidelity'",
        "set yrange [0:1.05]",
    ]
    if x.startswith("kappa"):
        lines.append("set logscale x")
    lines.append("set terminal pngcairo size 800,600")
    lines.append(f"set output '{Path(csv_name).stem}.png'")
    lines.append(f"plot {plots}")
    with open(path, "w", encoding="utf-8") as file_:
        file_.write("\n".join(lines) + "\n")
    return path


def build_metadata(
    command: str, config_echo: Mapping[str, Any], wall_time: float, **extra: Any
) -> Metadata:
    metadata: Metadata = {
        "command": command,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "fidelity_convention": FIDELITY_CONVENTION,
        "config": dict(config_echo),
        "versions": package_versions(),
        "wall_time_s": wall_time,
    }
    metadata.update(extra)
    return metadata


def write_results(
    out_dir: str,
    stem: str,
    rows: Sequence[Mapping[str, Any]],
    metadata: Mapping[str, Any],
    *,
    fieldnames: Optional[Sequence[str]] = None,
    gnuplot: Optional[Sequence[str]] = None,
) -> ResultFiles:
    """Write ``stem.csv`` and ``stem.json`` into *out_dir*.

    *gnuplot*, if given, names the x column followed by the y columns of a
    ``stem.gp`` script plotting the CSV.
    """
    directory = Path(out_dir)
    os.makedirs(directory, exist_ok=True)
    if fieldnames is None:
        fieldnames = fieldnames_of(rows)
    csv_path = write_csv(directory / f"{stem}.csv", rows, fieldnames)
    metadata_path = write_json(directory / f"{stem}.json", metadata)
    script_path = None
    if gnuplot is not None:
        x, *ys = gnuplot
        script_path = write_gnuplot(directory / f"{stem}.gp", csv_path.name, fieldnames, x, ys)
    return ResultFiles(csv_path, metadata_path, script_path)
