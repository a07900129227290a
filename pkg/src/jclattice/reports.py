"""CSV and manifest writers.  Frequencies leave the package in Hz."""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path

import numpy as np

from .hilbert import Operator, QuantumState, fidelity
from .spectrum import diagonalize_sector

TWO_PI = 2 * math.pi


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(path, columns, rows, metadata: dict | None = None) -> Path:
    """Comma-separated file with ``# key=value`` comment lines above the header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}={_fmt(value) if not isinstance(value, (list, tuple)) else ' '.join(map(_fmt, value))}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    meta, lines = {}, []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def spectrum_rows(H: Operator, sectors=(0, 1, 2)) -> list[tuple]:
    """``(N, m, energy_over_2pi_Hz, label_re, label_im)`` with energies above the lowest N=0 level."""
    systems = {n: diagonalize_sector(H, n) for n in sectors}
    ref = systems[0].energies[0] if 0 in systems else diagonalize_sector(H, 0).energies[0]
    rows = []
    for n, es in systems.items():
        for m, e in enumerate(es.energies):
            lab = es.labels[m] if es.labels is not None else complex("nan")
            rows.append((n, m + 1, (e - ref) / TWO_PI, lab.real, lab.imag))
    return rows


SPECTRUM_COLUMNS = ("N", "m", "energy_over_2pi_Hz", "translation_label_re", "translation_label_im")


def trajectory_rows(states, targets: dict[str, QuantumState], score: QuantumState | None = None):
    """Rows of ``time_s``, target populations, fidelity, trace and minimum eigenvalue."""
    columns = ["time_s"] + [f"pop_{k}" for k in targets]
    if score is not None:
        columns.append("fidelity")
    columns += ["trace", "min_eig"]
    rows = []
    for s in states:
        row = [s.time] + [fidelity(ref, s) for ref in targets.values()]
        if score is not None:
            row.append(fidelity(score, s))
        if isinstance(s, QuantumState):
            row += [s.norm() ** 2, 0.0]
        else:
            row += [s.trace().real, s.min_eigenvalue()]
        rows.append(tuple(row))
    return columns, rows


def write_manifest(path, config: dict, wall_time: float, extra: dict | None = None) -> Path:
    import scipy

    from . import __version__

    data = {
        "config": config,
        "versions": {
            "jclattice": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": wall_time,
    }
    if extra:
        data.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_fmt) + "\n")
    return path
