"""Result files: CSV tables with full-precision floats and JSON manifests.

Every float is written with 17 significant digits so that reading a file back
recovers the exact binary value; reruns of a seeded experiment therefore
produce byte-identical tables.
"""

from __future__ import annotations

import csv
import json
import subprocess
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .convergence import HydroResult, SweepResult
from .energy import EnergyReport
from .kmc import EnsembleStats, Trajectory
from .pde import SpaceTimeField

PACKAGE_VERSION = "0.1.0"


def fmt(x) -> str:
    """Text form of one table cell."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and numeric body of a table written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_json(path, data: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def version_string() -> str:
    """``git describe``-style identifier of the source tree, or the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{PACKAGE_VERSION}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return PACKAGE_VERSION


# ---------------------------------------------------------------------------
# exporters

def export_field(field: SpaceTimeField, path_values, path_traces) -> None:
    """Cell values as ``t,u,rho`` rows and boundary traces plus cumulative inflows."""
    write_csv(
        path_values,
        ["t", "u", "rho"],
        ((t, u, v) for k, t in enumerate(field.times) for u, v in zip(field.centers, field.values[k])),
    )
    inflow = field.inflow if field.inflow is not None else np.zeros((field.times.size, 2))
    write_csv(
        path_traces,
        ["t", "left", "right", "inflow_left", "inflow_right", "mass"],
        zip(field.times, field.left, field.right, inflow[:, 0], inflow[:, 1], field.mass()),
    )


def export_trajectory(traj: Trajectory, path) -> None:
    """One row per sample time: reservoir counters, particle count and the occupation string."""
    counts = traj.particle_counts()
    write_csv(
        path,
        ["t", "injections", "removals", "particles", "occupancy"],
        (
            (t, int(i), int(r), int(c), "".join(map(str, snap.tolist())))
            for t, i, r, c, snap in zip(traj.sample_times, traj.injections, traj.removals, counts, traj.snapshots)
        ),
    )


def export_ensemble(stats: EnsembleStats, path) -> None:
    mean, se = stats.mean, stats.stderr
    write_csv(
        path,
        ["t", "bin", "mean", "stderr", "count_sum"],
        (
            (t, b, mean[k, b], se[k, b], int(stats.sums[k, b]))
            for k, t in enumerate(stats.sample_times)
            for b in range(mean.shape[1])
        ),
    )


def export_sweep(result: SweepResult, path) -> None:
    write_csv(path, ["kappa", "dist_neumann", "dist_dirichlet", "trace_defect"], result.rows())


def export_hydro(result: HydroResult, path_table, path_summary) -> None:
    rows = []
    for i, n in enumerate(result.n_grid):
        mean, se, ref = result.ensemble_means[i], result.ensemble_stderr[i], result.reference_profiles[i]
        for k, t in enumerate(result.sample_times):
            for b in range(mean.shape[1]):
                rows.append((n, t, b, mean[k, b], se[k, b], ref[k, b]))
    write_csv(path_table, ["n", "t", "bin", "mean", "stderr", "reference"], rows)
    write_csv(
        path_summary,
        ["n", "sup_error", "sup_stderr", "budget", "count_drift"],
        (
            (n, e, s, 3.0 * (s + 2.0 / n), d)
            for n, e, s, d in zip(result.n_grid, result.sup_errors, result.sup_stderr, result.count_drift)
        ),
    )


def export_energy(report: EnergyReport, path, extra: dict | None = None) -> None:
    data = report.as_dict()
    if extra:
        data.update(extra)
    write_json(path, data)
