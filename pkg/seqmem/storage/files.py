"""
File formats

- trajectory CSV: time, m_1..m_K, E_total, E_assoc, E_seq, E_c, F, G
- matrix text: a "rows cols" header line followed by one matrix row per line;
  several matrices may follow each other in one file
- training snapshots: one joblib file per epoch plus metrics.json
- capacity: JSON summary and a per-trial CSV table

Floats are written with 17 significant digits so values survive a round trip.
"""

import json
import logging
import math
import os
from pathlib import Path

import joblib
import numpy as np
import pandas as pd

from ..exceptions import ConfigError
from ..models.models import CapacityResult, SynapseState, TrainingSnapshot, Trajectory

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
ENERGY_COLUMNS = ["E_total", "E_assoc", "E_seq", "E_c", "F", "G"]


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    """One row per snapshot; energy columns are NaN where not computed."""
    overlaps = np.asarray(traj.overlaps, dtype=np.float64)
    frame = pd.DataFrame({"time": np.asarray(traj.times, dtype=np.float64)})
    for i in range(overlaps.shape[1]):
        frame[f"m_{i + 1}"] = overlaps[:, i]

    energies = traj.energies or []

    def column(attr: str) -> list[float]:
        if not energies:
            return [math.nan] * len(frame)
        return [math.nan if getattr(e, attr) is None else float(getattr(e, attr)) for e in energies]

    for name, attr in zip(ENERGY_COLUMNS, ["total", "e_assoc", "e_seq", "e_c", "f_rate", "g_rate"]):
        frame[name] = column(attr)
    return frame


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trajectory_frame(traj).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote %d snapshots to %s", len(traj), path)
    return path


def read_trajectory_csv(path: str | Path) -> pd.DataFrame:
    frame = pd.read_csv(path, float_precision="round_trip")
    if "time" not in frame.columns:
        raise ConfigError(f"{path} is not a trajectory file (no time column)")
    return frame


def _format_matrix(matrix: np.ndarray) -> list[str]:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    lines = [f"{matrix.shape[0]} {matrix.shape[1]}"]
    lines.extend(" ".join(FLOAT_FORMAT % v for v in row) for row in matrix)
    return lines


def write_matrices(path: str | Path, *matrices: np.ndarray) -> Path:
    """Write one or more matrices back to back in the matrix text format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines: list[str] = []
    for matrix in matrices:
        lines.extend(_format_matrix(matrix))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_matrices(path: str | Path) -> list[np.ndarray]:
    """
    Read every matrix of a matrix text file.

    Raises:
        ConfigError: if the file is truncated or a header is malformed
    """
    tokens = Path(path).read_text().split()
    matrices: list[np.ndarray] = []
    pos = 0
    while pos < len(tokens):
        try:
            rows, cols = int(tokens[pos]), int(tokens[pos + 1])
        except (IndexError, ValueError) as e:
            raise ConfigError(f"{path}: malformed matrix header at token {pos}") from e
        pos += 2
        count = rows * cols
        if pos + count > len(tokens):
            raise ConfigError(f"{path}: expected {count} values, found {len(tokens) - pos}")
        values = np.array([float(t) for t in tokens[pos : pos + count]])
        matrices.append(values.reshape(rows, cols))
        pos += count
    return matrices


def write_synapses(path: str | Path, syn: SynapseState) -> list[Path]:
    """Write Xi and Phi to path (both) and to <stem>.xi.txt / <stem>.phi.txt."""
    path = Path(path)
    stem = path.with_suffix("")
    written = [
        write_matrices(path, syn.xi, syn.phi),
        write_matrices(stem.with_name(stem.name + ".xi.txt"), syn.xi),
        write_matrices(stem.with_name(stem.name + ".phi.txt"), syn.phi),
    ]
    logger.info("wrote synapses to %s", ", ".join(str(p) for p in written))
    return written


def read_synapses(path: str | Path) -> SynapseState:
    matrices = read_matrices(path)
    if len(matrices) != 2:
        raise ConfigError(f"{path}: expected Xi and Phi, found {len(matrices)} matrices")
    return SynapseState(xi=matrices[0], phi=matrices[1])


def save_snapshots(snapshots: list[TrainingSnapshot], snapshot_dir: str | Path, metrics: dict | None = None) -> Path:
    """Dump each snapshot with joblib and the per-epoch metrics as JSON."""
    snapshot_dir = Path(snapshot_dir)
    os.makedirs(snapshot_dir, exist_ok=True)
    for snap in snapshots:
        joblib.dump(snap, snapshot_dir / f"epoch_{snap.epoch:04d}.joblib")

    summary = {
        "epochs": [
            {
                "epoch": snap.epoch,
                "energy_gap": None if math.isnan(snap.energy_gap) else snap.energy_gap,
                "final_energy": snap.energy_trace[-1] if snap.energy_trace else None,
                "trace_length": len(snap.energy_trace),
            }
            for snap in snapshots
        ],
        **(metrics or {}),
    }
    metrics_path = snapshot_dir / "metrics.json"
    metrics_path.write_text(json.dumps(summary, indent=2))
    logger.info("saved %d snapshots to %s", len(snapshots), snapshot_dir)
    return metrics_path


def load_snapshots(snapshot_dir: str | Path) -> list[TrainingSnapshot]:
    snapshot_dir = Path(snapshot_dir)
    return [joblib.load(p) for p in sorted(snapshot_dir.glob("epoch_*.joblib"))]


def _finite_or_none(value: float) -> float | None:
    return None if value is None or not math.isfinite(value) else float(value)


def write_capacity(
    results: list[CapacityResult],
    json_path: str | Path,
    csv_path: str | Path | None = None,
    scaling: dict | None = None,
) -> Path:
    """JSON summary of every episode length plus an optional per-trial CSV table."""
    json_path = Path(json_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    for result in results:
        entry = result.to_dict()
        entry["mean_min_nf"] = _finite_or_none(entry["mean_min_nf"])
        entry["std_min_nf"] = _finite_or_none(entry["std_min_nf"])
        entries.append(entry)
    payload = {"results": entries}
    if scaling is not None:
        payload["scaling"] = scaling
    json_path.write_text(json.dumps(payload, indent=2))

    if csv_path is not None:
        rows = [
            {"variant": r.variant.value, "k": r.k, "trial": i, "min_nf": m}
            for r in results
            for i, m in enumerate(r.min_n_f_per_trial)
        ]
        table = pd.DataFrame(rows, columns=["variant", "k", "trial", "min_nf"])
        table["min_nf"] = table["min_nf"].astype("Int64")
        table.to_csv(csv_path, index=False)
    return json_path


def write_fixed_points_csv(samples: list, path: str | Path) -> Path:
    """One row per tracked fixed point: its overlaps and the energy of every memory."""
    rows = []
    for sample in samples:
        row = {
            "time": sample.time,
            "iterations": sample.iterations,
            "energy": sample.energy,
            "leader": sample.leading_memory + 1,
        }
        row.update({f"m_{i + 1}": v for i, v in enumerate(sample.overlaps)})
        row.update({f"E_mem_{i + 1}": v for i, v in enumerate(sample.memory_energies)})
        rows.append(row)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
