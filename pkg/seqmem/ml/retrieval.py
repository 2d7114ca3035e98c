"""
Retrieval metrics: overlaps with stored memories, extraction of the visited
memory sequence, and timing of the transitions between visits.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidArgumentError
from ..models.models import Activation, ModelSpec, RetrievalCriterion, Trajectory
from .dynamics import activate


def overlaps(v_f: np.ndarray, xi: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """
    m_i = (1 / N_f) * sum_j xi_i[j] * x[j] for every stored memory i.

    x = sigma_f(V_f) with the variant's feature activation: tanh(g V_f) for
    LISEM, the raw current for DSEM. xi holds one memory per column.
    """
    v_f = np.asarray(v_f, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if xi.ndim != 2 or xi.shape[0] != v_f.shape[-1]:
        raise InvalidArgumentError(
            f"memories of shape {xi.shape} do not match feature length {v_f.shape[-1]}"
        )
    if spec.feature_activation is not Activation.IDENTITY:
        v_f = activate(spec.feature_activation, v_f, spec.gamma)
    return v_f @ xi / xi.shape[0]


def leading_memory(overlap_trace: np.ndarray, threshold: float) -> np.ndarray:
    """Index of the largest overlap at each snapshot, or -1 when none reaches threshold."""
    trace = np.asarray(overlap_trace, dtype=np.float64)
    best = np.argmax(trace, axis=1)
    peak = trace[np.arange(trace.shape[0]), best]
    return np.where(peak >= threshold, best, -1)


@dataclass
class Visit:
    """A dwell of the leading overlap on one memory."""

    memory: int
    start: float
    end: float
    peak: float


def extract_visits(traj: Trajectory, crit: RetrievalCriterion) -> list[Visit]:
    """
    Runs of snapshots led by one memory whose overlap stays above threshold
    for at least min_dwell, restricted to t <= max_time. A run lasts until the
    next snapshot; the last one is held for one more snapshot interval.
    Consecutive visits to the same memory are merged.
    """
    times = np.asarray(traj.times, dtype=np.float64)
    keep = times <= crit.max_time + 1e-12
    times = times[keep]
    if len(times) == 0:
        return []
    trace = np.asarray(traj.overlaps)[keep]
    leader = leading_memory(trace, crit.overlap_threshold)
    spacing = float(times[-1] - times[-2]) if len(times) > 1 else 0.0

    visits: list[Visit] = []
    start = 0
    for i in range(1, len(leader) + 1):
        if i < len(leader) and leader[i] == leader[start]:
            continue
        memory = int(leader[start])
        stop = times[i] if i < len(times) else times[-1] + spacing
        if memory >= 0 and stop - times[start] >= crit.min_dwell - 1e-12:
            peak = float(trace[start:i, memory].max())
            if visits and visits[-1].memory == memory:
                visits[-1].end = float(times[i - 1])
                visits[-1].peak = max(visits[-1].peak, peak)
            else:
                visits.append(Visit(memory, float(times[start]), float(times[i - 1]), peak))
        start = i
    return visits


def extract_sequence(traj: Trajectory, crit: RetrievalCriterion) -> list[int]:
    """Ordered memory indices visited along the trajectory."""
    return [v.memory for v in extract_visits(traj, crit)]


def transition_times(traj: Trajectory, crit: RetrievalCriterion) -> list[float]:
    """Start time of every visit after the first."""
    return [v.start for v in extract_visits(traj, crit)[1:]]


def dwell_intervals(traj: Trajectory, crit: RetrievalCriterion) -> list[float]:
    """Time between the starts of successive visits."""
    return list(np.diff([v.start for v in extract_visits(traj, crit)]))


def transition_widths(traj: Trajectory, contrast: float = 0.5) -> list[float]:
    """
    Durations of the stretches in which the two largest overlaps are within a
    factor 1 / contrast of each other (no single memory clearly leads).
    Stretches touching the start or end of the record are not counted.
    """
    trace = np.sort(np.asarray(traj.overlaps, dtype=np.float64), axis=1)
    times = np.asarray(traj.times, dtype=np.float64)
    if trace.shape[1] < 2:
        return []
    top, second = trace[:, -1], trace[:, -2]
    mixed = (top > 0) & (second >= contrast * top)

    widths: list[float] = []
    i, n = 0, len(mixed)
    while i < n:
        if not mixed[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and mixed[j + 1]:
            j += 1
        if i > 0 and j < n - 1:
            widths.append(float(times[j + 1] - times[i - 1]))
        i = j + 1
    return widths


def follows_cycle(sequence: Sequence[int], cycle: Sequence[int]) -> bool:
    """True when every consecutive pair of the sequence is a step of the cycle."""
    successor = {a: b for a, b in zip(cycle, list(cycle[1:]) + list(cycle[:1]))}
    return all(successor.get(a) == b for a, b in zip(sequence, sequence[1:]))


def count_traversals(sequence: Sequence[int], cycle: Sequence[int]) -> int:
    """Largest number of complete in-order passes through cycle in one run of the sequence."""
    k = len(cycle)
    if k == 0:
        return 0
    successor = {a: b for a, b in zip(cycle, list(cycle[1:]) + list(cycle[:1]))}
    best = run = 0
    previous: int | None = None
    for memory in sequence:
        if memory in successor and (previous is None or successor.get(previous) == memory):
            run = run + 1 if previous is not None else 1
        elif memory in successor:
            run = 1
        else:
            run = 0
            memory = None
        previous = memory
        best = max(best, run)
    return best // k


def retrieves_cycle(sequence: Sequence[int], cycle: Sequence[int]) -> bool:
    """All memories of cycle visited in cycle order, starting anywhere."""
    return count_traversals(sequence, cycle) >= 1
