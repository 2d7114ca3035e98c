"""
Sequential Memory Capacity

For an episode of k memories arranged as one cycle, find the smallest number
of feature neurons at which a cued network retrieves the whole cycle in
order. Trials are independent: each draws its own memories from a child of
one SeedSequence, so results do not depend on the number of workers.
"""

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from ..exceptions import InvalidArgumentError, NumericalBlowupError
from ..models.models import (
    CapacityResult,
    CapacitySettings,
    ModelSpec,
    RetrievalCriterion,
    Variant,
    default_n_f_grid,
)
from .integrate import init_from_cue, simulate
from .memories import generate_memories, preloaded_synapses
from .retrieval import extract_sequence, retrieves_cycle

logger = logging.getLogger(__name__)

CANONICAL_ALPHA_S = {Variant.LISEM: 0.05, Variant.DSEM: 1.0, Variant.FULL: 1.0}


def capacity_spec(variant: Variant, n_f: int, k: int, alpha_s: float | None = None, alpha_c: float = 4.9) -> ModelSpec:
    """Model holding one k-cycle in n_f feature neurons."""
    return ModelSpec(
        variant=variant,
        n_f=n_f,
        n_h=k,
        alpha_s=CANONICAL_ALPHA_S[variant] if alpha_s is None else alpha_s,
        alpha_c=alpha_c,
        gamma=1.0,
        tau_f=1.0,
        tau_d=100.0,
    )


def retrieval_succeeds(
    variant: Variant,
    n_f: int,
    k: int,
    seed: int,
    crit: RetrievalCriterion,
    horizon_per_memory: float = 150.0,
    dt: float = 0.01,
    alpha_s: float | None = None,
    alpha_c: float = 4.9,
) -> bool:
    """Cue the first memory of a random k-cycle and test for an in-order traversal."""
    spec = capacity_spec(variant, n_f, k, alpha_s, alpha_c)
    memories = generate_memories(n_f, k, seed)
    cycle = list(range(k))
    syn, _ = preloaded_synapses(spec, [cycle], seed, memories=memories)
    duration = max(crit.max_time, horizon_per_memory * (k + 1))
    init = init_from_cue(memories[:, 0], 0.0, seed, spec, syn)
    try:
        traj = simulate(spec, syn, init, duration, dt=dt, record_every=10)
    except NumericalBlowupError as e:
        logger.warning("n_f=%d k=%d seed=%d: %s", n_f, k, seed, e)
        return False
    window = crit.model_copy(update={"max_time": duration})
    return retrieves_cycle(extract_sequence(traj, window), cycle)


@dataclass
class TrialOutcome:
    min_n_f: int | None
    tested: dict[int, bool]


class _TrialSearch:
    """Smallest passing n_f of one trial, with every evaluation cached."""

    def __init__(self, test, grid: list[int], refine_step: int):
        self.test = test
        self.grid = grid
        self.refine_step = refine_step
        self.tested: dict[int, bool] = {}

    def passes(self, n_f: int) -> bool:
        if n_f not in self.tested:
            self.tested[n_f] = bool(self.test(n_f))
        return self.tested[n_f]

    def _first_passing(self, candidates: list[int]) -> int | None:
        """Binary search assuming failures precede passes."""
        lo, hi = -1, len(candidates) - 1
        if hi < 0 or not self.passes(candidates[hi]):
            return None
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.passes(candidates[mid]):
                hi = mid
            else:
                lo = mid
        return candidates[hi]

    def _refine(self, coarse: int) -> int:
        below = [n for n in self.grid if n < coarse]
        start = below[-1] if below else 0
        finer = list(range(start + self.refine_step, coarse, self.refine_step))
        refined = self._first_passing(finer + [coarse])
        return coarse if refined is None else refined

    def _linear(self) -> int | None:
        coarse = next((n for n in self.grid if self.passes(n)), None)
        if coarse is None:
            return None
        below = [n for n in self.grid if n < coarse]
        start = below[-1] if below else 0
        for n in range(start + self.refine_step, coarse, self.refine_step):
            if self.passes(n):
                return n
        return coarse

    def run(self) -> int | None:
        coarse = self._first_passing(self.grid)
        if coarse is None:
            return None
        # spot check: the next grid value above the coarse minimum must pass too
        above = [n for n in self.grid if n > coarse][:1]
        if above and not self.passes(above[0]):
            logger.debug("success not monotone in n_f near %d, scanning linearly", coarse)
            return self._linear()
        return self._refine(coarse)


def _run_trial(
    variant: Variant,
    k: int,
    seed: int,
    crit: RetrievalCriterion,
    grid: list[int],
    refine_step: int,
    horizon_per_memory: float,
    dt: float,
    alpha_s: float | None,
    alpha_c: float,
) -> TrialOutcome:
    def test(n_f: int) -> bool:
        return retrieval_succeeds(variant, n_f, k, seed, crit, horizon_per_memory, dt, alpha_s, alpha_c)

    search = _TrialSearch(test, grid, refine_step)
    return TrialOutcome(min_n_f=search.run(), tested=search.tested)


def capacity_search(
    variant: Variant,
    k: int,
    trials: int,
    crit: RetrievalCriterion,
    n_f_grid: list[int] | None = None,
    seed: int = 0,
    n_jobs: int = 1,
    refine_step: int = 5,
    horizon_per_memory: float = 150.0,
    dt: float = 0.01,
    alpha_s: float | None = None,
    alpha_c: float = 4.9,
) -> CapacityResult:
    """
    Minimum N_f needed to store and retrieve a k-cycle, over independent trials.

    Each trial binary-searches the grid, then refines below the coarse minimum
    in refine_step increments. Trials failing at the top of the grid are
    saturated: excluded from the mean and counted.

    Raises:
        InvalidArgumentError: if k < 2, trials < 1 or the grid is malformed
    """
    if k < 2:
        raise InvalidArgumentError(f"episode length must be at least 2, got {k}")
    if trials < 1:
        raise InvalidArgumentError(f"trials must be at least 1, got {trials}")
    grid = sorted(set(int(n) for n in (n_f_grid or default_n_f_grid())))
    if not grid or grid[0] < 1 or grid[-1] > 500:
        raise InvalidArgumentError(f"n_f grid must lie within [1, 500], got {grid}")

    children = np.random.SeedSequence(seed).spawn(trials)
    trial_seeds = [int(child.generate_state(1)[0]) for child in children]
    logger.info("capacity %s k=%d: %d trials over %d grid values", variant.value, k, trials, len(grid))

    outcomes: list[TrialOutcome] = Parallel(n_jobs=n_jobs)(
        delayed(_run_trial)(
            variant, k, s, crit, grid, refine_step, horizon_per_memory, dt, alpha_s, alpha_c
        )
        for s in trial_seeds
    )

    successes: dict[int, int] = {}
    for outcome in outcomes:
        for n_f, ok in outcome.tested.items():
            successes[n_f] = successes.get(n_f, 0) + int(ok)

    minima = [o.min_n_f for o in outcomes]
    solved = np.array([m for m in minima if m is not None], dtype=np.float64)
    result = CapacityResult(
        variant=variant,
        k=k,
        trials=trials,
        n_f_grid=grid,
        successes=successes,
        min_n_f_per_trial=minima,
        mean_min_n_f=float(solved.mean()) if solved.size else float("nan"),
        std_min_n_f=float(solved.std()) if solved.size else float("nan"),
        saturated_count=trials - int(solved.size),
    )
    logger.info(
        "capacity %s k=%d: mean min n_f %.1f (std %.1f), %d saturated",
        variant.value, k, result.mean_min_n_f, result.std_min_n_f, result.saturated_count,
    )
    return result


def capacity_sweep(settings: CapacitySettings, crit: RetrievalCriterion) -> list[CapacityResult]:
    """capacity_search for every episode length in settings.k_values."""
    return [
        capacity_search(
            settings.variant,
            k,
            settings.trials,
            crit,
            n_f_grid=list(settings.n_f_grid),
            seed=settings.seed,
            n_jobs=settings.n_jobs,
            refine_step=settings.refine_step,
            horizon_per_memory=settings.horizon_per_memory,
            dt=settings.dt,
            alpha_s=settings.alpha_s,
            alpha_c=settings.alpha_c,
        )
        for k in settings.k_values
    ]


@dataclass
class ScalingFit:
    """Least-squares line of mean minimum N_f against episode length."""

    slope: float
    intercept: float
    r2: float
    points: int


def capacity_scaling(results: list[CapacityResult]) -> ScalingFit:
    """
    Fit mean min N_f = slope * k + intercept over results with a finite mean.

    Raises:
        InvalidArgumentError: with fewer than two usable points
    """
    usable = [r for r in results if np.isfinite(r.mean_min_n_f)]
    if len(usable) < 2:
        raise InvalidArgumentError("capacity scaling needs at least two episode lengths with a finite mean")
    k = np.array([[r.k] for r in usable], dtype=np.float64)
    mean = np.array([r.mean_min_n_f for r in usable])
    model = LinearRegression().fit(k, mean)
    return ScalingFit(
        slope=float(model.coef_[0]),
        intercept=float(model.intercept_),
        r2=float(r2_score(mean, model.predict(k))),
        points=len(usable),
    )
