"""
Online Energy Learning for DSEM

Xi and Phi follow the negative energy gradient at the expected (target) state
and the positive, beta_c-weighted gradient at the current driven state:

    dW * T_L = -dE/dW |target + beta_c * dE/dW |current

For Xi this is a difference of Hebbian outer products between feature and
hidden signals; for Phi it pairs the delayed feature trace with the present
hidden activity, an STDP-like ordering rule.

During training each memory of the cyclic episode is clamped onto V_f for a
fixed number of steps while the delay signal integrates freely, so the delay
trace carries the previous memory when the next one is presented. The learning
timescales count presentation steps: every step moves Xi and Phi by their
rate divided by T_L, whatever the integration step of the delay signal.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidArgumentError, NumericalBlowupError, TrainingError
from ..models.models import (
    LearningConfig,
    ModelSpec,
    NetworkState,
    StateDerivative,
    SynapseState,
    TrainingSnapshot,
    Variant,
)
from .dynamics import softmax_activation
from .energy import energy_dsem
from .integrate import rk4_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Signals:
    """Feature currents and hidden currents of one network configuration."""

    v_f: np.ndarray
    v_h: np.ndarray


def _hidden_drive(v_f: np.ndarray, v_d: np.ndarray, syn: SynapseState, spec: ModelSpec) -> np.ndarray:
    return np.sqrt(spec.alpha_s) * (syn.xi.T @ v_f) + spec.alpha_c * (syn.phi.T @ (syn.xi.T @ v_d))


def _check_signals(current: Signals, target: Signals, v_d: np.ndarray, syn: SynapseState) -> None:
    n_f, n_h = syn.xi.shape
    for name, sig in (("current", current), ("target", target)):
        if sig.v_f.shape != (n_f,) or sig.v_h.shape != (n_h,):
            raise InvalidArgumentError(
                f"{name} signals have shapes {sig.v_f.shape}/{sig.v_h.shape}, "
                f"expected ({n_f},)/({n_h},)"
            )
    if np.shape(v_d) != (n_f,):
        raise InvalidArgumentError(f"v_d has shape {np.shape(v_d)}, expected ({n_f},)")


def current_signals(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> Signals:
    """Signals of the driven network: the clamped V_f and its diabatic hidden drive."""
    return Signals(v_f=state.v_f.copy(), v_h=_hidden_drive(state.v_f, state.v_d, syn, spec))


def target_signals(
    next_memory: np.ndarray,
    state: NetworkState,
    syn: SynapseState,
    spec: ModelSpec,
) -> Signals:
    """
    Expected signals when the network has moved on to next_memory.

    V_f^tgt = next_memory and V_h^tgt = sqrt(a_s) Xi^T V_f^tgt + a_c Phi^T Xi^T V_d,
    evaluated at the current delay signal.
    """
    v_f = np.asarray(next_memory, dtype=np.float64)
    if v_f.shape != (syn.n_f,):
        raise InvalidArgumentError(f"next memory has shape {v_f.shape}, expected ({syn.n_f},)")
    return Signals(v_f=v_f.copy(), v_h=_hidden_drive(v_f, state.v_d, syn, spec))


def xi_update(
    current: Signals,
    target: Signals,
    v_d: np.ndarray,
    syn: SynapseState,
    spec: ModelSpec,
    cfg: LearningConfig,
) -> np.ndarray:
    """
    Rate of change of Xi.

        dXi * T_L^Xi = sqrt(a_s) [V_f^t p_t^T - b_c V_f^c p_c^T]
                       + a_c V_d (p_t - b_c p_c)^T Phi^T

    with p = softmax(g V_h).
    """
    _check_signals(current, target, v_d, syn)
    p_t = softmax_activation(target.v_h, spec.gamma)
    p_c = softmax_activation(current.v_h, spec.gamma)
    hebbian = np.outer(target.v_f, p_t) - cfg.beta_c * np.outer(current.v_f, p_c)
    delayed = np.outer(v_d, syn.phi @ (p_t - cfg.beta_c * p_c))
    return (np.sqrt(spec.alpha_s) * hebbian + spec.alpha_c * delayed) / cfg.tau_l_xi


def phi_update(
    current: Signals,
    target: Signals,
    v_d: np.ndarray,
    syn: SynapseState,
    spec: ModelSpec,
    cfg: LearningConfig,
) -> np.ndarray:
    """dPhi * T_L^Phi = a_c Xi^T V_d (p_t - b_c p_c)^T."""
    _check_signals(current, target, v_d, syn)
    p_t = softmax_activation(target.v_h, spec.gamma)
    p_c = softmax_activation(current.v_h, spec.gamma)
    return spec.alpha_c * np.outer(syn.xi.T @ v_d, p_t - cfg.beta_c * p_c) / cfg.tau_l_phi


def _as_episode(episode: Sequence[np.ndarray] | np.ndarray, n_f: int) -> np.ndarray:
    """Episode memories as an n_f x K matrix."""
    if isinstance(episode, np.ndarray) and episode.ndim == 2:
        memories = np.asarray(episode, dtype=np.float64)
    elif len(episode):
        memories = np.stack([np.asarray(m, dtype=np.float64) for m in episode], axis=1)
    else:
        memories = np.zeros((n_f, 0))
    if memories.shape[1] == 0:
        raise InvalidArgumentError("episode must contain at least one memory")
    if memories.shape[0] != n_f:
        raise InvalidArgumentError(f"episode memories have length {memories.shape[0]}, expected {n_f}")
    return memories


class OnlineEnergyLearner:
    """
    Trains Xi and Phi of a DSEM network on one cyclic episode.

    The learner owns the synapses and the delay signal; both persist across
    presentations and epochs.
    """

    def __init__(self, spec: ModelSpec, cfg: LearningConfig, seed: int = 0):
        if spec.variant is not Variant.DSEM:
            raise InvalidArgumentError(f"online learning is defined for DSEM, got {spec.variant.value}")
        self.spec = spec
        self.cfg = cfg
        self.seed = seed

        rng = np.random.default_rng(seed)
        r = cfg.init_range
        self.syn = SynapseState(
            xi=rng.uniform(-r, r, size=(spec.n_f, spec.n_h)),
            phi=rng.uniform(-r, r, size=(spec.n_h, spec.n_h)),
        )
        self.initial = self.syn.copy()
        self.v_d = np.zeros(spec.n_f)
        self.snapshots: list[TrainingSnapshot] = []

    def _presentation(self, memory: np.ndarray, next_memory: np.ndarray, trace: list[float]) -> None:
        spec, cfg = self.spec, self.cfg
        tau_d = spec.tau_d

        def delay_rhs(state: NetworkState) -> StateDerivative:
            return StateDerivative(np.zeros_like(state.v_f), np.zeros(0), (state.v_f - state.v_d) / tau_d)

        state = NetworkState(v_f=memory, v_h=np.zeros(spec.n_h), v_d=self.v_d)
        for step in range(1, cfg.steps_per_memory + 1):
            state = rk4_step(delay_rhs, state, cfg.dt)
            current = current_signals(state, self.syn, spec)
            target = target_signals(next_memory, state, self.syn, spec)

            d_xi = xi_update(current, target, state.v_d, self.syn, spec, cfg)
            d_phi = phi_update(current, target, state.v_d, self.syn, spec, cfg)
            self.syn = SynapseState(self.syn.xi + d_xi, self.syn.phi + d_phi)

            if step % cfg.trace_every == 0:
                driven = NetworkState(v_f=memory, v_h=current.v_h, v_d=state.v_d)
                trace.append(energy_dsem(driven, self.syn, spec))

        if not (np.all(np.isfinite(self.syn.xi)) and np.all(np.isfinite(self.syn.phi))):
            raise NumericalBlowupError(0.0, "synapses became non-finite")
        self.v_d = state.v_d

    def energy_gap(self, memory: np.ndarray, next_memory: np.ndarray) -> float:
        """E(target state) - E(current driven state) at the present delay signal."""
        state = NetworkState(v_f=memory, v_h=np.zeros(self.spec.n_h), v_d=self.v_d)
        current = current_signals(state, self.syn, self.spec)
        target = target_signals(next_memory, state, self.syn, self.spec)
        e_target = energy_dsem(NetworkState(target.v_f, target.v_h, self.v_d), self.syn, self.spec)
        e_current = energy_dsem(NetworkState(current.v_f, current.v_h, self.v_d), self.syn, self.spec)
        return e_target - e_current

    def train(self, episode: Sequence[np.ndarray] | np.ndarray) -> tuple[SynapseState, list[TrainingSnapshot]]:
        """
        Present the episode cyclically for cfg.epochs epochs.

        Returns:
            final synapses and one snapshot per epoch, preceded by the
            epoch-0 snapshot of the initialization

        Raises:
            TrainingError: if the synapses or the delay signal become non-finite
        """
        memories = _as_episode(episode, self.spec.n_f)
        k = memories.shape[1]
        self.snapshots = [
            TrainingSnapshot(epoch=0, xi=self.syn.xi.copy(), phi=self.syn.phi.copy(), energy_trace=[])
        ]
        logger.info(
            "training %d-memory episode for %d epochs (%d steps per memory)",
            k, self.cfg.epochs, self.cfg.steps_per_memory,
        )

        for epoch in range(1, self.cfg.epochs + 1):
            trace: list[float] = []
            try:
                for i in range(k):
                    self._presentation(memories[:, i], memories[:, (i + 1) % k], trace)
            except NumericalBlowupError as e:
                raise TrainingError(epoch, str(e)) from e

            gap = self.energy_gap(memories[:, k - 1], memories[:, 0])
            self.snapshots.append(
                TrainingSnapshot(
                    epoch=epoch,
                    xi=self.syn.xi.copy(),
                    phi=self.syn.phi.copy(),
                    energy_trace=trace,
                    energy_gap=gap,
                )
            )
            logger.info("epoch %d/%d: energy gap %.6g", epoch, self.cfg.epochs, gap)

        return self.syn.copy(), self.snapshots


def train_online(
    episode: Sequence[np.ndarray] | np.ndarray,
    spec: ModelSpec,
    cfg: LearningConfig,
    seed: int = 0,
) -> tuple[SynapseState, list[TrainingSnapshot]]:
    """Train a freshly initialized DSEM network on a cyclic episode."""
    return OnlineEnergyLearner(spec, cfg, seed).train(episode)


@dataclass
class ConsolidationReport:
    """How the trained synapses store the episode."""

    alignment: np.ndarray
    columns: list[int]
    aligned: list[bool]
    phi_sub: np.ndarray
    successor_map: list[int]
    threshold: float

    @property
    def consolidated(self) -> bool:
        return all(self.aligned) and len(set(self.columns)) == len(self.columns)

    @property
    def recovers_cycle(self) -> bool:
        """Row-wise argmax of the Phi submatrix is the cyclic successor map."""
        k = len(self.columns)
        return self.successor_map == [(i + 1) % k for i in range(k)]


def consolidation_report(syn: SynapseState, memories: np.ndarray, threshold: float = 0.8) -> ConsolidationReport:
    """
    Match each episode memory to the Xi column it is most aligned with.

    Alignment is the normalized inner product between memory and column.
    memories holds the episode in presentation order, one per column.
    """
    memories = np.asarray(memories, dtype=np.float64)
    if memories.ndim != 2 or memories.shape[0] != syn.n_f:
        raise InvalidArgumentError(f"memories of shape {memories.shape} do not match n_f={syn.n_f}")
    norms = np.linalg.norm(memories, axis=0)[:, None] * np.linalg.norm(syn.xi, axis=0)[None, :]
    alignment = (memories.T @ syn.xi) / np.where(norms == 0, 1.0, norms)

    columns = [int(j) for j in np.argmax(np.abs(alignment), axis=1)]
    aligned = [bool(abs(alignment[i, j]) > threshold) for i, j in enumerate(columns)]
    phi_sub = syn.phi[np.ix_(columns, columns)]
    successor_map = [int(j) for j in np.argmax(phi_sub, axis=1)]
    return ConsolidationReport(
        alignment=alignment,
        columns=columns,
        aligned=aligned,
        phi_sub=phi_sub,
        successor_map=successor_map,
        threshold=threshold,
    )
