"""
Domain Models for the Sequential Episodic Memory Toolkit

This module defines the records shared by every part of seqmem. Configuration
records are pydantic models (validated once, then frozen); dynamical state is
held in frozen dataclasses wrapping numpy arrays.

Models:
- ModelSpec: variant selector plus every scalar parameter of the network
- SynapseState: the feature-hidden matrix Xi and the hidden-hidden delay matrix Phi
- EpisodeGraph: directed successor relation between stored memories
- NetworkState / StateDerivative: feature, hidden and delay vectors and their rates
- Trajectory: recorded snapshots with overlaps and optional energy diagnostics
- EnergyReport: energy value, LISEM decomposition and the F/G energy-rate split
- LearningConfig / TrainingSnapshot: online learning settings and per-epoch records
- RetrievalCriterion / CapacityResult: retrieval detection and capacity summaries
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import InvalidArgumentError


class Variant(str, Enum):
    """Model family member being simulated."""

    FULL = "full"
    LISEM = "lisem"
    DSEM = "dsem"

    @property
    def diabatic(self) -> bool:
        """True when the hidden layer is eliminated (tau_h -> 0)."""
        return self is not Variant.FULL


class Activation(str, Enum):
    """Layer activation functions, each the gradient of a Lagrangian."""

    IDENTITY = "identity"
    TANH = "tanh"
    SOFTMAX = "softmax"


class ModelSpec(BaseModel):
    """
    Network configuration.

    Attributes:
        variant: FULL (general model), LISEM or DSEM
        n_f: number of feature neurons
        n_h: number of hidden neurons (one per preloaded memory)
        alpha_s: strength of the feature-hidden synapses Xi
        alpha_c: strength of the delay pathway through Phi
        lisem_delay_scale: LISEM only; the delayed field of a recalled memory is
            lisem_delay_scale * alpha_c times its associative field
        gamma: activation gain
        tau_f, tau_h, tau_d: feature, hidden and delay timescales
        sigma_f, sigma_h: activations of the general model; LISEM and DSEM
            fix their own activations and ignore these fields
    """

    model_config = ConfigDict(frozen=True)

    variant: Variant = Variant.LISEM
    n_f: int = Field(default=100, ge=1, description="Number of feature neurons")
    n_h: int = Field(default=7, ge=1, description="Number of hidden neurons")
    alpha_s: float = Field(default=0.05, gt=0.0, description="Synapse strength")
    alpha_c: float = Field(default=4.9, ge=0.0, description="Delay-pathway strength")
    lisem_delay_scale: float = Field(default=0.37, gt=0.0, description="LISEM delay ratio per unit alpha_c")
    gamma: float = Field(default=1.0, gt=0.0, description="Activation gain")
    tau_f: float = Field(default=1.0, gt=0.0, description="Feature timescale")
    tau_h: float = Field(default=1.0, gt=0.0, description="Hidden timescale")
    tau_d: float = Field(default=100.0, gt=0.0, description="Delay timescale")
    sigma_f: Activation = Activation.TANH
    sigma_h: Activation = Activation.SOFTMAX

    @model_validator(mode="after")
    def _check_adiabatic_ordering(self) -> ModelSpec:
        if self.tau_d <= self.tau_f or self.tau_d <= self.tau_h:
            raise ValueError(
                f"tau_d ({self.tau_d}) must exceed tau_f ({self.tau_f}) and tau_h ({self.tau_h})"
            )
        return self

    @property
    def feature_activation(self) -> Activation:
        if self.variant is Variant.LISEM:
            return Activation.TANH
        if self.variant is Variant.DSEM:
            return Activation.IDENTITY
        return self.sigma_f

    @property
    def hidden_activation(self) -> Activation:
        if self.variant is Variant.LISEM:
            return Activation.IDENTITY
        if self.variant is Variant.DSEM:
            return Activation.SOFTMAX
        return self.sigma_h

    @property
    def delay_strength(self) -> float:
        """Coupling c of the delay pathway inside the hidden drive.

        With Phi edges of 1/sqrt(alpha_s), a memory recalled on V_d adds
        c * N_f to the feature field of its successor, against alpha_s * N_f
        of associative field for the memory currently held. LISEM fixes that
        ratio to lisem_delay_scale * alpha_c, independent of alpha_s and N_f;
        a linear hidden layer only replays a cycle memory by memory while the
        ratio stays roughly within 1.3 to 2.
        """
        if self.variant is Variant.LISEM:
            return self.lisem_delay_scale * self.alpha_s * self.alpha_c
        return self.alpha_c

    def with_updates(self, **changes: Any) -> ModelSpec:
        """Return a validated copy with some fields replaced."""
        return ModelSpec(**{**self.model_dump(), **changes})


def lisem_canonical(n_f: int = 100, n_h: int = 7) -> ModelSpec:
    """LISEM parameters of the two-episode retrieval runs."""
    return ModelSpec(
        variant=Variant.LISEM, n_f=n_f, n_h=n_h, alpha_s=0.05, alpha_c=4.9,
        gamma=1.0, tau_f=1.0, tau_d=100.0,
    )


def dsem_canonical(n_f: int = 100, n_h: int = 7) -> ModelSpec:
    """DSEM parameters of the two-episode retrieval runs."""
    return ModelSpec(
        variant=Variant.DSEM, n_f=n_f, n_h=n_h, alpha_s=1.0, alpha_c=4.9,
        gamma=1.0, tau_f=1.0, tau_d=100.0,
    )


def _as_vector(values: Any, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector, got shape {array.shape}")
    return array


@dataclass(frozen=True)
class SynapseState:
    """Xi (n_f x n_h, column j = pattern of hidden unit j) and Phi (n_h x n_h)."""

    xi: np.ndarray
    phi: np.ndarray

    def __post_init__(self) -> None:
        xi = np.asarray(self.xi, dtype=np.float64)
        phi = np.asarray(self.phi, dtype=np.float64)
        if xi.ndim != 2:
            raise InvalidArgumentError(f"xi must be a matrix, got shape {xi.shape}")
        if phi.shape != (xi.shape[1], xi.shape[1]):
            raise InvalidArgumentError(
                f"phi must be {xi.shape[1]}x{xi.shape[1]} to match xi, got {phi.shape}"
            )
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "phi", phi)

    @property
    def n_f(self) -> int:
        return self.xi.shape[0]

    @property
    def n_h(self) -> int:
        return self.xi.shape[1]

    def check(self, spec: ModelSpec) -> None:
        """Raise InvalidArgumentError unless the shapes match spec."""
        if self.xi.shape != (spec.n_f, spec.n_h):
            raise InvalidArgumentError(
                f"xi has shape {self.xi.shape}, spec expects ({spec.n_f}, {spec.n_h})"
            )

    def copy(self) -> SynapseState:
        return SynapseState(self.xi.copy(), self.phi.copy())


@dataclass(frozen=True)
class EpisodeGraph:
    """Directed successor relation: edge (k, j) means memory k is followed by j."""

    n_nodes: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    cycles: tuple[tuple[int, ...], ...] = ()

    def adjacency(self) -> np.ndarray:
        g = np.zeros((self.n_nodes, self.n_nodes))
        for k, j in self.edges:
            g[k, j] = 1.0
        return g

    def successor(self, node: int) -> int | None:
        for k, j in self.edges:
            if k == node:
                return j
        return None


@dataclass(frozen=True)
class NetworkState:
    """Feature currents v_f, hidden currents v_h and delay signal v_d."""

    v_f: np.ndarray
    v_h: np.ndarray
    v_d: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "v_f", _as_vector(self.v_f, "v_f"))
        object.__setattr__(self, "v_h", _as_vector(self.v_h, "v_h"))
        object.__setattr__(self, "v_d", _as_vector(self.v_d, "v_d"))
        if self.v_d.shape != self.v_f.shape:
            raise InvalidArgumentError(
                f"v_d has length {self.v_d.size}, v_f has length {self.v_f.size}"
            )

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.v_f))
            and np.all(np.isfinite(self.v_h))
            and np.all(np.isfinite(self.v_d))
        )

    def check(self, spec: ModelSpec) -> None:
        if self.v_f.size != spec.n_f or self.v_h.size != spec.n_h:
            raise InvalidArgumentError(
                f"state shapes (v_f={self.v_f.size}, v_h={self.v_h.size}) do not match "
                f"spec (n_f={spec.n_f}, n_h={spec.n_h})"
            )

    def advanced(self, deriv: StateDerivative, h: float) -> NetworkState:
        """Euler-style move along deriv; empty dv_h leaves v_h untouched."""
        v_h = self.v_h + h * deriv.dv_h if deriv.dv_h.size else self.v_h
        return NetworkState(self.v_f + h * deriv.dv_f, v_h, self.v_d + h * deriv.dv_d)

    def replace(self, **changes: np.ndarray) -> NetworkState:
        values = {"v_f": self.v_f, "v_h": self.v_h, "v_d": self.v_d, **changes}
        return NetworkState(**values)


@dataclass(frozen=True)
class StateDerivative:
    """Time derivatives; dv_h is empty for the diabatic variants."""

    dv_f: np.ndarray
    dv_h: np.ndarray
    dv_d: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "dv_f", _as_vector(self.dv_f, "dv_f"))
        object.__setattr__(self, "dv_h", _as_vector(self.dv_h, "dv_h"))
        object.__setattr__(self, "dv_d", _as_vector(self.dv_d, "dv_d"))

    @classmethod
    def zeros_like(cls, state: NetworkState, diabatic: bool) -> StateDerivative:
        dv_h = np.zeros(0) if diabatic else np.zeros_like(state.v_h)
        return cls(np.zeros_like(state.v_f), dv_h, np.zeros_like(state.v_d))

    def combine(self, *others: tuple[float, StateDerivative]) -> StateDerivative:
        """Weighted sum self + sum(w * other)."""
        dv_f, dv_h, dv_d = self.dv_f.copy(), self.dv_h.copy(), self.dv_d.copy()
        for weight, other in others:
            dv_f += weight * other.dv_f
            dv_h += weight * other.dv_h
            dv_d += weight * other.dv_d
        return StateDerivative(dv_f, dv_h, dv_d)


@dataclass
class EnergyReport:
    """Energy and its rate split. LISEM-only fields are None for other variants."""

    total: float
    f_rate: float
    g_rate: float
    e_assoc: float | None = None
    e_seq: float | None = None
    e_c: float | None = None


@dataclass
class FixedPointResult:
    """Converged fast-subsystem state on a frozen-delay energy surface."""

    state: NetworkState
    iterations: int
    residual: float


@dataclass
class Trajectory:
    """Recorded snapshots of one run."""

    times: np.ndarray
    states: list[NetworkState]
    overlaps: np.ndarray
    energies: list[EnergyReport] | None = None

    def __len__(self) -> int:
        return len(self.states)

    @property
    def v_f(self) -> np.ndarray:
        return np.stack([s.v_f for s in self.states])

    @property
    def v_d(self) -> np.ndarray:
        return np.stack([s.v_d for s in self.states])


class MemorySettings(BaseModel):
    """Random memories and the episodes linking them."""

    model_config = ConfigDict(frozen=True)

    seed: int = 0
    cycles: tuple[tuple[int, ...], ...] = ((0, 1, 2), (3, 4, 5, 6))
    episode_length: int = Field(default=4, ge=2, description="Memories in the learned episode")

    @model_validator(mode="after")
    def _check_cycles(self) -> MemorySettings:
        members = [i for cycle in self.cycles for i in cycle]
        if any(i < 0 for i in members) or len(set(members)) != len(members):
            raise ValueError(f"cycles must use distinct non-negative indices, got {self.cycles}")
        if any(len(cycle) == 1 for cycle in self.cycles):
            raise ValueError("a single-memory cycle would be a self-loop")
        return self


class SimulationSettings(BaseModel):
    """Run length, step and cue of a retrieval simulation."""

    model_config = ConfigDict(frozen=True)

    duration: float = Field(default=300.0, gt=0.0)
    dt: float = Field(default=0.01, gt=0.0)
    record_every: int = Field(default=10, ge=1)
    cue_memory: int = Field(default=0, ge=0)
    noise_fraction: float = Field(default=0.0, ge=0.0, lt=0.5)
    seed: int = 0


class RetrievalCriterion(BaseModel):
    """When an overlap trace counts as a visit to a memory."""

    model_config = ConfigDict(frozen=True)

    overlap_threshold: float = Field(default=0.9, gt=0.0, le=1.0)
    min_dwell: float = Field(default=1.0, gt=0.0)
    max_time: float = Field(default=300.0, gt=0.0)


class LearningConfig(BaseModel):
    """
    Online energy learning settings.

    Attributes:
        tau_l_xi, tau_l_phi: learning timescales of Xi and Phi, in presentation steps
        beta_c: weight of the current-state energy term
        steps_per_memory: integration steps each memory is presented for
        epochs: passes over the episode
        init_range: half-width of the uniform synapse initialization
        dt: integration step of the delay signal during presentation
        trace_every: record the driven-state energy every this many steps
    """

    model_config = ConfigDict(frozen=True)

    tau_l_xi: float = Field(default=6.2e5, gt=0.0)
    tau_l_phi: float = Field(default=6.2e7, gt=0.0)
    beta_c: float = Field(default=0.621, gt=0.0, le=1.0)
    steps_per_memory: int = Field(default=4500, ge=1)
    epochs: int = Field(default=100, ge=0)
    init_range: float = Field(default=1.0, gt=0.0)
    dt: float = Field(default=0.01, gt=0.0)
    trace_every: int = Field(default=50, ge=1)


class CapacitySettings(BaseModel):
    """
    Capacity sweep settings.

    The n_f grid defaults to 10, 20, ..., 100, 125, 150, ..., 500. Each cued
    run lasts max(criterion.max_time, horizon_per_memory * (k + 1)).
    """

    model_config = ConfigDict(frozen=True)

    variant: Variant = Variant.DSEM
    k_values: tuple[int, ...] = (3, 4, 5)
    trials: int = Field(default=25, ge=1)
    seed: int = 0
    n_jobs: int = 1
    n_f_grid: tuple[int, ...] = Field(default_factory=lambda: default_n_f_grid())
    refine_step: int = Field(default=5, ge=1)
    horizon_per_memory: float = Field(default=150.0, gt=0.0)
    dt: float = Field(default=0.01, gt=0.0)
    alpha_s: float | None = Field(default=None, gt=0.0)
    alpha_c: float = Field(default=4.9, ge=0.0)

    @model_validator(mode="after")
    def _check_grid(self) -> CapacitySettings:
        if any(k < 2 for k in self.k_values):
            raise ValueError(f"episode lengths must be at least 2, got {self.k_values}")
        grid = list(self.n_f_grid)
        if not grid or grid != sorted(set(grid)) or grid[0] < 1 or grid[-1] > 500:
            raise ValueError("n_f_grid must be strictly increasing within [1, 500]")
        return self


def default_n_f_grid() -> tuple[int, ...]:
    return tuple(range(10, 101, 10)) + tuple(range(125, 501, 25))


def learning_canonical() -> tuple[ModelSpec, LearningConfig]:
    """DSEM spec and learning settings of the 4-memory cyclic learning task."""
    spec = ModelSpec(
        variant=Variant.DSEM, n_f=100, n_h=20, alpha_s=1.0, alpha_c=0.991,
        gamma=1.0, tau_f=1.0, tau_d=100.0,
    )
    return spec, LearningConfig()


@dataclass
class TrainingSnapshot:
    """Synapses and driven-trajectory energy at the end of one epoch."""

    epoch: int
    xi: np.ndarray
    phi: np.ndarray
    energy_trace: list[float]
    energy_gap: float = float("nan")


@dataclass
class CapacityResult:
    """Minimum feature-layer size that stores and retrieves a k-cycle."""

    variant: Variant
    k: int
    trials: int
    n_f_grid: list[int]
    successes: dict[int, int]
    min_n_f_per_trial: list[int | None]
    mean_min_n_f: float
    std_min_n_f: float
    saturated_count: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "variant": self.variant.value,
            "k": self.k,
            "trials": self.trials,
            "mean_min_nf": self.mean_min_n_f,
            "std_min_nf": self.std_min_n_f,
            "saturated_count": self.saturated_count,
            "per_trial": self.min_n_f_per_trial,
            "successes": {str(n): c for n, c in sorted(self.successes.items())},
        }
