"""
Energy Diagnostics

Energy functions of the general model and of its LISEM and DSEM reductions,
the split of the energy rate into the fast-subsystem term F and the delay
term G, and the search for instantaneous fixed points of the fast subsystem
on the energy surface defined by a frozen delay signal.

Every layer activation is the gradient of a Lagrangian:

- tanh(g v)     <- sum_i (1/g) log cosh(g v_i)
- identity      <- 1/2 |v|^2
- softmax(g v)  <- (1/g) log sum_i exp(g v_i)
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..exceptions import ConvergenceError, InvalidArgumentError
from ..models.models import (
    Activation,
    EnergyReport,
    FixedPointResult,
    ModelSpec,
    NetworkState,
    StateDerivative,
    SynapseState,
    Trajectory,
    Variant,
)
from .dynamics import activate, make_rhs, variant_rhs, with_derived_hidden
from .retrieval import overlaps

logger = logging.getLogger(__name__)


def log_cosh(x: np.ndarray) -> np.ndarray:
    """log(cosh(x)) without overflow for large |x|."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


@dataclass(frozen=True)
class Lagrangian:
    """Scalar potential of one layer together with its gradient and Hessian."""

    kind: Activation
    gamma: float = 1.0

    def value(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=np.float64)
        if self.kind is Activation.TANH:
            return float(np.sum(log_cosh(self.gamma * v)) / self.gamma)
        if self.kind is Activation.SOFTMAX:
            return float(np.logaddexp.reduce(self.gamma * v) / self.gamma)
        return 0.5 * float(v @ v)

    def gradient(self, v: np.ndarray) -> np.ndarray:
        return activate(self.kind, v, self.gamma)

    def hessian(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if self.kind is Activation.TANH:
            return np.diag(self.gamma / np.cosh(self.gamma * v) ** 2)
        if self.kind is Activation.SOFTMAX:
            p = activate(Activation.SOFTMAX, v, self.gamma)
            return self.gamma * (np.diag(p) - np.outer(p, p))
        return np.eye(v.size)

    def hessian_quadratic(self, v: np.ndarray, x: np.ndarray) -> float:
        """x^T H(v) x, evaluated without forming H."""
        v = np.asarray(v, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        if self.kind is Activation.TANH:
            return float(np.sum(self.gamma * x**2 / np.cosh(self.gamma * v) ** 2))
        if self.kind is Activation.SOFTMAX:
            p = activate(Activation.SOFTMAX, v, self.gamma)
            centered = x - p @ x
            return float(self.gamma * np.sum(p * centered**2))
        return float(x @ x)


@dataclass(frozen=True)
class LagrangianPair:
    feature: Lagrangian
    hidden: Lagrangian


def lagrangians_for(spec: ModelSpec) -> LagrangianPair:
    """Lagrangians matching the variant's layer activations."""
    return LagrangianPair(
        feature=Lagrangian(spec.feature_activation, spec.gamma),
        hidden=Lagrangian(spec.hidden_activation, spec.gamma),
    )


def _check_variant(spec: ModelSpec, variant: Variant) -> None:
    if spec.variant is not variant:
        raise InvalidArgumentError(
            f"{variant.value} energy requested for a {spec.variant.value} model"
        )


def _check_shapes(state: NetworkState, syn: SynapseState) -> None:
    n_f, n_h = syn.xi.shape
    if state.v_f.size != n_f or state.v_d.size != n_f or state.v_h.size != n_h:
        raise InvalidArgumentError(
            f"state (v_f={state.v_f.size}, v_h={state.v_h.size}, v_d={state.v_d.size}) "
            f"does not match synapses of shape {syn.xi.shape}"
        )


def energy_gsemm(
    state: NetworkState,
    syn: SynapseState,
    spec: ModelSpec,
    lag: LagrangianPair | None = None,
) -> float:
    """
    Energy of the general model.

        E = [V_f^T s_f - L_f] + [V_h^T s_h - L_h]
            - sqrt(a_s) s_f^T Xi s_h - c V_d^T Xi Phi s_h

    with s_f = grad L_f(V_f), s_h = grad L_h(V_h) and c the delay strength of
    the variant. For LISEM and DSEM pass a state carrying the diabatic V_h.
    """
    _check_shapes(state, syn)
    lag = lag or lagrangians_for(spec)
    s_f = lag.feature.gradient(state.v_f)
    s_h = lag.hidden.gradient(state.v_h)
    feature_term = float(state.v_f @ s_f) - lag.feature.value(state.v_f)
    hidden_term = float(state.v_h @ s_h) - lag.hidden.value(state.v_h)
    coupling = np.sqrt(spec.alpha_s) * float(s_f @ (syn.xi @ s_h))
    delayed_coupling = spec.delay_strength * float(state.v_d @ (syn.xi @ (syn.phi @ s_h)))
    return feature_term + hidden_term - coupling - delayed_coupling


def energy_lisem(
    state: NetworkState,
    syn: SynapseState,
    spec: ModelSpec,
    deriv: StateDerivative | None = None,
) -> EnergyReport:
    """
    LISEM energy and its three components.

        E_assoc = V_f^T s - sum (1/g) log cosh(g V_f) - (a_s / 2) s^T Xi Xi^T s
        E_seq   = -sqrt(a_s) c s^T Xi Phi^T Xi^T V_d
        E_c     = -(c^2 / 2) V_d^T Xi Phi Phi^T Xi^T V_d

    with s = tanh(g V_f) and c = spec.delay_strength. The F / G rates are
    evaluated from deriv, or from the LISEM dynamics at state when deriv is
    omitted.

    Raises:
        InvalidArgumentError: if spec is not a LISEM model
    """
    _check_variant(spec, Variant.LISEM)
    state = with_derived_hidden(state, syn, spec)
    g = spec.gamma
    s = np.tanh(g * state.v_f)
    projected = syn.xi.T @ s
    delayed = syn.phi.T @ (syn.xi.T @ state.v_d)

    e_assoc = (
        float(state.v_f @ s)
        - float(np.sum(log_cosh(g * state.v_f))) / g
        - 0.5 * spec.alpha_s * float(projected @ projected)
    )
    c = spec.delay_strength
    e_seq = -np.sqrt(spec.alpha_s) * c * float(projected @ delayed)
    e_c = -0.5 * c**2 * float(delayed @ delayed)

    deriv = deriv if deriv is not None else variant_rhs(state, syn, spec)
    f_rate, g_rate = energy_rate_terms(state, deriv, syn, spec)
    return EnergyReport(
        total=e_assoc + e_seq + e_c,
        f_rate=f_rate,
        g_rate=g_rate,
        e_assoc=e_assoc,
        e_seq=e_seq,
        e_c=e_c,
    )


def energy_lisem_master(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> float:
    """LISEM energy evaluated through the general form at the diabatic hidden state."""
    _check_variant(spec, Variant.LISEM)
    return energy_gsemm(with_derived_hidden(state, syn, spec), syn, spec)


def energy_dsem(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> float:
    """
    DSEM energy at the V_h carried by state.

        E = 1/2 V_f^T V_f + V_h^T p - (1/g) lse(g V_h)
            - sqrt(a_s) V_f^T Xi p - a_c V_d^T Xi Phi p

    with p = softmax(g V_h). V_h is used as given; at the diabatic hidden drive
    the value reduces to 1/2 |V_f|^2 - (1/g) lse(g h).

    Raises:
        InvalidArgumentError: if spec is not a DSEM model
    """
    _check_variant(spec, Variant.DSEM)
    _check_shapes(state, syn)
    g = spec.gamma
    p = activate(Activation.SOFTMAX, state.v_h, g)
    xi_p = syn.xi @ p
    return float(
        0.5 * float(state.v_f @ state.v_f)
        + float(state.v_h @ p)
        - float(np.logaddexp.reduce(g * state.v_h)) / g
        - np.sqrt(spec.alpha_s) * float(state.v_f @ xi_p)
        - spec.alpha_c * float(state.v_d @ (syn.xi @ (syn.phi @ p)))
    )


def energy_rate_terms(
    state: NetworkState,
    deriv: StateDerivative,
    syn: SynapseState,
    spec: ModelSpec,
    lag: LagrangianPair | None = None,
) -> tuple[float, float]:
    """
    Split dE/dt into the fast-subsystem term F and the delay term G.

        F = -[T_f dV_f^T H(L_f) dV_f + T_h dV_h^T H(L_h) dV_h]
        G = -c s_h(V_h)^T Phi^T Xi^T dV_d

    The hidden part of F is dropped when dv_h is empty (diabatic variants).
    """
    _check_shapes(state, syn)
    if deriv.dv_f.size != state.v_f.size or deriv.dv_d.size != state.v_d.size:
        raise InvalidArgumentError("derivative shapes do not match the state")
    lag = lag or lagrangians_for(spec)

    f_rate = -spec.tau_f * lag.feature.hessian_quadratic(state.v_f, deriv.dv_f)
    if deriv.dv_h.size:
        if deriv.dv_h.size != state.v_h.size:
            raise InvalidArgumentError("dv_h does not match v_h")
        f_rate -= spec.tau_h * lag.hidden.hessian_quadratic(state.v_h, deriv.dv_h)

    s_h = lag.hidden.gradient(state.v_h)
    g_rate = -spec.delay_strength * float(s_h @ (syn.phi.T @ (syn.xi.T @ deriv.dv_d)))
    return f_rate, g_rate


def energy_report(
    state: NetworkState,
    syn: SynapseState,
    spec: ModelSpec,
    deriv: StateDerivative | None = None,
) -> EnergyReport:
    """Energy diagnostics of any variant; LISEM reports carry the decomposition."""
    if spec.variant is Variant.LISEM:
        return energy_lisem(state, syn, spec, deriv=deriv)
    if spec.variant.diabatic:
        state = with_derived_hidden(state, syn, spec)
    deriv = deriv if deriv is not None else variant_rhs(state, syn, spec)
    total = energy_dsem(state, syn, spec) if spec.variant is Variant.DSEM else energy_gsemm(state, syn, spec)
    f_rate, g_rate = energy_rate_terms(state, deriv, syn, spec)
    return EnergyReport(total=total, f_rate=f_rate, g_rate=g_rate)


def surface_energy(report: EnergyReport) -> float:
    """Energy with the V_f-independent E_c term removed."""
    return report.total - (report.e_c or 0.0)


def memory_energies(
    syn: SynapseState,
    spec: ModelSpec,
    v_d: np.ndarray,
    memories: np.ndarray | None = None,
) -> np.ndarray:
    """Surface energy with V_f placed on each memory and the delay signal at v_d."""
    memories = syn.xi if memories is None else np.asarray(memories, dtype=np.float64)
    energies = []
    for column in memories.T:
        state = NetworkState(v_f=column, v_h=np.zeros(syn.n_h), v_d=v_d)
        if spec.variant.diabatic:
            state = with_derived_hidden(state, syn, spec)
        energies.append(surface_energy(energy_report(state, syn, spec)))
    return np.asarray(energies)


def find_instantaneous_fixed_point(
    start: NetworkState,
    syn: SynapseState,
    spec: ModelSpec,
    frozen_v_d: np.ndarray,
    step: float = 0.1,
    tol: float = 1e-6,
    max_iters: int = 100_000,
) -> FixedPointResult:
    """
    Relax the fast subsystem on the energy surface of a frozen delay signal.

    Iterates V_f <- V_f + step * dV_f/dt (and V_h likewise for the general
    model) until the sup-norm of the fast derivatives drops below tol.

    Args:
        start: initial state
        syn: synapses
        spec: model parameters
        frozen_v_d: delay signal defining the surface
        step: relaxation step
        tol: convergence threshold on the sup-norm of the derivative
        max_iters: iteration cap

    Returns:
        FixedPointResult with the converged state (diabatic V_h derived),
        iteration count and final residual

    Raises:
        InvalidArgumentError: on non-positive step or tol
        ConvergenceError: if max_iters is reached or the iteration diverges
    """
    if step <= 0 or tol <= 0:
        raise InvalidArgumentError(f"step and tol must be positive, got {step}, {tol}")
    v_d = np.asarray(frozen_v_d, dtype=np.float64)
    rhs = make_rhs(syn, spec, frozen_v_d=v_d)
    state = start.replace(v_d=v_d)

    residual = float("inf")
    for iteration in range(max_iters + 1):
        deriv = rhs(state)
        residual = float(np.max(np.abs(deriv.dv_f), initial=0.0))
        if deriv.dv_h.size:
            residual = max(residual, float(np.max(np.abs(deriv.dv_h))))
        if not np.isfinite(residual):
            raise ConvergenceError(residual, iteration)
        if residual < tol:
            if spec.variant.diabatic:
                state = with_derived_hidden(state, syn, spec)
            return FixedPointResult(state=state, iterations=iteration, residual=residual)
        if iteration == max_iters:
            break
        state = state.advanced(deriv, step)

    raise ConvergenceError(residual, max_iters)


@dataclass
class FixedPointSample:
    """Instantaneous fixed point reached from one recorded snapshot."""

    time: float
    iterations: int
    energy: float
    leading_memory: int
    overlaps: np.ndarray
    memory_energies: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _fixed_point_sample(
    time: float,
    snapshot: NetworkState,
    syn: SynapseState,
    spec: ModelSpec,
    memories: np.ndarray,
    step: float,
    tol: float,
    max_iters: int,
) -> FixedPointSample:
    result = find_instantaneous_fixed_point(
        snapshot, syn, spec, snapshot.v_d, step=step, tol=tol, max_iters=max_iters
    )
    m = overlaps(result.state.v_f, memories, spec)
    return FixedPointSample(
        time=time,
        iterations=result.iterations,
        energy=surface_energy(energy_report(result.state, syn, spec)),
        leading_memory=int(np.argmax(m)),
        overlaps=m,
        memory_energies=memory_energies(syn, spec, snapshot.v_d, memories),
    )


def track_fixed_points(
    traj: Trajectory,
    syn: SynapseState,
    spec: ModelSpec,
    sample_every: int = 1,
    memories: np.ndarray | None = None,
    step: float = 0.1,
    tol: float = 1e-6,
    max_iters: int = 100_000,
    n_jobs: int = 1,
) -> list[FixedPointSample]:
    """
    Follow the instantaneous fixed point along a recorded trajectory.

    Every sample_every-th snapshot defines a frozen delay signal; the fast
    subsystem is relaxed from the recorded state. Samples are independent and
    run through joblib.
    """
    if sample_every < 1:
        raise InvalidArgumentError(f"sample_every must be at least 1, got {sample_every}")
    memories = syn.xi if memories is None else np.asarray(memories, dtype=np.float64)
    picks = range(0, len(traj), sample_every)
    logger.info("tracking fixed points at %d snapshots", len(picks))
    return Parallel(n_jobs=n_jobs)(
        delayed(_fixed_point_sample)(
            float(traj.times[i]), traj.states[i], syn, spec, memories, step, tol, max_iters
        )
        for i in picks
    )
