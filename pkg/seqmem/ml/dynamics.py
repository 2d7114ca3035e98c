"""
Right-hand sides of the sequential episodic memory dynamics.

Three families are implemented:

- the general model (FULL), with integrated feature, hidden and delay layers
- LISEM: tanh feature layer, identity hidden layer, hidden layer eliminated
- DSEM: identity feature layer, softmax hidden layer, hidden layer eliminated

In the diabatic variants the hidden currents are the algebraic steady state
h = sqrt(alpha_s) Xi^T sigma_f(V_f) + c Phi^T Xi^T V_d, where c is the
variant's delay strength (see ModelSpec.delay_strength).

The module also carries the delay-convolution reference used to check that
the delay ODE reproduces the exponentially filtered feature history.
"""

from collections.abc import Callable

import numpy as np

from ..exceptions import InvalidArgumentError
from ..models.models import (
    Activation,
    ModelSpec,
    NetworkState,
    StateDerivative,
    SynapseState,
    Variant,
)

Rhs = Callable[[NetworkState], StateDerivative]

# Kernel support of the delay filter, in units of tau_d.
KERNEL_SPAN = 20.0


def tanh_activation(v: np.ndarray, gamma: float) -> np.ndarray:
    """Elementwise tanh(gamma * v)."""
    return np.tanh(gamma * np.asarray(v, dtype=np.float64))


def softmax_activation(v: np.ndarray, gamma: float) -> np.ndarray:
    """Softmax of gamma * v, computed after max-subtraction."""
    z = gamma * np.asarray(v, dtype=np.float64)
    if z.size == 0:
        raise InvalidArgumentError("softmax of an empty vector is undefined")
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def identity_activation(v: np.ndarray, gamma: float = 1.0) -> np.ndarray:
    return np.asarray(v, dtype=np.float64)


_ACTIVATIONS: dict[Activation, Callable[[np.ndarray, float], np.ndarray]] = {
    Activation.IDENTITY: identity_activation,
    Activation.TANH: tanh_activation,
    Activation.SOFTMAX: softmax_activation,
}


def activate(kind: Activation, v: np.ndarray, gamma: float) -> np.ndarray:
    return _ACTIVATIONS[Activation(kind)](v, gamma)


def _check_shapes(state: NetworkState, syn: SynapseState) -> None:
    n_f, n_h = syn.xi.shape
    if state.v_f.size != n_f or state.v_d.size != n_f:
        raise InvalidArgumentError(
            f"feature vectors have length {state.v_f.size}/{state.v_d.size}, xi has {n_f} rows"
        )
    if state.v_h.size not in (0, n_h):
        raise InvalidArgumentError(f"v_h has length {state.v_h.size}, xi has {n_h} columns")


def diabatic_hidden(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> np.ndarray:
    """Hidden currents at their instantaneous steady state (tau_h -> 0)."""
    _check_shapes(state, syn)
    sigma_f = activate(spec.feature_activation, state.v_f, spec.gamma)
    delayed = syn.phi.T @ (syn.xi.T @ state.v_d)
    return np.sqrt(spec.alpha_s) * (syn.xi.T @ sigma_f) + spec.delay_strength * delayed


def with_derived_hidden(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> NetworkState:
    """Return state with v_h replaced by the diabatic hidden currents."""
    return state.replace(v_h=diabatic_hidden(state, syn, spec))


def gsemm_rhs(
    state: NetworkState,
    syn: SynapseState,
    spec: ModelSpec,
    sigma_f: Activation | None = None,
    sigma_h: Activation | None = None,
) -> StateDerivative:
    """
    Time derivatives of the general model.

        tau_f dV_f/dt = sqrt(a_s) Xi sigma_h(V_h) - V_f
        tau_h dV_h/dt = sqrt(a_s) Xi^T sigma_f(V_f) + a_c Phi^T Xi^T V_d - V_h
        tau_d dV_d/dt = sigma_f(V_f) - V_d

    Args:
        state: current network state (v_h must have length n_h)
        syn: synapses
        spec: parameters; sigma_f / sigma_h default to spec.sigma_f / spec.sigma_h
        sigma_f, sigma_h: activation overrides

    Raises:
        InvalidArgumentError: on shape mismatch
    """
    _check_shapes(state, syn)
    if state.v_h.size != syn.n_h:
        raise InvalidArgumentError("the general model integrates v_h; it must have length n_h")
    f_kind = spec.sigma_f if sigma_f is None else sigma_f
    h_kind = spec.sigma_h if sigma_h is None else sigma_h
    root_s = np.sqrt(spec.alpha_s)

    s_f = activate(f_kind, state.v_f, spec.gamma)
    s_h = activate(h_kind, state.v_h, spec.gamma)

    dv_f = (root_s * (syn.xi @ s_h) - state.v_f) / spec.tau_f
    hidden_drive = root_s * (syn.xi.T @ s_f) + spec.alpha_c * (syn.phi.T @ (syn.xi.T @ state.v_d))
    dv_h = (hidden_drive - state.v_h) / spec.tau_h
    dv_d = (s_f - state.v_d) / spec.tau_d
    return StateDerivative(dv_f, dv_h, dv_d)


def lisem_rhs(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> StateDerivative:
    """
    LISEM feature and delay derivatives.

        tau_f dV_f/dt = a_s Xi Xi^T tanh(g V_f) + sqrt(a_s) c Xi Phi^T Xi^T V_d - V_f
        tau_d dV_d/dt = tanh(g V_f) - V_d

    with c = spec.delay_strength.
    """
    _check_shapes(state, syn)
    s_f = tanh_activation(state.v_f, spec.gamma)
    associative = spec.alpha_s * (syn.xi @ (syn.xi.T @ s_f))
    sequential = np.sqrt(spec.alpha_s) * spec.delay_strength * (syn.xi @ (syn.phi.T @ (syn.xi.T @ state.v_d)))
    dv_f = (associative + sequential - state.v_f) / spec.tau_f
    dv_d = (s_f - state.v_d) / spec.tau_d
    return StateDerivative(dv_f, np.zeros(0), dv_d)


def dsem_rhs(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> StateDerivative:
    """
    DSEM feature and delay derivatives.

        h = sqrt(a_s) Xi^T V_f + a_c Phi^T Xi^T V_d
        tau_f dV_f/dt = sqrt(a_s) Xi softmax_g(h) - V_f
        tau_d dV_d/dt = V_f - V_d
    """
    _check_shapes(state, syn)
    root_s = np.sqrt(spec.alpha_s)
    h = root_s * (syn.xi.T @ state.v_f) + spec.alpha_c * (syn.phi.T @ (syn.xi.T @ state.v_d))
    dv_f = (root_s * (syn.xi @ softmax_activation(h, spec.gamma)) - state.v_f) / spec.tau_f
    dv_d = (state.v_f - state.v_d) / spec.tau_d
    return StateDerivative(dv_f, np.zeros(0), dv_d)


def variant_rhs(state: NetworkState, syn: SynapseState, spec: ModelSpec) -> StateDerivative:
    """Dispatch on spec.variant."""
    if spec.variant is Variant.LISEM:
        return lisem_rhs(state, syn, spec)
    if spec.variant is Variant.DSEM:
        return dsem_rhs(state, syn, spec)
    return gsemm_rhs(state, syn, spec)


def make_rhs(
    syn: SynapseState,
    spec: ModelSpec,
    frozen_v_d: np.ndarray | None = None,
    clamped_v_f: np.ndarray | None = None,
) -> Rhs:
    """
    Bind synapses and parameters into a derivative function.

    Args:
        frozen_v_d: hold the delay signal at this value (dv_d = 0)
        clamped_v_f: hold the feature layer at this stimulus (dv_f = 0)
    """
    frozen = None if frozen_v_d is None else np.asarray(frozen_v_d, dtype=np.float64)
    clamped = None if clamped_v_f is None else np.asarray(clamped_v_f, dtype=np.float64)

    def rhs(state: NetworkState) -> StateDerivative:
        if frozen is not None:
            state = state.replace(v_d=frozen)
        if clamped is not None:
            state = state.replace(v_f=clamped)
        deriv = variant_rhs(state, syn, spec)
        dv_f = np.zeros_like(deriv.dv_f) if clamped is not None else deriv.dv_f
        dv_d = np.zeros_like(deriv.dv_d) if frozen is not None else deriv.dv_d
        return StateDerivative(dv_f, deriv.dv_h, dv_d)

    return rhs


def delay_convolution_reference(feature_history: np.ndarray, tau_d: float, t: float) -> np.ndarray:
    """
    Evaluate (1/tau_d) * int_0^inf sigma_f(V_f(t - x)) exp(-x / tau_d) dx.

    The history holds uniformly spaced samples of sigma_f(V_f) covering
    [0, t]. Lags up to min(t, 20 tau_d) are integrated by the trapezoidal rule;
    history before time 0 equals the first sample, whose share of the kernel
    up to 20 tau_d is added in closed form.

    Raises:
        InvalidArgumentError: on an empty history or non-positive tau_d
    """
    history = np.asarray(feature_history, dtype=np.float64)
    if history.shape[0] == 0:
        raise InvalidArgumentError("delay reference needs at least one history sample")
    if tau_d <= 0:
        raise InvalidArgumentError(f"tau_d must be positive, got {tau_d}")

    n = history.shape[0]
    if n == 1 or t <= 0:
        return history[0].copy()

    dt = t / (n - 1)
    span = KERNEL_SPAN * tau_d
    x_max = min(t, span)
    m = min(n - 1, int(np.floor(x_max / dt + 1e-9)))
    lags = dt * np.arange(m + 1)
    values = history[::-1][: m + 1]
    weights = np.exp(-lags / tau_d)
    if values.ndim > 1:
        weights = weights[:, None]
    result = np.trapezoid(values * weights, dx=dt, axis=0) / tau_d

    if t < span:
        result = result + history[0] * (np.exp(-t / tau_d) - np.exp(-KERNEL_SPAN))
    return result
