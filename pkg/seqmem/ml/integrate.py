"""
Fixed-step integration of the network dynamics.

Classical fourth-order Runge-Kutta is applied jointly to every integrated
component. Diabatic variants integrate only V_f and V_d; their hidden currents
are recomputed whenever a snapshot is stored.
"""

import logging

import numpy as np

from ..exceptions import InvalidArgumentError, NumericalBlowupError
from ..models.models import (
    Activation,
    EnergyReport,
    ModelSpec,
    NetworkState,
    SynapseState,
    Trajectory,
    Variant,
)
from .dynamics import Rhs, activate, make_rhs, with_derived_hidden
from .energy import energy_report
from .retrieval import overlaps

logger = logging.getLogger(__name__)


def rk4_step(rhs: Rhs, state: NetworkState, dt: float, t: float = 0.0) -> NetworkState:
    """
    Advance state by one RK4 step of size dt.

    Raises:
        InvalidArgumentError: if dt is not positive
        NumericalBlowupError: if the new state is not finite (carries t + dt)
    """
    if dt <= 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    k1 = rhs(state)
    k2 = rhs(state.advanced(k1, 0.5 * dt))
    k3 = rhs(state.advanced(k2, 0.5 * dt))
    k4 = rhs(state.advanced(k3, dt))
    increment = k1.combine((2.0, k2), (2.0, k3), (1.0, k4))
    new_state = state.advanced(increment, dt / 6.0)
    if not new_state.is_finite():
        raise NumericalBlowupError(t + dt)
    return new_state


def simulate(
    spec: ModelSpec,
    syn: SynapseState,
    init: NetworkState,
    duration: float,
    dt: float = 0.01,
    record_every: int = 10,
    memories: np.ndarray | None = None,
    rhs: Rhs | None = None,
    with_energy: bool = False,
) -> Trajectory:
    """
    Integrate from init for duration time units.

    Snapshots are taken every record_every steps, at t = 0 and at the final
    step. Overlaps are measured against memories (default: the columns of
    Xi). With with_energy the EnergyReport of every snapshot is attached.

    Args:
        spec: model parameters
        syn: synapses
        init: initial state
        duration: simulated time
        dt: RK4 step
        record_every: steps between snapshots
        memories: n_f x K matrix used for overlaps
        rhs: derivative function; defaults to the variant's dynamics
        with_energy: compute energy diagnostics at every snapshot

    Returns:
        Trajectory

    Raises:
        InvalidArgumentError: on non-positive duration, dt or record_every
        NumericalBlowupError: if the state becomes non-finite
    """
    if duration <= 0 or dt <= 0:
        raise InvalidArgumentError(f"duration and dt must be positive, got {duration}, {dt}")
    if record_every < 1:
        raise InvalidArgumentError(f"record_every must be at least 1, got {record_every}")
    syn.check(spec)
    init.check(spec)

    rhs = rhs or make_rhs(syn, spec)
    memories = syn.xi if memories is None else np.asarray(memories, dtype=np.float64)
    n_steps = max(1, int(round(duration / dt)))

    times: list[float] = []
    states: list[NetworkState] = []
    energies: list[EnergyReport] = []

    def record(step: int, state: NetworkState) -> None:
        if spec.variant.diabatic:
            state = with_derived_hidden(state, syn, spec)
        times.append(step * dt)
        states.append(state)
        if with_energy:
            energies.append(energy_report(state, syn, spec, deriv=rhs(state)))

    logger.debug("simulating %s for %d steps (dt=%g)", spec.variant.value, n_steps, dt)
    state = init
    record(0, state)
    for step in range(1, n_steps + 1):
        state = rk4_step(rhs, state, dt, t=(step - 1) * dt)
        if step % record_every == 0 or step == n_steps:
            record(step, state)

    overlap_trace = np.stack([overlaps(s.v_f, memories, spec) for s in states])
    return Trajectory(
        times=np.asarray(times),
        states=states,
        overlaps=overlap_trace,
        energies=energies if with_energy else None,
    )


def init_from_cue(
    memory: np.ndarray,
    noise_fraction: float,
    seed: int,
    spec: ModelSpec,
    syn: SynapseState | None = None,
) -> NetworkState:
    """
    Start the network at a (possibly corrupted) memory.

    floor(noise_fraction * n_f) distinct entries are sign-flipped. The delay
    signal starts at its own fixed point for that feature state (tanh(g V_f)
    for LISEM, V_f for DSEM, sigma_f(V_f) in general). The hidden currents take
    their diabatic value when syn is given, otherwise zero.

    Raises:
        InvalidArgumentError: if noise_fraction is outside [0, 0.5) or the
            memory length differs from n_f
    """
    if not 0.0 <= noise_fraction < 0.5:
        raise InvalidArgumentError(f"noise_fraction must lie in [0, 0.5), got {noise_fraction}")
    v_f = np.array(memory, dtype=np.float64)
    if v_f.shape != (spec.n_f,):
        raise InvalidArgumentError(f"cue has shape {v_f.shape}, expected ({spec.n_f},)")

    n_flip = int(np.floor(noise_fraction * spec.n_f))
    if n_flip:
        rng = np.random.default_rng(seed)
        flipped = rng.choice(spec.n_f, size=n_flip, replace=False)
        v_f[flipped] *= -1.0

    if spec.variant is Variant.DSEM or spec.feature_activation is Activation.IDENTITY:
        v_d = v_f.copy()
    else:
        v_d = activate(spec.feature_activation, v_f, spec.gamma)

    state = NetworkState(v_f=v_f, v_h=np.zeros(spec.n_h), v_d=v_d)
    if syn is not None and spec.variant.diabatic:
        state = with_derived_hidden(state, syn, spec)
    return state
