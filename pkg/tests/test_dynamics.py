import numpy as np
from pytest import approx, mark, raises

from seqmem.exceptions import InvalidArgumentError
from seqmem.ml.dynamics import (
    activate,
    delay_convolution_reference,
    diabatic_hidden,
    dsem_rhs,
    gsemm_rhs,
    lisem_rhs,
    make_rhs,
    softmax_activation,
    tanh_activation,
    variant_rhs,
    with_derived_hidden,
)
from seqmem.ml.integrate import init_from_cue, simulate
from seqmem.ml.memories import build_episode_graph, build_phi
from seqmem.models.models import (
    Activation,
    NetworkState,
    SynapseState,
    Variant,
    dsem_canonical,
    lisem_canonical,
)

from .conftest import hadamard, random_instance, random_state


def test_tanh_activation_values():
    np.testing.assert_allclose(tanh_activation(np.array([0.0, 1.0, -1.0]), 1.0), [0.0, 0.76159416, -0.76159416], rtol=1e-7)
    np.testing.assert_allclose(tanh_activation(np.array([1.0]), 2.0), [np.tanh(2.0)])


def test_softmax_activation_values():
    np.testing.assert_allclose(softmax_activation(np.zeros(4), 1.0), np.full(4, 0.25))
    np.testing.assert_allclose(softmax_activation(np.array([np.log(2.0), 0.0]), 1.0), [2 / 3, 1 / 3])
    p = softmax_activation(np.array([1000.0, 0.0]), 1.0)
    assert np.all(np.isfinite(p))
    np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-300)


def test_softmax_of_empty_vector_raises():
    with raises(InvalidArgumentError):
        softmax_activation(np.zeros(0), 1.0)


def test_identity_activation_passes_through():
    v = np.array([-2.0, 0.5])
    np.testing.assert_array_equal(activate(Activation.IDENTITY, v, 3.0), v)


def test_zero_synapses_give_pure_decay():
    spec, _, rng = random_instance(Variant.FULL, seed=0)
    syn = SynapseState(np.zeros((spec.n_f, spec.n_h)), np.zeros((spec.n_h, spec.n_h)))
    state = random_state(rng, spec)
    deriv = gsemm_rhs(state, syn, spec)
    np.testing.assert_allclose(deriv.dv_f, -state.v_f / spec.tau_f)
    np.testing.assert_allclose(deriv.dv_h, -state.v_h / spec.tau_h)
    np.testing.assert_allclose(deriv.dv_d, (np.tanh(spec.gamma * state.v_f) - state.v_d) / spec.tau_d)


def test_gsemm_rejects_shape_mismatch():
    spec, syn, rng = random_instance(Variant.FULL, seed=1)
    state = random_state(rng, spec)
    with raises(InvalidArgumentError):
        gsemm_rhs(state.replace(v_h=np.zeros(spec.n_h + 1)), syn, spec)
    with raises(InvalidArgumentError):
        gsemm_rhs(state, SynapseState(np.zeros((spec.n_f + 1, spec.n_h)), syn.phi), spec)


@mark.parametrize("seed", range(5))
def test_lisem_is_the_diabatic_limit_of_the_general_model(seed):
    spec, syn, rng = random_instance(Variant.LISEM, seed)
    state = with_derived_hidden(random_state(rng, spec), syn, spec)
    reduced = lisem_rhs(state, syn, spec)
    general = gsemm_rhs(state, syn, spec, sigma_f=Activation.TANH, sigma_h=Activation.IDENTITY)
    np.testing.assert_allclose(reduced.dv_f, general.dv_f, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(reduced.dv_d, general.dv_d, rtol=1e-10, atol=1e-12)
    assert reduced.dv_h.size == 0


@mark.parametrize("seed", range(5))
def test_dsem_is_the_diabatic_limit_of_the_general_model(seed):
    spec, syn, rng = random_instance(Variant.DSEM, seed)
    state = with_derived_hidden(random_state(rng, spec), syn, spec)
    reduced = dsem_rhs(state, syn, spec)
    general = gsemm_rhs(state, syn, spec, sigma_f=Activation.IDENTITY, sigma_h=Activation.SOFTMAX)
    np.testing.assert_allclose(reduced.dv_f, general.dv_f, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(reduced.dv_d, general.dv_d, rtol=1e-10, atol=1e-12)


def test_lisem_delay_strength_sets_the_field_ratio():
    spec, syn, rng = random_instance(Variant.LISEM, seed=3)
    state = random_state(rng, spec)
    c = spec.lisem_delay_scale * spec.alpha_s * spec.alpha_c
    expected = np.sqrt(spec.alpha_s) * syn.xi.T @ np.tanh(spec.gamma * state.v_f) + c * syn.phi.T @ syn.xi.T @ state.v_d
    np.testing.assert_allclose(diabatic_hidden(state, syn, spec), expected)

    canonical = lisem_canonical()
    ratio = canonical.delay_strength / canonical.alpha_s
    assert ratio == approx(0.37 * 4.9)
    rescaled = canonical.with_updates(alpha_s=0.2)
    assert rescaled.delay_strength / rescaled.alpha_s == approx(ratio)
    assert dsem_canonical().delay_strength == 4.9


def test_lisem_successor_field_against_the_held_memory():
    spec = lisem_canonical(n_f=64, n_h=3)
    xi = hadamard(64)[:, 1:4]
    syn = SynapseState(xi=xi, phi=build_phi(build_episode_graph([[0, 1, 2]]), spec.alpha_s))
    state = NetworkState(v_f=50.0 * xi[:, 0], v_h=np.zeros(3), v_d=xi[:, 0])
    deriv = lisem_rhs(state, syn, spec)
    field = spec.tau_f * deriv.dv_f + state.v_f
    per_memory = xi.T @ field / 64**2
    np.testing.assert_allclose(per_memory, [spec.alpha_s, spec.delay_strength, 0.0], atol=1e-12)
    assert per_memory[1] / per_memory[0] == approx(spec.lisem_delay_scale * spec.alpha_c)


def test_variant_rhs_dispatch():
    for variant, expected in ((Variant.LISEM, lisem_rhs), (Variant.DSEM, dsem_rhs)):
        spec, syn, rng = random_instance(variant, seed=4)
        state = random_state(rng, spec)
        np.testing.assert_array_equal(variant_rhs(state, syn, spec).dv_f, expected(state, syn, spec).dv_f)


def test_make_rhs_frozen_and_clamped():
    spec, syn, rng = random_instance(Variant.DSEM, seed=5)
    state = random_state(rng, spec)

    frozen = make_rhs(syn, spec, frozen_v_d=state.v_d)
    np.testing.assert_array_equal(frozen(state).dv_d, np.zeros(spec.n_f))
    np.testing.assert_allclose(frozen(state).dv_f, dsem_rhs(state, syn, spec).dv_f)

    clamped = make_rhs(syn, spec, clamped_v_f=state.v_f)
    np.testing.assert_array_equal(clamped(state).dv_f, np.zeros(spec.n_f))
    np.testing.assert_allclose(clamped(state).dv_d, (state.v_f - state.v_d) / spec.tau_d)


def test_cued_memory_drives_its_successor(lisem_setup, dsem_setup):
    for spec, syn, _ in (lisem_setup, dsem_setup):
        state = init_from_cue(syn.xi[:, 0], 0.0, 0, spec, syn)
        deriv = variant_rhs(state, syn, spec)
        projection = syn.xi.T @ deriv.dv_f
        assert int(np.argmax(projection)) == 1


def test_delay_reference_of_constant_history():
    history = np.tile(np.array([0.3, -0.7]), (501, 1))
    np.testing.assert_allclose(delay_convolution_reference(history, 100.0, 5.0), [0.3, -0.7], rtol=1e-8)


def test_delay_reference_of_long_constant_history():
    c = np.array([2.0, -0.5])
    history = np.tile(c, (3001, 1))
    np.testing.assert_allclose(delay_convolution_reference(history, 100.0, 3000.0), c, rtol=1e-4)


def test_delay_reference_of_step_history():
    c = np.array([2.0, -0.5])
    history = np.tile(c, (10001, 1))
    history[0] = 0.0
    np.testing.assert_allclose(delay_convolution_reference(history, 100.0, 100.0), (1.0 - np.exp(-1.0)) * c, rtol=1e-3)
    np.testing.assert_allclose(delay_convolution_reference(history, 100.0, 100.0), 0.63212 * c, rtol=1e-3)


def test_delay_reference_rejects_bad_input():
    with raises(InvalidArgumentError):
        delay_convolution_reference(np.zeros((0, 3)), 100.0, 1.0)
    with raises(InvalidArgumentError):
        delay_convolution_reference(np.zeros((3, 3)), 0.0, 1.0)


def test_integrated_delay_matches_filtered_feature_history(lisem_setup):
    spec, syn, _ = lisem_setup
    init = init_from_cue(syn.xi[:, 0], 0.0, 0, spec)
    traj = simulate(spec, syn, init, duration=50.0, dt=0.01, record_every=1)
    history = np.tanh(spec.gamma * traj.v_f)

    for i in (1000, 2500, 5000):
        reference = delay_convolution_reference(history[: i + 1], spec.tau_d, traj.times[i])
        np.testing.assert_allclose(traj.states[i].v_d, reference, atol=1e-3)


def test_delay_reference_time_zero_is_first_sample():
    history = np.array([[1.0, 2.0]])
    assert delay_convolution_reference(history, 10.0, 0.0) == approx([1.0, 2.0])


def test_network_state_rejects_mismatched_delay():
    with raises(InvalidArgumentError):
        NetworkState(v_f=np.zeros(3), v_h=np.zeros(2), v_d=np.zeros(4))


@mark.slow
def test_delay_matches_filtered_history_over_a_full_retrieval(lisem_setup):
    spec, syn, _ = lisem_setup
    init = init_from_cue(syn.xi[:, 0], 0.0, 0, spec)
    traj = simulate(spec, syn, init, duration=300.0, dt=0.01, record_every=1)
    history = np.tanh(spec.gamma * traj.v_f)

    for i in (2500, 10000, 14000, 20000, 27000, 30000):
        reference = delay_convolution_reference(history[: i + 1], spec.tau_d, traj.times[i])
        np.testing.assert_allclose(traj.states[i].v_d, reference, atol=1e-3)
