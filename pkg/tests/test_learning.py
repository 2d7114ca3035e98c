import numpy as np
from pytest import approx, mark, raises

from seqmem.exceptions import InvalidArgumentError, TrainingError
from seqmem.ml.energy import energy_dsem
from seqmem.ml.learning import (
    OnlineEnergyLearner,
    Signals,
    consolidation_report,
    current_signals,
    phi_update,
    target_signals,
    train_online,
    xi_update,
)
from seqmem.ml.memories import generate_memories
from seqmem.models.models import (
    LearningConfig,
    ModelSpec,
    NetworkState,
    SynapseState,
    Variant,
    learning_canonical,
    lisem_canonical,
)

FD_STEP = 1e-6


def _small_problem(seed: int, n_f: int = 5, n_h: int = 3, beta_c: float = 0.621):
    rng = np.random.default_rng(seed)
    spec = ModelSpec(variant=Variant.DSEM, n_f=n_f, n_h=n_h, alpha_s=0.8, alpha_c=0.9, gamma=1.2)
    cfg = LearningConfig(tau_l_xi=3.0, tau_l_phi=7.0, beta_c=beta_c)
    syn = SynapseState(rng.normal(size=(n_f, n_h)), rng.normal(size=(n_h, n_h)))
    current = Signals(rng.normal(size=n_f), rng.normal(size=n_h))
    target = Signals(rng.normal(size=n_f), rng.normal(size=n_h))
    v_d = rng.normal(size=n_f)
    return spec, cfg, syn, current, target, v_d


def _matrix_gradient(fn, matrix: np.ndarray) -> np.ndarray:
    grad = np.zeros_like(matrix)
    for idx in np.ndindex(matrix.shape):
        up, down = matrix.copy(), matrix.copy()
        up[idx] += FD_STEP
        down[idx] -= FD_STEP
        grad[idx] = (fn(up) - fn(down)) / (2 * FD_STEP)
    return grad


@mark.parametrize("seed", range(50))
def test_updates_follow_the_energy_gradient(seed):
    spec, cfg, syn, current, target, v_d = _small_problem(seed)

    def energy(sig: Signals, xi: np.ndarray, phi: np.ndarray) -> float:
        return energy_dsem(NetworkState(sig.v_f, sig.v_h, v_d), SynapseState(xi, phi), spec)

    def objective_xi(xi):
        return -energy(target, xi, syn.phi) + cfg.beta_c * energy(current, xi, syn.phi)

    def objective_phi(phi):
        return -energy(target, syn.xi, phi) + cfg.beta_c * energy(current, syn.xi, phi)

    np.testing.assert_allclose(
        xi_update(current, target, v_d, syn, spec, cfg) * cfg.tau_l_xi,
        _matrix_gradient(objective_xi, syn.xi),
        rtol=1e-4, atol=1e-7,
    )
    np.testing.assert_allclose(
        phi_update(current, target, v_d, syn, spec, cfg) * cfg.tau_l_phi,
        _matrix_gradient(objective_phi, syn.phi),
        rtol=1e-4, atol=1e-7,
    )


def test_no_update_when_target_equals_current():
    spec, cfg, syn, current, _, v_d = _small_problem(0, beta_c=1.0)
    np.testing.assert_allclose(xi_update(current, current, v_d, syn, spec, cfg), 0.0, atol=1e-15)
    np.testing.assert_allclose(phi_update(current, current, v_d, syn, spec, cfg), 0.0, atol=1e-15)


def test_hebbian_update_without_delay_has_rank_two():
    spec, cfg, syn, current, target, v_d = _small_problem(1, n_f=8, n_h=5, beta_c=1.0)
    spec = spec.with_updates(alpha_c=0.0)
    d_xi = xi_update(current, target, v_d, syn, spec, cfg)
    assert np.linalg.matrix_rank(d_xi) <= 2
    np.testing.assert_array_equal(phi_update(current, target, v_d, syn, spec, cfg), 0.0)


def test_update_rejects_mismatched_signals():
    spec, cfg, syn, current, target, v_d = _small_problem(2)
    with raises(InvalidArgumentError):
        xi_update(Signals(np.zeros(4), current.v_h), target, v_d, syn, spec, cfg)
    with raises(InvalidArgumentError):
        phi_update(current, target, np.zeros(9), syn, spec, cfg)


def test_target_signals_without_delay_are_the_feature_projection():
    spec = ModelSpec(variant=Variant.DSEM, n_f=3, n_h=3, alpha_s=4.0, alpha_c=0.0)
    syn = SynapseState(np.eye(3), np.ones((3, 3)))
    state = NetworkState(np.array([1.0, -1.0, 1.0]), np.zeros(3), np.zeros(3))
    target = target_signals(np.array([1.0, 2.0, 3.0]), state, syn, spec)
    np.testing.assert_allclose(target.v_h, [2.0, 4.0, 6.0])
    current = current_signals(state, syn, spec)
    np.testing.assert_allclose(current.v_h, [2.0, -2.0, 2.0])


def test_learner_requires_dsem():
    with raises(InvalidArgumentError):
        OnlineEnergyLearner(lisem_canonical(), LearningConfig())


def test_zero_epochs_returns_the_initialization():
    spec = ModelSpec(variant=Variant.DSEM, n_f=10, n_h=4, alpha_s=1.0, alpha_c=0.991)
    cfg = LearningConfig(epochs=0, init_range=0.5)
    syn, snapshots = train_online(generate_memories(10, 3, 0), spec, cfg, seed=9)

    rng = np.random.default_rng(9)
    np.testing.assert_array_equal(syn.xi, rng.uniform(-0.5, 0.5, size=(10, 4)))
    np.testing.assert_array_equal(syn.phi, rng.uniform(-0.5, 0.5, size=(4, 4)))
    assert len(snapshots) == 1
    assert snapshots[0].epoch == 0
    assert np.isnan(snapshots[0].energy_gap)


def test_short_training_run_is_deterministic():
    spec = ModelSpec(variant=Variant.DSEM, n_f=20, n_h=6, alpha_s=1.0, alpha_c=0.991)
    cfg = LearningConfig(steps_per_memory=50, epochs=3, trace_every=10, tau_l_xi=100.0, tau_l_phi=1000.0)
    episode = generate_memories(20, 3, seed=4)

    syn, snapshots = train_online(episode, spec, cfg, seed=1)
    again, _ = train_online(episode, spec, cfg, seed=1)

    np.testing.assert_array_equal(syn.xi, again.xi)
    np.testing.assert_array_equal(syn.phi, again.phi)
    assert [s.epoch for s in snapshots] == [0, 1, 2, 3]
    assert all(len(s.energy_trace) == 3 * 50 // 10 for s in snapshots[1:])
    assert all(np.isfinite(s.energy_gap) for s in snapshots[1:])
    assert not np.allclose(snapshots[0].xi, snapshots[-1].xi)


def test_each_presentation_step_moves_synapses_by_rate_over_timescale():
    spec = ModelSpec(variant=Variant.DSEM, n_f=6, n_h=3, alpha_s=1.0, alpha_c=0.8)
    cfg = LearningConfig(steps_per_memory=1, epochs=1, dt=0.5, tau_l_xi=50.0, tau_l_phi=200.0)
    memories = generate_memories(6, 2, seed=5)
    learner = OnlineEnergyLearner(spec, cfg, seed=2)
    before = learner.syn.copy()

    learner._presentation(memories[:, 0], memories[:, 1], [])

    state = NetworkState(v_f=memories[:, 0], v_h=np.zeros(3), v_d=learner.v_d)
    current = current_signals(state, before, spec)
    target = target_signals(memories[:, 1], state, before, spec)
    np.testing.assert_allclose(learner.syn.xi, before.xi + xi_update(current, target, state.v_d, before, spec, cfg))
    np.testing.assert_allclose(learner.syn.phi, before.phi + phi_update(current, target, state.v_d, before, spec, cfg))


def test_learner_accepts_a_list_of_memories():
    spec = ModelSpec(variant=Variant.DSEM, n_f=6, n_h=2, alpha_s=1.0, alpha_c=0.5)
    cfg = LearningConfig(steps_per_memory=5, epochs=1, trace_every=5)
    memories = generate_memories(6, 2, seed=0)
    from_matrix, _ = train_online(memories, spec, cfg, seed=3)
    from_list, _ = train_online([memories[:, 0], memories[:, 1]], spec, cfg, seed=3)
    np.testing.assert_array_equal(from_matrix.xi, from_list.xi)


def test_learner_rejects_empty_episode():
    spec = ModelSpec(variant=Variant.DSEM, n_f=6, n_h=2)
    with raises(InvalidArgumentError):
        train_online([], spec, LearningConfig(epochs=1), seed=0)


def test_runaway_learning_raises_training_error():
    spec = ModelSpec(variant=Variant.DSEM, n_f=10, n_h=3, alpha_s=1.0, alpha_c=1.0)
    cfg = LearningConfig(tau_l_xi=1e-12, tau_l_phi=1e-12, steps_per_memory=500, epochs=2)
    with np.errstate(all="ignore"), raises(TrainingError) as err:
        train_online(generate_memories(10, 2, 0), spec, cfg, seed=0)
    assert err.value.epoch == 1


def test_learning_canonical_settings():
    spec, cfg = learning_canonical()
    assert spec.variant is Variant.DSEM
    assert (spec.n_f, spec.n_h) == (100, 20)
    assert spec.alpha_c == approx(0.991)
    assert cfg.tau_l_xi == approx(6.2e5)
    assert cfg.tau_l_phi == approx(6.2e7)
    assert cfg.beta_c == approx(0.621)
    assert cfg.steps_per_memory == 4500


def test_consolidation_report_on_constructed_synapses():
    memories = generate_memories(30, 3, seed=2)
    # memory i sits in column (i + 2) % 5 of a 5-column Xi
    columns = [2, 3, 4]
    xi = np.random.default_rng(0).normal(scale=0.1, size=(30, 5))
    for i, j in enumerate(columns):
        xi[:, j] = 3.0 * memories[:, i]
    phi = np.zeros((5, 5))
    for i in range(3):
        phi[columns[i], columns[(i + 1) % 3]] = 1.0

    report = consolidation_report(SynapseState(xi, phi), memories)
    assert report.columns == columns
    assert all(report.aligned)
    assert report.consolidated
    assert report.successor_map == [1, 2, 0]
    assert report.recovers_cycle


def test_consolidation_report_flags_unaligned_memories():
    memories = generate_memories(30, 2, seed=5)
    xi = np.random.default_rng(1).normal(size=(30, 2))
    report = consolidation_report(SynapseState(xi, np.zeros((2, 2))), memories, threshold=0.95)
    assert not report.consolidated


def test_consolidation_report_rejects_wrong_shape():
    with raises(InvalidArgumentError):
        consolidation_report(SynapseState(np.zeros((4, 2)), np.zeros((2, 2))), np.ones((5, 2)))
