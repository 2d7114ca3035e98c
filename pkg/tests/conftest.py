from pathlib import Path

import numpy as np
import pytest

from seqmem.ml.memories import preloaded_synapses
from seqmem.models.models import (
    Activation,
    ModelSpec,
    NetworkState,
    SynapseState,
    Variant,
    dsem_canonical,
    lisem_canonical,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
TWO_EPISODES = [[0, 1, 2], [3, 4, 5, 6]]


def hadamard(n: int) -> np.ndarray:
    """Sylvester Hadamard matrix of order n (a power of two); columns are orthogonal +/-1 vectors."""
    h = np.array([[1.0]])
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


def random_instance(variant: Variant, seed: int, n_f: int = 6, n_h: int = 3):
    """Small dense instance with generic real synapses, for gradient checks."""
    rng = np.random.default_rng(seed)
    spec = ModelSpec(
        variant=variant,
        n_f=n_f,
        n_h=n_h,
        alpha_s=0.5,
        alpha_c=0.7,
        gamma=1.3,
        tau_f=1.0,
        tau_h=0.5,
        tau_d=10.0,
        sigma_f=Activation.TANH,
        sigma_h=Activation.SOFTMAX,
    )
    syn = SynapseState(xi=rng.normal(size=(n_f, n_h)), phi=rng.normal(size=(n_h, n_h)))
    return spec, syn, rng


def random_state(rng: np.random.Generator, spec: ModelSpec) -> NetworkState:
    return NetworkState(
        v_f=rng.normal(size=spec.n_f),
        v_h=rng.normal(size=spec.n_h),
        v_d=rng.normal(size=spec.n_f),
    )


@pytest.fixture
def lisem_setup():
    spec = lisem_canonical()
    syn, graph = preloaded_synapses(spec, TWO_EPISODES, seed=0)
    return spec, syn, graph


@pytest.fixture
def dsem_setup():
    spec = dsem_canonical()
    syn, graph = preloaded_synapses(spec, TWO_EPISODES, seed=0)
    return spec, syn, graph


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR
