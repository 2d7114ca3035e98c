"""
Memory generation and episode structure.

Memories are random +/-1 patterns stored as the columns of Xi. Episodes are
cycles over memory indices; their successor relation is turned into the
hidden-hidden delay matrix Phi = G / sqrt(alpha_s).
"""

import logging
from collections.abc import Sequence

import numpy as np

from ..exceptions import InvalidArgumentError
from ..models.models import EpisodeGraph, ModelSpec, SynapseState

logger = logging.getLogger(__name__)


def generate_memories(n_f: int, n_memories: int, seed: int) -> np.ndarray:
    """
    Draw fair-coin binary memories.

    Args:
        n_f: pattern length (number of feature neurons)
        n_memories: number of patterns
        seed: seed of the generator; fully determines the output

    Returns:
        np.ndarray: n_f x n_memories matrix with entries in {+1, -1}

    Raises:
        InvalidArgumentError: if either dimension is smaller than 1
    """
    if n_f < 1 or n_memories < 1:
        raise InvalidArgumentError(
            f"memory dimensions must be positive, got n_f={n_f}, n_memories={n_memories}"
        )
    rng = np.random.default_rng(seed)
    return rng.choice(np.array([-1.0, 1.0]), size=(n_f, n_memories))


def build_episode_graph(cycles: Sequence[Sequence[int]], n_nodes: int | None = None) -> EpisodeGraph:
    """
    Build the successor graph of one or more cyclic episodes.

    Each cycle [a, b, ..., z] contributes the edges (a, b), (b, c), ..., (z, a).
    Indices must be distinct within a cycle and cycles must be disjoint. A
    single-element cycle would be a self-loop and is rejected.

    Args:
        cycles: list of index lists
        n_nodes: number of graph nodes; defaults to the largest index + 1

    Returns:
        EpisodeGraph
    """
    seen: set[int] = set()
    edges: set[tuple[int, int]] = set()
    normalized: list[tuple[int, ...]] = []

    for cycle in cycles:
        members = [int(i) for i in cycle]
        if not members:
            continue
        if any(i < 0 for i in members):
            raise InvalidArgumentError(f"negative memory index in cycle {members}")
        if len(set(members)) != len(members):
            raise InvalidArgumentError(f"repeated index within cycle {members}")
        shared = seen.intersection(members)
        if shared:
            raise InvalidArgumentError(f"indices {sorted(shared)} appear in more than one cycle")
        if len(members) == 1:
            raise InvalidArgumentError(f"cycle {members} would be a self-loop")
        seen.update(members)
        normalized.append(tuple(members))
        edges.update(zip(members, members[1:] + members[:1]))

    size = (max(seen) + 1 if seen else 0) if n_nodes is None else int(n_nodes)
    if seen and max(seen) >= size:
        raise InvalidArgumentError(f"index {max(seen)} out of range for {size} nodes")

    return EpisodeGraph(n_nodes=size, edges=frozenset(edges), cycles=tuple(normalized))


def build_phi(graph: EpisodeGraph, alpha_s: float) -> np.ndarray:
    """Phi = G / sqrt(alpha_s); phi[k, j] is the strength from hidden k to hidden j."""
    if alpha_s <= 0:
        raise InvalidArgumentError(f"alpha_s must be positive, got {alpha_s}")
    return graph.adjacency() / np.sqrt(alpha_s)


def preloaded_synapses(
    spec: ModelSpec,
    cycles: Sequence[Sequence[int]],
    seed: int,
    memories: np.ndarray | None = None,
) -> tuple[SynapseState, EpisodeGraph]:
    """Store n_h random memories in Xi and the episode cycles in Phi."""
    if memories is None:
        memories = generate_memories(spec.n_f, spec.n_h, seed)
    graph = build_episode_graph(cycles, n_nodes=spec.n_h)
    syn = SynapseState(xi=memories, phi=build_phi(graph, spec.alpha_s))
    syn.check(spec)
    logger.debug("preloaded %d memories, %d episode edges", spec.n_h, len(graph.edges))
    return syn, graph


def parse_cycles(text: str) -> list[list[int]]:
    """Parse '0 1 2 | 3 4 5 6' (commas also accepted) into index lists."""
    cycles: list[list[int]] = []
    for chunk in text.split("|"):
        tokens = chunk.replace(",", " ").split()
        if not tokens:
            continue
        try:
            cycles.append([int(t) for t in tokens])
        except ValueError as e:
            raise InvalidArgumentError(f"cannot parse cycle '{chunk.strip()}': {e}") from e
    return cycles
