"""Shared fixtures-by-function for the test suite."""
import itertools

import numpy as np

from robustgf.graph import Graph, eigendecompose, laplacian
from robustgf.perturbation import PerturbationModel, PerturbedEdge, first_order_eigen


def path3() -> Graph:
    return Graph(3, ((1, 2), (2, 3)))


def triangle() -> Graph:
    return Graph(3, ((1, 2), (1, 3), (2, 3)))


def path_with_chord_model():
    """Path 1-2-3 with the chord (1,3) as an uncertain addition (p = 1)."""
    graph = path3()
    model = PerturbationModel(graph, (PerturbedEdge((1, 3), +1, 1.0),))
    eig = eigendecompose(laplacian(graph))
    return graph, eig, model


def random_model(graph: Graph, rng: np.random.Generator, num_edges: int,
                 probs="random") -> PerturbationModel:
    """Mixed removals/additions over a connected graph."""
    present = list(graph.edges)
    edge_set = set(graph.edges)
    absent = [(i, j) for i in range(1, graph.num_nodes + 1)
              for j in range(i + 1, graph.num_nodes + 1) if (i, j) not in edge_set]
    chosen = []
    used = set()
    while len(chosen) < num_edges:
        if absent and (not present or rng.random() < 0.5):
            pool, sigma = absent, +1
        else:
            pool, sigma = present, -1
        edge = pool[int(rng.integers(len(pool)))]
        if edge in used:
            continue
        used.add(edge)
        if probs == "random":
            p = float(rng.integers(1, 10)) / 10.0
        else:
            p = float(probs)
        chosen.append(PerturbedEdge(edge, sigma, p))
    return PerturbationModel(graph, tuple(chosen))


def well_separated_instance(seed: int = 12, num_edges: int = 3, prob: float = 0.5):
    """ER(10, 0.6) instance with a comfortable spectral gap; used wherever the
    first-order corrections need to stay small."""
    from robustgf.graph import generate_er

    graph = generate_er(10, 0.6, seed=seed)
    eig = eigendecompose(laplacian(graph))
    present = list(graph.edges)
    absent = [(i, j) for i in range(1, 11) for j in range(i + 1, 11)
              if (i, j) not in set(graph.edges)]
    edges = (
        PerturbedEdge(present[0], -1, prob),
        PerturbedEdge(absent[0], +1, prob),
        PerturbedEdge(present[-1], -1, prob),
    )
    model = PerturbationModel(graph, edges[:num_edges])
    corr = first_order_eigen(eig, model)
    return graph, eig, model, corr


def brute_force_moments(weights, probs, max_order):
    """Independent oracle: exhaustive enumeration over all 2^M outcomes."""
    weights = np.asarray(weights, dtype=float)
    probs = np.asarray(probs, dtype=float)
    out = np.zeros(max_order + 1)
    for bits in itertools.product((0, 1), repeat=len(weights)):
        z = np.array(bits, dtype=float)
        weight = float(np.prod(np.where(z > 0, probs, 1.0 - probs)))
        s = float(np.dot(weights, z))
        out += weight * s ** np.arange(max_order + 1)
    return out
