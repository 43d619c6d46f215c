"""Graph construction, incidence/Laplacian assembly, and eigendecomposition.

Undirected, unweighted, simple graphs with 1-based node labels. All matrix
routines return dense float64 arrays; the target problem sizes (a few hundred
nodes) never warrant sparse machinery.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationFailed

Edge = tuple[int, int]


@dataclass(frozen=True)
class Graph:
    """Undirected unweighted graph on nodes 1..num_nodes.

    Edges are (i, j) pairs with i < j, lexicographically sorted and
    duplicate-free. Connectivity is computed once at construction since
    several downstream routines use it as a precondition.
    """

    num_nodes: int
    edges: tuple[Edge, ...]
    is_connected: bool = field(init=False)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError(f"num_nodes must be positive, got {self.num_nodes}")
        prev = None
        for (i, j) in self.edges:
            if not (1 <= i < j <= self.num_nodes):
                raise ValueError(f"edge ({i},{j}) out of range or not i<j for N={self.num_nodes}")
            if prev is not None and (i, j) <= prev:
                raise ValueError(f"edges not sorted/duplicate-free at ({i},{j})")
            prev = (i, j)
        object.__setattr__(self, "is_connected", _connected(self.num_nodes, self.edges))

    @classmethod
    def from_edges(cls, num_nodes: int, edges) -> "Graph":
        """Build a Graph from an arbitrary edge iterable, normalizing order."""
        canon = set()
        for (i, j) in edges:
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) not allowed")
            canon.add((min(i, j), max(i, j)))
        return cls(num_nodes, tuple(sorted(canon)))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=int)
        for (i, j) in self.edges:
            deg[i - 1] += 1
            deg[j - 1] += 1
        return deg

    def has_edge(self, i: int, j: int) -> bool:
        a, b = min(i, j), max(i, j)
        return (a, b) in set(self.edges)


def _connected(n: int, edges) -> bool:
    if n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for (i, j) in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * (n + 1)
    stack = [1]
    seen[1] = True
    count = 1
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(w)
    return count == n


def edge_vector(num_nodes: int, edge: Edge) -> np.ndarray:
    """Signed indicator of one edge: +1 at the lower endpoint, -1 at the higher."""
    i, j = edge
    b = np.zeros(num_nodes)
    b[min(i, j) - 1] = 1.0
    b[max(i, j) - 1] = -1.0
    return b


def build_incidence(graph: Graph) -> np.ndarray:
    """Oriented incidence matrix, one column per edge.

    Orientation is fixed lexicographically (+1 at the lower node index), so
    repeated builds are deterministic; the Laplacian is orientation-invariant.
    """
    inc = np.zeros((graph.num_nodes, graph.num_edges))
    for m, (i, j) in enumerate(graph.edges):
        inc[i - 1, m] = 1.0
        inc[j - 1, m] = -1.0
    return inc


def build_laplacian(incidence: np.ndarray) -> np.ndarray:
    """Graph Laplacian as the Gram matrix of the incidence columns."""
    return incidence @ incidence.T


def laplacian(graph: Graph) -> np.ndarray:
    return build_laplacian(build_incidence(graph))


@dataclass(frozen=True)
class EigenSystem:
    """Ordered eigendecomposition of a symmetric Laplacian.

    eigenvalues ascending; eigenvector signs fixed so each column's
    largest-magnitude entry (first such index on ties) is positive.
    spectral_gap_min is the smallest |lambda_i - lambda_j| over i != j;
    zero signals an exactly repeated eigenvalue.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    spectral_gap_min: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    fixed = vectors.copy()
    for col in range(fixed.shape[1]):
        idx = int(np.argmax(np.abs(fixed[:, col])))
        if fixed[idx, col] < 0:
            fixed[:, col] = -fixed[:, col]
    return fixed


def eigendecompose(lap: np.ndarray) -> EigenSystem:
    """Full symmetric eigendecomposition with a deterministic sign convention."""
    lam, vec = np.linalg.eigh(lap)
    vec = _fix_signs(vec)
    if len(lam) > 1:
        gap = float(np.min(np.diff(lam)))
    else:
        gap = float("inf")
    return EigenSystem(eigenvalues=lam, eigenvectors=vec, spectral_gap_min=gap)


def _sample_pair_edges(rng: np.random.Generator, pairs: list[Edge], probs: np.ndarray) -> tuple[Edge, ...]:
    keep = rng.random(len(pairs)) < probs
    return tuple(p for p, k in zip(pairs, keep) if k)


def generate_sbm(n_per_cluster: int, p_intra: float, p_inter: float, seed: int,
                 max_retries: int = 100) -> Graph:
    """Two-cluster stochastic block model, retried with incremented seeds until connected."""
    if not (0.0 <= p_intra <= 1.0 and 0.0 <= p_inter <= 1.0):
        raise ValueError("probabilities must be in [0, 1]")
    if n_per_cluster < 1:
        raise ValueError("n_per_cluster must be positive")
    n = 2 * n_per_cluster
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    same = np.array([(i <= n_per_cluster) == (j <= n_per_cluster) for (i, j) in pairs])
    probs = np.where(same, p_intra, p_inter)
    for attempt in range(max_retries):
        rng = np.random.default_rng(seed + attempt)
        g = Graph(n, _sample_pair_edges(rng, pairs, probs))
        if g.is_connected:
            return g
    raise GenerationFailed(
        f"no connected SBM({n_per_cluster}, {p_intra}, {p_inter}) in {max_retries} attempts from seed {seed}")


def generate_er(n: int, p: float, seed: int, max_retries: int = 100) -> Graph:
    """Erdos-Renyi graph with per-pair probability p, retried until connected."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    probs = np.full(len(pairs), p)
    for attempt in range(max_retries):
        rng = np.random.default_rng(seed + attempt)
        g = Graph(n, _sample_pair_edges(rng, pairs, probs))
        if g.is_connected:
            return g
    raise GenerationFailed(f"no connected ER({n}, {p}) in {max_retries} attempts from seed {seed}")


# --- serialization ---------------------------------------------------------

def graph_to_json(graph: Graph) -> str:
    return json.dumps({"n": graph.num_nodes, "edges": [list(e) for e in graph.edges]})


def graph_from_json(text: str) -> Graph:
    data = json.loads(text)
    return Graph.from_edges(int(data["n"]), [(int(i), int(j)) for i, j in data["edges"]])


def graph_to_edgelist(graph: Graph) -> str:
    return "\n".join(f"{i} {j}" for (i, j) in graph.edges) + "\n"


def graph_from_edgelist(text: str, num_nodes: int | None = None) -> Graph:
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        i, j = line.split()
        edges.append((int(i), int(j)))
    if num_nodes is None:
        num_nodes = max(max(e) for e in edges) if edges else 1
    return Graph.from_edges(num_nodes, edges)


def load_graph(path: str) -> Graph:
    """Load a graph from a .json file or an edge-list text file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return graph_from_json(text)
    return graph_from_edgelist(text)
