"""Random edge perturbations and first-order corrections of the Laplacian eigenpairs.

Each uncertain edge m carries a sign (+1 added, -1 removed) and an independent
Bernoulli activation probability p_m. The first-order corrections of the
eigenvalues and eigenvectors are linear in the per-edge rank-one updates, so we
precompute one correction block per edge and let downstream designers weight
them by activation probabilities or by concrete realizations.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import CapExceeded, DegenerateSpectrum
from .graph import Edge, EigenSystem, Graph, edge_vector

ENUMERATION_CAP = 20
GAP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class PerturbedEdge:
    edge: Edge
    sigma: int  # +1 add, -1 remove
    prob: float

    def __post_init__(self):
        if self.sigma not in (-1, 1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"prob must be in [0, 1], got {self.prob}")
        i, j = self.edge
        if not i < j:
            raise ValueError(f"edge must be (i, j) with i < j, got {self.edge}")


@dataclass(frozen=True)
class PerturbationModel:
    """The uncertain edge set attached to a nominal graph.

    Removals must reference existing edges, additions must not; no edge may
    appear twice.
    """

    graph: Graph
    perturbed_edges: tuple[PerturbedEdge, ...]

    def __post_init__(self):
        nominal = set(self.graph.edges)
        seen = set()
        for pe in self.perturbed_edges:
            i, j = pe.edge
            if not (1 <= i < j <= self.graph.num_nodes):
                raise ValueError(f"perturbed edge {pe.edge} out of range")
            if pe.edge in seen:
                raise ValueError(f"edge {pe.edge} appears twice in the perturbation set")
            seen.add(pe.edge)
            if pe.sigma == -1 and pe.edge not in nominal:
                raise ValueError(f"cannot remove absent edge {pe.edge}")
            if pe.sigma == 1 and pe.edge in nominal:
                raise ValueError(f"cannot add existing edge {pe.edge}")

    @property
    def num_edges(self) -> int:
        return len(self.perturbed_edges)

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([pe.sigma for pe in self.perturbed_edges], dtype=float)

    @property
    def probs(self) -> np.ndarray:
        return np.array([pe.prob for pe in self.perturbed_edges], dtype=float)

    def edge_vectors(self) -> np.ndarray:
        """N x M matrix of signed edge indicators, one column per uncertain edge."""
        n, m = self.graph.num_nodes, self.num_edges
        out = np.zeros((n, m))
        for k, pe in enumerate(self.perturbed_edges):
            out[:, k] = edge_vector(n, pe.edge)
        return out


def model_to_json(model: PerturbationModel) -> str:
    return json.dumps({"edges": [
        {"u": pe.edge[0], "v": pe.edge[1], "sigma": pe.sigma, "p": pe.prob}
        for pe in model.perturbed_edges]})


def model_from_json(graph: Graph, text: str) -> PerturbationModel:
    data = json.loads(text)
    edges = tuple(
        PerturbedEdge(edge=(min(int(e["u"]), int(e["v"])), max(int(e["u"]), int(e["v"]))),
                      sigma=int(e["sigma"]), prob=float(e["p"]))
        for e in data["edges"])
    return PerturbationModel(graph, edges)


@dataclass(frozen=True)
class Realization:
    """One binary outcome of the edge activation variables."""

    active: np.ndarray  # bool, length M

    def __post_init__(self):
        object.__setattr__(self, "active", np.asarray(self.active, dtype=bool))

    @property
    def num_active(self) -> int:
        return int(np.sum(self.active))


def full_realization(model: PerturbationModel) -> Realization:
    return Realization(np.ones(model.num_edges, dtype=bool))


def empty_realization(model: PerturbationModel) -> Realization:
    return Realization(np.zeros(model.num_edges, dtype=bool))


def delta_laplacian(model: PerturbationModel, real: Realization) -> np.ndarray:
    """Laplacian update sum of signed rank-one edge terms over the active edges."""
    n = model.graph.num_nodes
    out = np.zeros((n, n))
    for k, pe in enumerate(model.perturbed_edges):
        if real.active[k]:
            b = edge_vector(n, pe.edge)
            out += pe.sigma * np.outer(b, b)
    return out


@dataclass(frozen=True)
class FirstOrderCorrections:
    """Per-edge first-order eigenpair corrections for a perturbation model.

    q[i, m]          squared eigenvector variation across edge m,
                     (u_i(s) - u_i(t))^2; the eigenvalue shift of mode i when
                     edge m alone toggles is sigma_m * q[i, m].
    delta_u[m]       N x N matrix whose column i is the eigenvector correction
                     direction for mode i under edge m (before the sigma sign).
    delta_lambda     eigenvalue shifts with every edge active.
    sigma, probs     copied from the model so downstream expectation code
                     needs only this object.
    """

    q: np.ndarray          # (N, M)
    delta_u: np.ndarray    # (M, N, N)
    delta_lambda: np.ndarray  # (N,)
    sigma: np.ndarray      # (M,)
    probs: np.ndarray      # (M,)

    @property
    def num_modes(self) -> int:
        return self.q.shape[0]

    @property
    def num_edges(self) -> int:
        return self.q.shape[1]


def first_order_eigen(eig: EigenSystem, model: PerturbationModel,
                      gap_tolerance: float = GAP_TOLERANCE) -> FirstOrderCorrections:
    """Precompute the per-edge correction blocks for all eigenpairs.

    Requires a simple spectrum: the eigenvector corrections divide by
    eigenvalue differences, so a gap below `gap_tolerance` raises
    DegenerateSpectrum instead of returning exploded values.
    """
    lam, u = eig.eigenvalues, eig.eigenvectors
    n = len(lam)
    if n > 1 and eig.spectral_gap_min < gap_tolerance:
        raise DegenerateSpectrum(
            f"minimum eigenvalue gap {eig.spectral_gap_min:.3e} below tolerance {gap_tolerance:.1e}")
    m = model.num_edges
    bmat = model.edge_vectors()          # (N, M)
    c = u.T @ bmat                        # c[j, m] = u_j . b_m
    q = c * c                             # (N, M)

    # inv_gap[j, i] = 1 / (lambda_i - lambda_j), zero on the diagonal
    diff = lam[None, :] - lam[:, None]
    with np.errstate(divide="ignore"):
        inv_gap = np.where(np.eye(n, dtype=bool), 0.0, 1.0 / diff)

    # coef[j, i, m] = c_{j,m} c_{i,m} / (lambda_i - lambda_j);
    # delta_u[m][:, i] = sum_j coef[j, i, m] u_j
    coef = inv_gap[:, :, None] * c[:, None, :] * c[None, :, :]
    delta_u = np.einsum("nj,jim->mni", u, coef)  # (M, N, N)

    sigma = model.sigmas
    delta_lambda = q @ sigma
    return FirstOrderCorrections(q=q, delta_u=delta_u, delta_lambda=delta_lambda,
                                 sigma=sigma, probs=model.probs)


class ApproxEigs(NamedTuple):
    lambda_tilde: np.ndarray
    u_tilde: np.ndarray
    has_negative: bool  # approximation may undershoot the exact PSD spectrum


def approx_perturbed_eigs(eig: EigenSystem, corrections: FirstOrderCorrections,
                          real: Realization) -> ApproxEigs:
    """First-order perturbed eigenpairs for one realization.

    The perturbed basis is the raw first-order update and is only
    approximately orthonormal; no re-orthonormalization is applied. Negative
    approximate eigenvalues are flagged, not clamped; the flag tolerance is
    scaled to the spectrum so rounding noise at the zero mode does not fire it.
    """
    z = real.active.astype(float)
    w = corrections.sigma * z
    lam_t = eig.eigenvalues + corrections.q @ w
    u_t = eig.eigenvectors + np.einsum("m,mni->ni", w, corrections.delta_u)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(eig.eigenvalues))))
    return ApproxEigs(lam_t, u_t, bool(np.any(lam_t < -tol)))


def sample_pattern(probs: np.ndarray, rng_seed) -> Realization:
    """Independent Bernoulli draw of the activation pattern."""
    rng = np.random.default_rng(rng_seed)
    return Realization(rng.random(len(probs)) < probs)


def sample_realization(model: PerturbationModel, rng_seed) -> Realization:
    return sample_pattern(model.probs, rng_seed)


def enumerate_patterns(probs: np.ndarray,
                       cap: int = ENUMERATION_CAP) -> Iterator[tuple[Realization, float]]:
    """All 2^M activation patterns with their product-Bernoulli probabilities."""
    m = len(probs)
    if m > cap:
        raise CapExceeded(f"{m} uncertain edges exceed enumeration cap {cap}")
    for bits in itertools.product((False, True), repeat=m):
        active = np.array(bits, dtype=bool)
        weight = float(np.prod(np.where(active, probs, 1.0 - probs)))
        yield Realization(active), weight


def enumerate_realizations(model: PerturbationModel,
                           cap: int = ENUMERATION_CAP) -> Iterator[tuple[Realization, float]]:
    return enumerate_patterns(model.probs, cap)
