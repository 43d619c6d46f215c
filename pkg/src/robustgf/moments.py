"""Exact moments of weighted sums of independent Bernoulli variables.

This is the expectation engine behind every closed-form design: eigenvalue
shifts under random edge perturbations are weighted Bernoulli sums, and the
expected Vandermonde Gram matrix needs their raw moments up to twice the
filter order.

A Bernoulli variable is idempotent, E[Z^j] = p for every j >= 1, and distinct
variables factorize, E[Z_m Z_n] = p_m p_n. The `idempotent=False` switch
replaces E[Z^j] = p with p^j for comparison studies; it is wrong for 0/1
variables and exists only to quantify the error it introduces.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .graph import EigenSystem
from .perturbation import FirstOrderCorrections


@dataclass(frozen=True)
class WeightedBernoulliSum:
    """S = sum_m weights[m] * Z_m with independent Z_m ~ Bernoulli(probs[m])."""

    weights: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if w.shape != p.shape or w.ndim != 1:
            raise ValueError(f"weights and probs must be 1-D with equal length, got {w.shape} vs {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("probs must lie in [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "probs", p)


def moments(s: WeightedBernoulliSum, max_order: int, idempotent: bool = True) -> np.ndarray:
    """Raw moments [E[S^0], ..., E[S^J]] by a binomial recurrence over the terms.

    Adding one term at a time, E[(S + wZ)^j] = sum_r C(j,r) E[S^(j-r)] w^r E[Z^r],
    which is exact under independence and costs O(M J^2).
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    out = np.zeros(max_order + 1)
    out[0] = 1.0
    binom = np.array([[comb(j, r) for r in range(max_order + 1)] for j in range(max_order + 1)], dtype=float)
    for w, p in zip(s.weights, s.probs):
        wpow = w ** np.arange(max_order + 1)
        if idempotent:
            zmom = np.full(max_order + 1, p)
        else:
            zmom = p ** np.arange(max_order + 1)
        zmom[0] = 1.0
        prev = out.copy()
        for j in range(1, max_order + 1):
            out[j] = np.sum(binom[j, : j + 1] * prev[j::-1] * wpow[: j + 1] * zmom[: j + 1])
    return out


def mixed_expectation(a: WeightedBernoulliSum, b: WeightedBernoulliSum,
                      shared_probs: bool = True) -> float:
    """E[A * B] for two weighted Bernoulli sums.

    With shared_probs the sums range over the same variables: shared indices
    contribute a_m b_m p_m (idempotence), distinct ones factorize into
    a_m b_n p_m p_n. Without it the two sums are over independent variable
    sets and the expectation is just the product of means.
    """
    if not shared_probs:
        return float(np.sum(a.weights * a.probs)) * float(np.sum(b.weights * b.probs))
    if a.weights.shape != b.weights.shape:
        raise ValueError("sums must share the same edge index set")
    if not np.array_equal(a.probs, b.probs):
        raise ValueError("sums must share the same probabilities")
    p = a.probs
    ea = float(np.sum(a.weights * p))
    eb = float(np.sum(b.weights * p))
    diag = float(np.sum(a.weights * b.weights * (p - p * p)))
    return ea * eb + diag


def expected_power_sums(eig: EigenSystem, corrections: FirstOrderCorrections,
                        max_power: int, idempotent: bool = True
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Expected powers of the first-order perturbed eigenvalues.

    Returns (per_index, totals): per_index[i, k] = E[lambda_tilde_i^k] and
    totals[k] = sum_i per_index[i, k], via the binomial expansion of
    (lambda_i + shift_i)^k with exact Bernoulli moments of the shift.
    """
    lam = eig.eigenvalues
    n = len(lam)
    per_index = np.zeros((n, max_power + 1))
    binom = np.array([[comb(k, j) for j in range(max_power + 1)] for k in range(max_power + 1)], dtype=float)
    for i in range(n):
        shift = WeightedBernoulliSum(corrections.sigma * corrections.q[i, :], corrections.probs)
        smom = moments(shift, max_power, idempotent=idempotent)
        lpow = np.empty(max_power + 1)
        lpow[0] = 1.0
        for k in range(1, max_power + 1):
            lpow[k] = lpow[k - 1] * lam[i]
        for k in range(max_power + 1):
            per_index[i, k] = np.sum(binom[k, : k + 1] * lpow[k::-1] * smom[: k + 1])
    return per_index, per_index.sum(axis=0)
