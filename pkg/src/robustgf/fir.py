"""Polynomial FIR graph filters and their perturbation-robust redesign.

A FIR filter of order L is a polynomial in the Laplacian, hence diagonal in
the eigenbasis with response values given by a Vandermonde matrix of the
eigenvalues. The robust design solves the expected normal equations: the Gram
matrix collects expected power sums of the perturbed eigenvalues (exact
Bernoulli moments), while the right-hand side couples the perturbed basis to
the nominal filter and is computed either by exact enumeration over activation
patterns or by a factorized approximation that treats the eigenvalue and
eigenvector perturbations as independent.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import RobustGFError, SingularSystem
from .estimators import Enumeration, MonteCarlo, normalize_estimator
from .graph import EigenSystem
from .moments import expected_power_sums
from .perturbation import (
    ENUMERATION_CAP,
    FirstOrderCorrections,
    Realization,
    approx_perturbed_eigs,
    enumerate_patterns,
    sample_pattern,
)
from .spectral import optimal_robust_mask

MAX_DESIGN_ORDER = 12


@dataclass(frozen=True)
class VandermondeSystem:
    """Normal equations of the robust FIR fit: expected Gram, expected
    right-hand side, and a condition estimate of the Gram."""

    gram: np.ndarray
    rhs: np.ndarray
    condition_estimate: float


@dataclass(frozen=True)
class FirDesign:
    taps: np.ndarray
    system: VandermondeSystem
    ridge_used: float


def vandermonde(eigenvalues: np.ndarray, order: int) -> np.ndarray:
    """Columns 1, lambda, ..., lambda^order."""
    return np.vander(np.asarray(eigenvalues, dtype=float), order + 1, increasing=True)


def apply_fir(lap: np.ndarray, taps: np.ndarray, signal: np.ndarray) -> np.ndarray:
    """Filter a node signal by Horner evaluation of the Laplacian polynomial."""
    taps = np.asarray(taps, dtype=float)
    out = taps[-1] * signal
    for h in taps[-2::-1]:
        out = lap @ out + h * signal
    return out


def fir_filter_matrix(eig: EigenSystem, taps: np.ndarray) -> np.ndarray:
    """Dense matrix of the Laplacian polynomial, assembled in the eigenbasis."""
    response = vandermonde(eig.eigenvalues, len(taps) - 1) @ np.asarray(taps, dtype=float)
    return (eig.eigenvectors * response) @ eig.eigenvectors.T


def fit_taps_to_mask(eigenvalues: np.ndarray, mask: np.ndarray, order: int) -> np.ndarray:
    """Least-squares taps reproducing the mask values on the given spectrum."""
    phi = vandermonde(eigenvalues, order)
    taps, *_ = np.linalg.lstsq(phi, mask, rcond=None)
    return taps


def expected_gram(eig: EigenSystem, corrections: FirstOrderCorrections,
                  order: int, idempotent: bool = True) -> np.ndarray:
    """Expected Gram of the perturbed Vandermonde matrix.

    Entry (a, b) is the expected power sum of the perturbed eigenvalues at
    exponent a + b; the top-left entry is always the number of nodes.
    """
    _, totals = expected_power_sums(eig, corrections, 2 * order, idempotent=idempotent)
    gram = np.empty((order + 1, order + 1))
    for a in range(order + 1):
        for b in range(order + 1):
            gram[a, b] = totals[a + b]
    return gram


def expected_rhs(eig: EigenSystem, corrections: FirstOrderCorrections,
                 nominal_taps: np.ndarray, order: int, mode: str = "auto",
                 cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Expected projection of the perturbed-basis target onto the power basis.

    mode 'enumeration' is the reference semantics: the exact expectation of
    Phi^T m over activation patterns, with m the diagonal of the nominal
    filter seen in the perturbed basis. mode 'paper_factorized' splits each
    entry into E[power sum] * E[diagonal], ignoring that both factors depend
    on the same activations; it is exact for degenerate (0/1) probabilities
    and cheap for large edge sets. 'auto' enumerates when possible; with all
    probabilities 0 or 1 the distribution is a point mass and a single
    pattern already gives the exact expectation.
    """
    probs = corrections.probs
    degenerate = bool(np.all((probs == 0.0) | (probs == 1.0)))
    if mode == "auto":
        if degenerate:
            mode = "point"
        else:
            mode = "enumeration" if corrections.num_edges <= cap else "paper_factorized"
    target = fir_filter_matrix(eig, nominal_taps)
    if mode == "point":
        if not degenerate:
            raise ValueError("point mode requires all probabilities in {0, 1}")
        return _pattern_rhs(eig, corrections, target, order, Realization(probs == 1.0))
    if mode == "enumeration":
        rhs = np.zeros(order + 1)
        for real, weight in enumerate_patterns(probs, cap=cap):
            rhs += weight * _pattern_rhs(eig, corrections, target, order, real)
        return rhs
    if mode == "paper_factorized":
        per_index, _ = expected_power_sums(eig, corrections, order)
        expected_diag = optimal_robust_mask(eig, corrections, target)
        return per_index.T @ expected_diag
    raise ValueError(f"unknown rhs mode {mode!r}")


def _pattern_rhs(eig, corrections, target, order, real) -> np.ndarray:
    approx = approx_perturbed_eigs(eig, corrections, real)
    phi = vandermonde(approx.lambda_tilde, order)
    m = np.einsum("ni,nk,ki->i", approx.u_tilde, target, approx.u_tilde)
    return phi.T @ m


def normal_equations(eig: EigenSystem, corrections: FirstOrderCorrections,
                     nominal_taps: np.ndarray, order: int,
                     rhs_mode: str = "auto") -> VandermondeSystem:
    gram = expected_gram(eig, corrections, order)
    rhs = expected_rhs(eig, corrections, nominal_taps, order, mode=rhs_mode)
    return VandermondeSystem(gram=gram, rhs=rhs, condition_estimate=float(np.linalg.cond(gram)))


def solve_normal_equations(gram: np.ndarray, rhs: np.ndarray,
                           ridge: float = 0.0) -> tuple[np.ndarray, float]:
    """Symmetric solve with a one-shot ridge escalation on effective singularity.

    Never forms an explicit inverse. Returns (solution, ridge actually used);
    raises SingularSystem when the escalated solve still fails.
    """
    n = gram.shape[0]
    ridge_used = ridge

    def attempt(r: float):
        system = gram if r == 0.0 else gram + r * np.eye(n)
        try:
            cho = scipy.linalg.cho_factor(system, check_finite=False)
            sol = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(sol)):
            return None
        return sol

    solution = attempt(ridge_used)
    if solution is None:
        fallback = 1e-10 * np.trace(gram) / n
        ridge_used = max(ridge, fallback)
        warnings.warn(
            f"normal equations effectively singular; escalating ridge to {ridge_used:.3e}",
            RuntimeWarning, stacklevel=2)
        solution = attempt(ridge_used)
        if solution is None:
            raise SingularSystem("normal equations singular even after ridge escalation")
    return solution, ridge_used


def design_robust_fir(eig: EigenSystem, corrections: FirstOrderCorrections,
                      nominal_taps: np.ndarray, order: int, ridge: float = 0.0,
                      rhs_mode: str = "auto", allow_high_order: bool = False) -> FirDesign:
    """Robust FIR taps minimizing the expected filter distance to the nominal one.

    Vandermonde Grams above order 12 are numerically singular in double
    precision, so higher orders are refused unless explicitly overridden.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if order > MAX_DESIGN_ORDER and not allow_high_order:
        raise ValueError(
            f"order {order} > {MAX_DESIGN_ORDER} refused (pass allow_high_order=True to override)")
    if order + 1 > eig.n:
        raise ValueError(f"order {order} not identifiable on {eig.n} eigenvalues")
    system = normal_equations(eig, corrections, nominal_taps, order, rhs_mode=rhs_mode)
    taps, ridge_used = solve_normal_equations(system.gram, system.rhs, ridge)
    return FirDesign(taps=taps, system=system, ridge_used=ridge_used)


def realization_fir_error(eig: EigenSystem, corrections: FirstOrderCorrections,
                          taps: np.ndarray, nominal_taps: np.ndarray, real) -> float:
    """Squared Frobenius distance for one activation pattern.

    Evaluated in the perturbed basis: the designed polynomial is diagonal
    there, the nominal filter generally is not, and the off-diagonal leakage
    counts toward the error.
    """
    target = fir_filter_matrix(eig, nominal_taps)
    return _pattern_error(eig, corrections, target, taps, len(taps) - 1, real)


def averaged_fir_error(eig: EigenSystem, corrections: FirstOrderCorrections,
                       taps: np.ndarray, nominal_taps: np.ndarray,
                       estimator="enumeration") -> float:
    """Expected squared Frobenius distance between the designed polynomial on
    the perturbed Laplacian and the nominal filter."""
    est = normalize_estimator(estimator)
    target = fir_filter_matrix(eig, nominal_taps)
    order = len(taps) - 1
    if isinstance(est, Enumeration):
        value = 0.0
        for real, weight in enumerate_patterns(corrections.probs, cap=est.cap):
            value += weight * _pattern_error(eig, corrections, target, taps, order, real)
        return value
    if isinstance(est, MonteCarlo):
        rng = np.random.default_rng(est.seed)
        total = 0.0
        for _ in range(est.n_samples):
            real = sample_pattern(corrections.probs, rng)
            total += _pattern_error(eig, corrections, target, taps, order, real)
        return total / est.n_samples
    raise RobustGFError(f"unsupported estimator {estimator!r} for the FIR error")


def _pattern_error(eig, corrections, target, taps, order, real) -> float:
    approx = approx_perturbed_eigs(eig, corrections, real)
    m = approx.u_tilde.T @ target @ approx.u_tilde
    response = vandermonde(approx.lambda_tilde, order) @ taps
    diff = m
    diff[np.diag_indices_from(diff)] -= response
    return float(np.sum(diff * diff))
