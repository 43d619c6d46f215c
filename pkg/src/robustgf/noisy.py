"""Joint FIR design under edge perturbations and additive input noise.

The objective adds, with weight gamma, the expected output estimation error
on a noisy input to the expected filter approximation error. Noise is
zero-mean i.i.d. Gaussian per node and independent of the edge activations,
so only its first two moments enter: per activation pattern the noise
expectation of the weighting terms is available in closed form, with the
perturbed basis treated as orthonormal (its actual deviation from
orthonormality is second order and can be inspected via the oracle module).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidNominal, RobustGFError
from .estimators import Enumeration, MonteCarlo, normalize_estimator
from .fir import (
    FirDesign,
    VandermondeSystem,
    expected_gram,
    expected_rhs,
    fir_filter_matrix,
    vandermonde,
)
from .fir import MAX_DESIGN_ORDER, averaged_fir_error, solve_normal_equations
from .graph import EigenSystem
from .perturbation import (
    FirstOrderCorrections,
    PerturbationModel,
    approx_perturbed_eigs,
    enumerate_patterns,
    sample_pattern,
)


@dataclass(frozen=True)
class NoisyDesignProblem:
    """Inputs of the joint design: clean signal, noise level, trade-off weight,
    nominal taps, and the edge perturbation model."""

    signal: np.ndarray
    noise_variance: float
    gamma: float
    nominal_taps: np.ndarray
    model: PerturbationModel

    def __post_init__(self):
        x = np.asarray(self.signal, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("signal must be finite")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        object.__setattr__(self, "signal", x)
        object.__setattr__(self, "nominal_taps", np.asarray(self.nominal_taps, dtype=float))


@dataclass(frozen=True)
class TradeoffPoint:
    gamma: float
    d_filter: float  # normalized filter-approximation error
    d_xy: float      # normalized output-estimation error


def lowfreq_signal(eig: EigenSystem, k: int | None = None) -> np.ndarray:
    """Unit-norm equal-weight combination of the k lowest-frequency eigenvectors."""
    n = eig.n
    if k is None:
        k = max(1, -(-n // 10))  # ceil(n / 10)
    x = eig.eigenvectors[:, :k].sum(axis=1)
    return x / np.linalg.norm(x)


logger = logging.getLogger(__name__)


def _pattern_frame(eig, corrections, real, order, target, x):
    """Per-pattern quantities: power basis, rotated clean input, rotated target output."""
    approx = approx_perturbed_eigs(eig, corrections, real)
    phi = vandermonde(approx.lambda_tilde, order)
    yx = approx.u_tilde.T @ x
    w = approx.u_tilde.T @ (target @ x)
    if logger.isEnabledFor(logging.DEBUG):
        gram = approx.u_tilde.T @ approx.u_tilde
        defect = float(np.linalg.norm(gram - np.eye(gram.shape[0])))
        logger.debug("perturbed basis orthonormality defect: %.3e", defect)
    return phi, yx, w, approx.u_tilde


def _noise_second_moment(yx: np.ndarray, variance: float, u_tilde: np.ndarray,
                         rng, n_noise: int) -> tuple[np.ndarray, np.ndarray]:
    """(E[rotated noisy input], E[its square]) per mode.

    Closed form when n_noise == 0; otherwise an empirical average over
    Gaussian draws rotated through the raw perturbed basis, which is what the
    double-loop validation uses.
    """
    if n_noise <= 0 or variance == 0.0:
        return yx, yx * yx + variance
    n = u_tilde.shape[0]
    draws = rng.normal(0.0, np.sqrt(variance), size=(n_noise, n))
    rotated = draws @ u_tilde
    y = yx[None, :] + rotated
    return y.mean(axis=0), (y * y).mean(axis=0)


def design_noisy_robust_fir(problem: NoisyDesignProblem, eig: EigenSystem,
                            corrections: FirstOrderCorrections,
                            estimator="enumeration", order: int | None = None,
                            ridge: float = 0.0, rhs_mode: str = "auto",
                            allow_high_order: bool = False) -> FirDesign:
    """Closed-form minimizer of the gamma-weighted joint objective.

    The gamma = 0 case skips the noise terms entirely and reproduces the
    perturbation-only design bit for bit.
    """
    if order is None:
        order = len(problem.nominal_taps) - 1
    if order > MAX_DESIGN_ORDER and not allow_high_order:
        raise ValueError(
            f"order {order} > {MAX_DESIGN_ORDER} refused (pass allow_high_order=True to override)")
    gram = expected_gram(eig, corrections, order)
    rhs = expected_rhs(eig, corrections, problem.nominal_taps, order, mode=rhs_mode)
    if problem.gamma > 0:
        gram_noise, rhs_noise = _expected_noise_terms(problem, eig, corrections, order, estimator)
        gram = gram + problem.gamma * gram_noise
        rhs = rhs + problem.gamma * rhs_noise
    taps, ridge_used = solve_normal_equations(gram, rhs, ridge)
    system = VandermondeSystem(gram=gram, rhs=rhs, condition_estimate=float(np.linalg.cond(gram)))
    return FirDesign(taps=taps, system=system, ridge_used=ridge_used)


def _expected_noise_terms(problem, eig, corrections, order, estimator):
    est = normalize_estimator(estimator)
    target = fir_filter_matrix(eig, problem.nominal_taps)
    x = problem.signal

    def pattern_terms(real, rng=None, n_noise=0):
        phi, yx, w, u_tilde = _pattern_frame(eig, corrections, real, order, target, x)
        y_mean, y_sq = _noise_second_moment(yx, problem.noise_variance, u_tilde, rng, n_noise)
        gram_term = phi.T @ (y_sq[:, None] * phi)
        rhs_term = phi.T @ (y_mean * w)
        return gram_term, rhs_term

    size = order + 1
    gram_total = np.zeros((size, size))
    rhs_total = np.zeros(size)
    if isinstance(est, Enumeration):
        for real, weight in enumerate_patterns(corrections.probs, cap=est.cap):
            g, r = pattern_terms(real)
            gram_total += weight * g
            rhs_total += weight * r
        return gram_total, rhs_total
    if isinstance(est, MonteCarlo):
        rng = np.random.default_rng(est.seed)
        for _ in range(est.n_samples):
            real = sample_pattern(corrections.probs, rng)
            g, r = pattern_terms(real, rng=rng, n_noise=est.n_noise)
            gram_total += g
            rhs_total += r
        return gram_total / est.n_samples, rhs_total / est.n_samples
    raise RobustGFError(f"unsupported estimator {estimator!r} for the noisy design")


def realization_output_error(problem: NoisyDesignProblem, eig: EigenSystem,
                             corrections: FirstOrderCorrections, taps: np.ndarray,
                             real, rng=None, n_noise: int = 0) -> float:
    """Noise-averaged squared output error for one activation pattern.

    Closed-form Gaussian moments unless n_noise > 0, in which case the noise
    expectation is replaced by an empirical average over draws.
    """
    target = fir_filter_matrix(eig, problem.nominal_taps)
    return _pattern_output_error(problem, eig, corrections, taps, target, real, rng, n_noise)


def _pattern_output_error(problem, eig, corrections, taps, target, real, rng=None, n_noise=0):
    order = len(taps) - 1
    phi, yx, w, u_tilde = _pattern_frame(eig, corrections, real, order, target, problem.signal)
    response = phi @ taps
    if n_noise > 0 and problem.noise_variance > 0 and rng is not None:
        n = u_tilde.shape[0]
        draws = rng.normal(0.0, np.sqrt(problem.noise_variance), size=(n_noise, n))
        y = yx[None, :] + draws @ u_tilde
        diff = response[None, :] * y - w[None, :]
        return float(np.mean(np.sum(diff * diff, axis=1)))
    mismatch = response * yx - w
    return float(np.sum(mismatch * mismatch) + problem.noise_variance * np.sum(response * response))


def output_error(problem: NoisyDesignProblem, eig: EigenSystem,
                 corrections: FirstOrderCorrections, taps: np.ndarray,
                 estimator="enumeration") -> float:
    """Expected squared output estimation error over activations and noise."""
    est = normalize_estimator(estimator)
    target = fir_filter_matrix(eig, problem.nominal_taps)

    def pattern_value(real, rng=None, n_noise=0):
        return _pattern_output_error(problem, eig, corrections, taps, target, real, rng, n_noise)

    if isinstance(est, Enumeration):
        return sum(weight * pattern_value(real)
                   for real, weight in enumerate_patterns(corrections.probs, cap=est.cap))
    if isinstance(est, MonteCarlo):
        rng = np.random.default_rng(est.seed)
        total = 0.0
        for _ in range(est.n_samples):
            real = sample_pattern(corrections.probs, rng)
            total += pattern_value(real, rng=rng, n_noise=est.n_noise)
        return total / est.n_samples
    raise RobustGFError(f"unsupported estimator {estimator!r} for the output error")


def evaluate_tradeoff(problem: NoisyDesignProblem, eig: EigenSystem,
                      corrections: FirstOrderCorrections, taps: np.ndarray,
                      estimator="enumeration") -> TradeoffPoint:
    """Normalized values of the two objective terms for a given design."""
    target = fir_filter_matrix(eig, problem.nominal_taps)
    target_energy = float(np.sum(target * target))
    if target_energy == 0.0:
        raise InvalidNominal("nominal FIR filter is identically zero")
    out_ref = target @ problem.signal
    out_energy = float(np.sum(out_ref * out_ref))
    if out_energy == 0.0:
        raise InvalidNominal("nominal filter output is identically zero for this signal")
    d_filter = averaged_fir_error(eig, corrections, taps, problem.nominal_taps, estimator) / target_energy
    d_xy = output_error(problem, eig, corrections, taps, estimator) / out_energy
    return TradeoffPoint(gamma=problem.gamma, d_filter=d_filter, d_xy=d_xy)
