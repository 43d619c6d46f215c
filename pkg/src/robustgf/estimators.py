"""Estimator selectors shared by the error evaluators and designers."""
from __future__ import annotations

from dataclasses import dataclass

from .perturbation import ENUMERATION_CAP


@dataclass(frozen=True)
class Enumeration:
    """Exact expectation over all 2^M activation patterns (M <= cap)."""

    cap: int = ENUMERATION_CAP


@dataclass(frozen=True)
class MonteCarlo:
    """Sampled expectation over realizations, optionally also over noise draws.

    n_noise = 0 keeps the closed-form Gaussian noise moments; a positive value
    replaces them with an empirical average (used by the validation oracle).
    """

    n_samples: int
    seed: int
    n_noise: int = 0


EstimatorSpec = Enumeration | MonteCarlo | str


def normalize_estimator(estimator: EstimatorSpec):
    """Accept 'enumeration' / 'closed_form' strings or estimator instances."""
    if isinstance(estimator, (Enumeration, MonteCarlo)):
        return estimator
    if estimator == "enumeration":
        return Enumeration()
    if estimator == "closed_form":
        return "closed_form"
    raise ValueError(f"unknown estimator {estimator!r}")
