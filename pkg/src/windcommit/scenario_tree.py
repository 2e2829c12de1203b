"""Wind forecast-error scenario trees.

Branches are placed at inverse-normal-CDF values of a set of probability
levels; the error on each branch then evolves by a first-order
autoregressive recursion with persistence ``phi``. The tree root (stage 1)
carries zero error, branching happens at stage 2, and later stages only
propagate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import DomainError

CANONICAL_QUANTILES = (0.01, 0.1, 0.5, 0.9, 0.99)
# Default branch weights used when the quantile set is the canonical one.
PAPER_DEFAULT_PROBABILITIES = (0.05556, 0.24444, 0.4, 0.24444, 0.05556)

PROBABILITY_SUM_TOL = 1e-6


@dataclass(frozen=True)
class QuantileSet:
    """Strictly increasing probability levels in (0, 1), at least two."""

    levels: tuple

    def __post_init__(self):
        levels = tuple(float(q) for q in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise DomainError("quantile set needs at least two levels")
        for q in levels:
            if not 0.0 < q < 1.0:
                raise DomainError(f"quantile level {q} outside (0, 1)")
        if any(a >= b for a, b in zip(levels, levels[1:])):
            raise DomainError("quantile levels must be strictly increasing")

    def __len__(self):
        return len(self.levels)

    def is_canonical(self):
        return len(self.levels) == len(CANONICAL_QUANTILES) and all(
            abs(a - b) < 1e-12 for a, b in zip(self.levels, CANONICAL_QUANTILES))


@dataclass(frozen=True)
class ArParams:
    """AR(1) persistence and error-scaling parameters."""

    phi: float = 1.2
    eps_c: float = 0.14

    def __post_init__(self):
        if not self.phi > 0:
            raise DomainError("phi must be positive")
        if self.eps_c < 0:
            raise DomainError("eps_c must be nonnegative")


@dataclass(frozen=True)
class ProbabilityVector:
    """Nonnegative branch probabilities, renormalized to sum to 1."""

    p: tuple

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if not p:
            raise DomainError("probability vector is empty")
        if any(v < 0 for v in p):
            raise DomainError("probability vector has a negative entry")
        total = sum(p)
        if abs(total - 1.0) > PROBABILITY_SUM_TOL:
            raise DomainError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "p", tuple(v / total for v in p))

    def __len__(self):
        return len(self.p)

    def as_array(self):
        return np.array(self.p)


@dataclass(frozen=True)
class ScenarioTree:
    """Per-branch wind-error trajectories with branch probabilities.

    ``errors`` has shape (branches, stages); stage indices are 0-based here,
    so column 0 is the zero-error root.
    """

    stages: int
    branches: int
    errors: np.ndarray
    probabilities: ProbabilityVector
    branch_stage: int = 2

    def __post_init__(self):
        errors = np.asarray(self.errors, dtype=float)
        errors.setflags(write=False)
        object.__setattr__(self, "errors", errors)
        if errors.shape != (self.branches, self.stages):
            raise DomainError("error matrix shape does not match stages/branches")
        if len(self.probabilities) != self.branches:
            raise DomainError("probability vector length does not match branches")
        if self.stages >= 1 and np.any(errors[:, 0] != 0.0):
            raise DomainError("stage-1 errors must be zero")


def inverse_normal_cdf(q: float, mu: float = 0.0, sigma: float = 1.0) -> float:
    """Quantile function of Normal(mu, sigma); exact mu at q=0.5 or sigma=0."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level {q} outside (0, 1)")
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    if sigma == 0.0 or q == 0.5:
        return float(mu)
    return float(mu + sigma * ndtri(q))


def midpoint_boundaries(quantiles: QuantileSet):
    """Interval boundaries halfway between consecutive quantile levels."""
    q = quantiles.levels
    return tuple((a + b) / 2.0 for a, b in zip(q, q[1:]))


def branch_probabilities(quantiles) -> ProbabilityVector:
    """Midpoint-interval rule: each branch gets the probability mass of the
    interval between the midpoints flanking its quantile level."""
    if isinstance(quantiles, QuantileSet):
        b = midpoint_boundaries(quantiles)
    else:
        # degenerate single-level sets are allowed here (whole mass on one branch)
        levels = tuple(float(q) for q in quantiles)
        if len(levels) == 1:
            return ProbabilityVector((1.0,))
        b = midpoint_boundaries(QuantileSet(levels))
    p = [b[0]]
    p.extend(b[i] - b[i - 1] for i in range(1, len(b)))
    p.append(1.0 - b[-1])
    return ProbabilityVector(tuple(p))


def default_probabilities(quantiles: QuantileSet, rule: str = "paper-default") -> ProbabilityVector:
    """Engine default: the published vector for the canonical quantile set,
    midpoint rule otherwise (or always, when rule='midpoint')."""
    if rule not in ("paper-default", "midpoint"):
        raise DomainError(f"unknown probability rule {rule!r}")
    if rule == "paper-default" and quantiles.is_canonical():
        return ProbabilityVector(PAPER_DEFAULT_PROBABILITIES)
    return branch_probabilities(quantiles)


def build_error_tree(quantiles: QuantileSet, params: ArParams, stages: int,
                     probabilities: ProbabilityVector | None = None) -> ScenarioTree:
    """Recursive error tree: zero at stage 1, quantile injection at stage 2,
    pure persistence afterwards."""
    if stages < 1:
        raise DomainError("stages must be at least 1")
    n = len(quantiles)
    errors = np.zeros((n, stages))
    if stages >= 2:
        injection = params.eps_c * np.array([inverse_normal_cdf(q) for q in quantiles.levels])
        errors[:, 1] = injection
        for k in range(2, stages):
            errors[:, k] = params.phi * errors[:, k - 1]
    probs = probabilities if probabilities is not None else branch_probabilities(quantiles)
    return ScenarioTree(stages=stages, branches=n, errors=errors, probabilities=probs)


def apply_errors(tree: ScenarioTree, wind_forecast, wind_cap: float,
                 mode: str = "per-unit") -> np.ndarray:
    """Per-scenario wind power: errors applied to the forecast, clamped to
    [0, wind_cap].

    mode 'per-unit': forecast * (1 + error); mode 'absolute': forecast +
    error * wind_cap.
    """
    forecast = np.asarray(wind_forecast, dtype=float)
    if forecast.ndim != 1 or forecast.shape[0] != tree.stages:
        raise DomainError("forecast length does not match tree stages")
    if np.any(forecast < 0):
        raise DomainError("forecast entries must be nonnegative")
    if not wind_cap > 0:
        raise DomainError("wind_cap must be positive")
    if mode == "per-unit":
        wind = forecast[None, :] * (1.0 + tree.errors)
    elif mode == "absolute":
        wind = forecast[None, :] + tree.errors * wind_cap
    else:
        raise DomainError(f"unknown error mode {mode!r}")
    return np.clip(wind, 0.0, wind_cap)


def format_tree(tree: ScenarioTree) -> str:
    """Human-readable tree dump: dimensions, error matrix to 10 significant
    digits, and branch probabilities."""
    lines = [
        f"stages: {tree.stages}",
        f"branches: {tree.branches}",
        f"branch_stage: {tree.branch_stage}",
        "errors (branch x stage):",
    ]
    for row in tree.errors:
        lines.append("  " + " ".join(f"{v:.10g}" for v in row))
    lines.append("probabilities: " + " ".join(f"{v:.10g}" for v in tree.probabilities.p))
    return "\n".join(lines) + "\n"
