"""Fixed-effect and random-effects inverse-variance pooling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .effect_size import EffectEstimate, variance_to_ci
from .errors import DomainError


@dataclass(frozen=True)
class PooledResult:
    spf: float
    variance: float
    ci: tuple[float, float]
    weights: tuple[float, ...]
    model: str  # "fixed" or "random"
    tau2: float = 0.0


@dataclass(frozen=True)
class HeterogeneityStats:
    q: float
    df: int
    i_squared: float
    tau2_dl: float


def _arrays(estimates):
    if len(estimates) == 0:
        raise DomainError("no estimates to pool")
    y = np.array([e.pf for e in estimates], dtype=float)
    v = np.array([e.variance for e in estimates], dtype=float)
    return y, v


def _pool(y, v, model, tau2=0.0):
    precision = 1.0 / v
    total = precision.sum()
    weights = precision / total
    spf = float(np.dot(weights, y))
    variance = float(1.0 / total)
    return PooledResult(
        spf=spf,
        variance=variance,
        ci=variance_to_ci(spf, variance),
        weights=tuple(float(w) for w in weights),
        model=model,
        tau2=float(tau2),
    )


def fixed_effect_pool(estimates: list[EffectEstimate]) -> PooledResult:
    y, v = _arrays(estimates)
    return _pool(y, v, "fixed")


def random_effects_pool(estimates: list[EffectEstimate], tau2: float) -> PooledResult:
    if tau2 < 0:
        raise DomainError(f"tau2 must be >= 0, got {tau2}")
    y, v = _arrays(estimates)
    return _pool(y, v + tau2, "random", tau2)


def cochran_q(estimates: list[EffectEstimate]) -> float:
    if len(estimates) < 2:
        raise DomainError("Cochran's Q needs at least two studies")
    y, v = _arrays(estimates)
    w = 1.0 / v
    spf = np.dot(w, y) / w.sum()
    return float(np.dot(w, (y - spf) ** 2))


def i_squared(q, k):
    if q <= 0:
        return 0.0
    return max(0.0, (q - (k - 1)) / q)


def dl_tau2(estimates: list[EffectEstimate]) -> float:
    """DerSimonian-Laird moment estimator; the denominator uses raw precisions."""
    q = cochran_q(estimates)
    _, v = _arrays(estimates)
    w = 1.0 / v
    denom = w.sum() - (w**2).sum() / w.sum()
    return max(0.0, (q - (len(estimates) - 1)) / denom)


def heterogeneity(estimates: list[EffectEstimate]) -> HeterogeneityStats:
    q = cochran_q(estimates)
    k = len(estimates)
    return HeterogeneityStats(q=q, df=k - 1, i_squared=i_squared(q, k), tau2_dl=dl_tau2(estimates))
