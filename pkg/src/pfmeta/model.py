"""Normal-normal hierarchical model and its closed-form full conditionals.

Observation layer: ``PF_i | theta_i ~ N(theta_i, V_i)`` with known ``V_i``.
Study layer: ``theta_i | mu, tau2 ~ N(mu, tau2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .effect_size import EffectEstimate
from .errors import DomainError
from .priors import PriorSpec, log_prior_tau

_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class FlatMu:
    def log_density(self, mu):
        return 0.0


@dataclass(frozen=True)
class NormalMu:
    mean: float = 0.0
    precision: float = 0.001

    def __post_init__(self):
        if not self.precision > 0:
            raise DomainError(f"mu prior precision must be > 0, got {self.precision}")

    def log_density(self, mu):
        return 0.5 * (math.log(self.precision) - _LOG_2PI) - 0.5 * self.precision * (mu - self.mean) ** 2


MuPrior = Union[FlatMu, NormalMu]


@dataclass
class ParameterState:
    mu: float
    tau2: float
    theta: np.ndarray

    def __post_init__(self):
        if not self.tau2 > 0:
            raise DomainError(f"tau2 must be > 0, got {self.tau2}")
        self.theta = np.asarray(self.theta, dtype=float)


def harmonic_mean_s0sq(variances):
    v = np.asarray(variances, dtype=float)
    if v.size == 0:
        raise DomainError("harmonic mean of an empty list")
    if np.any(v <= 0):
        raise DomainError("variances must be > 0")
    return float(v.size / np.sum(1.0 / v))


@dataclass(frozen=True)
class HierarchicalModel:
    data: tuple[EffectEstimate, ...]
    prior: PriorSpec
    mu_prior: MuPrior = field(default_factory=FlatMu)
    s0_sq: float = field(init=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)
    v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        data = tuple(self.data)
        if not data:
            raise DomainError("model needs at least one study")
        object.__setattr__(self, "data", data)
        y = np.array([e.pf for e in data], dtype=float)
        v = np.array([e.variance for e in data], dtype=float)
        y.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "s0_sq", harmonic_mean_s0sq(v))

    @property
    def k(self):
        return len(self.data)

    @property
    def labels(self):
        return [e.label for e in self.data]


def _normal_logpdf(x, mean, var):
    return -0.5 * (_LOG_2PI + np.log(var) + (x - mean) ** 2 / var)


def log_likelihood(state: ParameterState, data) -> float:
    """``sum_i log N(PF_i; theta_i, V_i)``; ``data`` is a model or a list of estimates."""
    y, v = _data_arrays(data)
    return float(np.sum(_normal_logpdf(y, state.theta, v)))


def log_study_layer(state: ParameterState) -> float:
    return float(np.sum(_normal_logpdf(state.theta, state.mu, state.tau2)))


def log_joint(model: HierarchicalModel, state: ParameterState) -> float:
    """Joint log-density over (theta, mu, x), with x the prior's natural coordinate."""
    return (
        log_likelihood(state, model)
        + log_study_layer(state)
        + model.mu_prior.log_density(state.mu)
        + log_prior_tau(model.prior, state.tau2, wrt="natural")
    )


def _data_arrays(data):
    if isinstance(data, HierarchicalModel):
        return data.y, data.v
    y = np.array([e.pf for e in data], dtype=float)
    v = np.array([e.variance for e in data], dtype=float)
    return y, v


def theta_full_conditional(y, v, mu, tau2):
    """Mean and variance of ``theta_i`` given everything else. Vectorizes over studies."""
    precision = 1.0 / v + 1.0 / tau2
    mean = (y / v + mu / tau2) / precision
    return mean, 1.0 / precision


def mu_full_conditional(theta, tau2, mu_prior: MuPrior = FlatMu()):
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    if k < 1:
        raise DomainError("mu conditional needs at least one study effect")
    if isinstance(mu_prior, FlatMu):
        return float(theta.mean()), tau2 / k
    data_precision = k / tau2
    precision = data_precision + mu_prior.precision
    mean = (data_precision * theta.mean() + mu_prior.precision * mu_prior.mean) / precision
    return float(mean), 1.0 / precision


def precision_full_conditional_gamma(theta, mu, a, b):
    """Shape and rate of ``1/tau2`` given theta and mu under a Gamma(a, b) prior."""
    theta = np.asarray(theta, dtype=float)
    return a + 0.5 * theta.size, b + 0.5 * float(np.sum((theta - mu) ** 2))


def heterogeneity_log_conditional(prior: PriorSpec, x, k, ssq) -> float:
    """Unnormalized log-density of the natural coordinate ``x`` given ``sum (theta_i - mu)^2``.

    Returns ``-inf`` outside the support.
    """
    if not prior.in_support(x):
        return -math.inf
    tau2 = prior.to_tau2(x)
    if not tau2 > 0 or not math.isfinite(tau2):
        return -math.inf
    return prior.log_density(x) - 0.5 * k * math.log(tau2) - 0.5 * ssq / tau2


def initial_state(model: HierarchicalModel, tau2: Optional[float] = None) -> ParameterState:
    """theta at the observed effects, mu at the fixed-effect pool, tau2 at max(DL, s0_sq / 10)."""
    from .classical import dl_tau2, fixed_effect_pool

    mu = fixed_effect_pool(list(model.data)).spf
    if tau2 is None:
        dl = dl_tau2(list(model.data)) if model.k >= 2 else 0.0
        tau2 = max(dl, model.s0_sq / 10.0)
    return ParameterState(mu=mu, tau2=tau2, theta=model.y.copy())
