"""Heterogeneity priors.

Every prior family is sampled in its own natural coordinate:

* ``ParetoTau`` and ``HalfNormalTau`` live on the between-study SD ``tau``;
* ``RatioB`` lives on the variance ratio ``B = tau2 / (tau2 + s0_sq)``;
* ``ScaledChiSqPrecision`` and ``GammaPrecision`` live on the precision ``1 / tau2``.

``log_density`` is always with respect to that natural coordinate. Use
:func:`log_prior_tau` to get the density in ``tau2`` or ``tau`` space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import DomainError

_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class ParetoTau:
    s0: float
    space = "tau"

    def __post_init__(self):
        _positive("s0", self.s0)

    def log_density(self, tau):
        return math.log(self.s0) - 2.0 * math.log(self.s0 + tau)

    def to_natural(self, tau2):
        return math.sqrt(tau2)

    def to_tau2(self, x):
        return x * x

    def in_support(self, x):
        return x > 0


@dataclass(frozen=True)
class HalfNormalTau:
    scale: float = 1.0
    space = "tau"

    def __post_init__(self):
        _positive("scale", self.scale)

    def log_density(self, tau):
        z = tau / self.scale
        return math.log(2.0) - _HALF_LOG_2PI - math.log(self.scale) - 0.5 * z * z

    def to_natural(self, tau2):
        return math.sqrt(tau2)

    def to_tau2(self, x):
        return x * x

    def in_support(self, x):
        return x > 0


@dataclass(frozen=True)
class RatioB:
    shape1: float
    shape2: float
    s0_sq: float
    uniform: bool = False
    space = "B"

    def __post_init__(self):
        if self.uniform:
            if (self.shape1, self.shape2) != (1.0, 1.0):
                raise DomainError("uniform RatioB must have shape1 = shape2 = 1")
        _positive("shape1", self.shape1)
        _positive("shape2", self.shape2)
        _positive("s0_sq", self.s0_sq)

    @classmethod
    def uniform_prior(cls, s0_sq):
        return cls(1.0, 1.0, s0_sq, uniform=True)

    def log_density(self, b):
        a1, a2 = self.shape1, self.shape2
        log_beta = math.lgamma(a1) + math.lgamma(a2) - math.lgamma(a1 + a2)
        return (a1 - 1.0) * math.log(b) + (a2 - 1.0) * math.log1p(-b) - log_beta

    def to_natural(self, tau2):
        return tau2 / (tau2 + self.s0_sq)

    def to_tau2(self, x):
        return b_to_tau2(x, self.s0_sq)

    def in_support(self, x):
        return 0 < x < 1


@dataclass(frozen=True)
class ScaledChiSqPrecision:
    """``1/tau2 ~ chi2_d / (d * scale)``, i.e. Gamma(d/2, rate d*scale/2).

    ``scale = 1`` is the bare ``chi2_d / d`` form; the named preset anchors
    ``scale`` at the harmonic-mean within-study variance.
    """

    d: float
    scale: float = 1.0
    space = "precision"

    def __post_init__(self):
        if not self.d >= 1:
            raise DomainError(f"degrees of freedom d must be >= 1, got {self.d}")
        _positive("scale", self.scale)

    @property
    def shape(self):
        return 0.5 * self.d

    @property
    def rate(self):
        return 0.5 * self.d * self.scale

    def log_density(self, prec):
        return _gamma_logpdf(prec, self.shape, self.rate)

    def log_density_log(self, log_prec):
        """``log_density(exp(log_prec))`` without underflow for tiny precisions."""
        return _gamma_logpdf_log(log_prec, self.shape, self.rate)

    def to_natural(self, tau2):
        return 1.0 / tau2

    def to_tau2(self, x):
        return 1.0 / x

    def in_support(self, x):
        return x > 0


@dataclass(frozen=True)
class GammaPrecision:
    a: float
    b: float
    space = "precision"

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)

    def log_density(self, prec):
        return _gamma_logpdf(prec, self.a, self.b)

    def log_density_log(self, log_prec):
        """``log_density(exp(log_prec))`` without underflow for tiny precisions."""
        return _gamma_logpdf_log(log_prec, self.a, self.b)

    def to_natural(self, tau2):
        return 1.0 / tau2

    def to_tau2(self, x):
        return 1.0 / x

    def in_support(self, x):
        return x > 0


PriorSpec = Union[ParetoTau, HalfNormalTau, RatioB, ScaledChiSqPrecision, GammaPrecision]


def _gamma_logpdf(x, shape, rate):
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(x) - rate * x


def _gamma_logpdf_log(log_x, shape, rate):
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * log_x - rate * math.exp(log_x)


def b_to_tau2(b, s0_sq):
    if not 0 < b < 1:
        raise DomainError(f"B must lie in (0, 1), got {b}")
    _positive("s0_sq", s0_sq)
    return b * s0_sq / (1.0 - b)


def tau2_to_b(tau2, s0_sq):
    return tau2 / (tau2 + s0_sq)


def log_abs_dnatural_dtau2(prior: PriorSpec, tau2):
    """log |d x / d tau2| for the prior's natural coordinate ``x``."""
    if prior.space == "tau":
        return -math.log(2.0) - 0.5 * math.log(tau2)
    if prior.space == "B":
        return math.log(prior.s0_sq) - 2.0 * math.log(tau2 + prior.s0_sq)
    return -2.0 * math.log(tau2)


def log_prior_tau(prior: PriorSpec, tau2, wrt="natural"):
    """Log prior density at ``tau2``, with respect to ``wrt``.

    ``wrt`` is ``"natural"`` (the family's sampling coordinate), ``"tau2"``
    or ``"tau"``.
    """
    if not (math.isfinite(tau2) and tau2 > 0):
        raise DomainError(f"tau2 must be > 0, got {tau2}")
    x = prior.to_natural(tau2)
    lp = prior.log_density(x)
    if wrt == "natural":
        return lp
    lp += log_abs_dnatural_dtau2(prior, tau2)
    if wrt == "tau2":
        return lp
    if wrt == "tau":
        return lp + math.log(2.0) + 0.5 * math.log(tau2)
    raise DomainError(f"unknown parameterization {wrt!r}")


DEFAULT_CHISQ_D = 4.0

PRESET_NAMES = (
    "pareto",
    "half_normal",
    "uniform_b",
    "beta_0.9_1",
    "beta_1_0.9",
    "scaled_chisq",
    "gamma_0.001",
    "gamma_0.1",
)


def make_prior(name, s0_sq, d=DEFAULT_CHISQ_D, beta1=None, beta2=None, gamma_a=None, gamma_b=None):
    """Build a prior from a preset or family name.

    Presets fix every parameter. The family names ``ratio_b`` and ``gamma``
    take their shapes from ``beta1``/``beta2`` and ``gamma_a``/``gamma_b``.
    Data-anchored scales come from ``s0_sq``.
    """
    if name == "pareto":
        return ParetoTau(math.sqrt(s0_sq))
    if name == "half_normal":
        return HalfNormalTau(1.0)
    if name == "uniform_b":
        return RatioB.uniform_prior(s0_sq)
    if name == "beta_0.9_1":
        return RatioB(0.9, 1.0, s0_sq)
    if name == "beta_1_0.9":
        return RatioB(1.0, 0.9, s0_sq)
    if name == "ratio_b":
        return RatioB(1.0 if beta1 is None else beta1, 1.0 if beta2 is None else beta2, s0_sq)
    if name == "scaled_chisq":
        return ScaledChiSqPrecision(d, s0_sq)
    if name == "gamma_0.001":
        return GammaPrecision(0.001, 0.001)
    if name == "gamma_0.1":
        return GammaPrecision(0.1, 0.1)
    if name == "gamma":
        if gamma_a is None or gamma_b is None:
            raise DomainError("family 'gamma' needs prior.gamma_a and prior.gamma_b")
        return GammaPrecision(gamma_a, gamma_b)
    raise DomainError(f"unknown prior {name!r}; choose from {', '.join(PRESET_NAMES + ('ratio_b', 'gamma'))}")


def describe(prior: PriorSpec) -> dict:
    out = {"family": type(prior).__name__, "space": prior.space}
    for key, value in vars(prior).items():
        out[key] = value
    return out
