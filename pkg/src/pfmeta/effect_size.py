"""Prevented-fraction effect sizes and their sampling variances.

The prevented fraction is ``PF = mean_t / mean_c - 1``: negative values mean
the treatment arm has fewer DMF surfaces than the control arm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError

Z95 = 1.96

# Tolerances for flagging disagreement between arm-derived and reported values.
PF_MISMATCH_TOL = 0.02
VARIANCE_MISMATCH_REL = 0.25


@dataclass(frozen=True)
class ArmStats:
    mean: float
    sd: float
    n: int


@dataclass(frozen=True)
class ReportedEffect:
    pf: float
    ci_lower: float
    ci_upper: float


@dataclass(frozen=True)
class StudyRecord:
    """One trial's summary inputs.

    ``arms`` is a ``(treatment, control)`` pair. When both ``arms`` and
    ``reported_effect`` are given, the arms are used for computation and the
    reported effect is kept for cross-checking.
    """

    label: str
    arms: Optional[tuple[ArmStats, ArmStats]] = None
    reported_effect: Optional[ReportedEffect] = None

    def __post_init__(self):
        if self.arms is None and self.reported_effect is None:
            raise DomainError(f"study {self.label!r}: needs arm statistics or a reported effect")
        if self.arms is not None:
            treatment, control = self.arms
            for name, arm in (("treatment", treatment), ("control", control)):
                if not arm.sd > 0:
                    raise DomainError(f"study {self.label!r}: {name} sd must be > 0, got {arm.sd}")
                if arm.n < 2:
                    raise DomainError(f"study {self.label!r}: {name} n must be >= 2, got {arm.n}")
                if arm.mean < 0:
                    raise DomainError(f"study {self.label!r}: {name} mean must be >= 0, got {arm.mean}")
            if not control.mean > 0:
                raise DomainError(f"study {self.label!r}: control mean must be > 0, got {control.mean}")
        if self.reported_effect is not None:
            eff = self.reported_effect
            if not eff.ci_lower < eff.ci_upper:
                raise DomainError(
                    f"study {self.label!r}: ci_lower {eff.ci_lower} must be < ci_upper {eff.ci_upper}"
                )


@dataclass(frozen=True)
class EffectEstimate:
    label: str
    pf: float
    variance: float

    def __post_init__(self):
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise DomainError(f"study {self.label!r}: variance must be > 0, got {self.variance}")
        if not math.isfinite(self.pf) or self.pf < -1:
            raise DomainError(f"study {self.label!r}: prevented fraction {self.pf} is below -1")


def compute_pf(mean_t, mean_c, label="<unnamed>"):
    if not mean_c > 0:
        raise DomainError(f"study {label!r}: control mean must be > 0, got {mean_c}")
    if mean_t < 0:
        raise DomainError(f"study {label!r}: treatment mean must be >= 0, got {mean_t}")
    return mean_t / mean_c - 1.0


def pf_variance(mean_t, sd_t, n_t, mean_c, sd_c, n_c, label="<unnamed>"):
    """First-order (delta method) variance of ``mean_t / mean_c``."""
    if mean_c == 0:
        raise DomainError(f"study {label!r}: control mean is zero")
    var_t = sd_t**2 / n_t
    var_c = sd_c**2 / n_c
    return var_t / mean_c**2 + mean_t**2 * var_c / mean_c**4


def ci_to_variance(ci_lower, ci_upper):
    if not ci_lower < ci_upper:
        raise DomainError(f"degenerate interval ({ci_lower}, {ci_upper})")
    return ((ci_upper - ci_lower) / (2 * Z95)) ** 2


def variance_to_ci(pf, variance):
    if not variance > 0:
        raise DomainError(f"variance must be > 0, got {variance}")
    half = Z95 * math.sqrt(variance)
    return pf - half, pf + half


def to_estimate(record: StudyRecord) -> tuple[EffectEstimate, list[str]]:
    """Reduce a record to an ``EffectEstimate``; also return any cross-check warnings."""
    warnings = []
    if record.arms is not None:
        t, c = record.arms
        pf = compute_pf(t.mean, c.mean, record.label)
        var = pf_variance(t.mean, t.sd, t.n, c.mean, c.sd, c.n, record.label)
        eff = record.reported_effect
        if eff is not None:
            rep_var = ci_to_variance(eff.ci_lower, eff.ci_upper)
            if abs(pf - eff.pf) > PF_MISMATCH_TOL:
                warnings.append(
                    f"{record.label}: arm-derived PF {pf:.4f} differs from reported PF {eff.pf:.4f}"
                )
            if abs(var - rep_var) > VARIANCE_MISMATCH_REL * rep_var:
                warnings.append(
                    f"{record.label}: arm-derived variance {var:.6g} differs from "
                    f"interval-derived variance {rep_var:.6g} by more than 25%"
                )
    else:
        eff = record.reported_effect
        pf = eff.pf
        var = ci_to_variance(eff.ci_lower, eff.ci_upper)
    return EffectEstimate(record.label, pf, var), warnings
