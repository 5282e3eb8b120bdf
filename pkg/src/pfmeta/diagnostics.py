"""Posterior summaries and convergence diagnostics (R-hat, ESS)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

RHAT_MAX = 1.01
ESS_MIN = 400.0


@dataclass(frozen=True)
class PosteriorSummary:
    mean: float
    sd: float
    q025: float
    q975: float
    ess: float
    rhat: float


@dataclass(frozen=True)
class GateResult:
    passed: bool
    offenders: list[str]


def _autocov(x):
    """Biased autocovariance of each row of ``x`` via FFT."""
    n = x.shape[-1]
    centered = x - x.mean(axis=-1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, n=size, axis=-1)
    acov = np.fft.irfft(f * np.conjugate(f), n=size, axis=-1)[..., :n]
    return acov / n


def _constant(draws):
    return bool(np.all(draws == draws.flat[0]))


def rhat(draws):
    """Potential scale reduction from between- and within-chain variance.

    Zero-variance input gives 1 by convention.
    """
    draws = np.asarray(draws, dtype=float)
    if _constant(draws):
        return 1.0
    m, n = draws.shape
    within = draws.var(axis=1, ddof=1).mean()
    between_over_n = draws.mean(axis=1).var(ddof=1)
    var_plus = (n - 1) / n * within + between_over_n
    if within == 0:
        return 1.0 if var_plus == 0 else float("inf")
    return float(np.sqrt(var_plus / within))


def ess(draws):
    """Multi-chain effective sample size.

    The autocorrelation sum runs over consecutive lag pairs and stops at the
    first pair whose sum is negative.
    """
    draws = np.asarray(draws, dtype=float)
    m, n = draws.shape
    total = m * n
    within = draws.var(axis=1, ddof=1).mean()
    if _constant(draws) or within == 0:
        return float(total)
    var_plus = (n - 1) / n * within + draws.mean(axis=1).var(ddof=1)
    mean_acov = _autocov(draws).mean(axis=0)
    rho = 1.0 - (within - mean_acov) / var_plus
    tau_hat = -1.0
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        tau_hat += 2.0 * pair
        t += 2
    tau_hat = max(tau_hat, 1.0 / np.log10(total))
    return float(total / tau_hat)


def summarize_draws(draws) -> PosteriorSummary:
    draws = np.asarray(draws, dtype=float)
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise DomainError("summaries need draws shaped (chains >= 2, draws)")
    if draws.size < 1000:
        raise DomainError(f"summaries need at least 1000 retained draws, got {draws.size}")
    flat = draws.ravel()
    if _constant(draws):
        value = float(flat[0])
        return PosteriorSummary(value, 0.0, value, value, float(flat.size), 1.0)
    lo, hi = np.quantile(flat, [0.025, 0.975], method="linear")
    return PosteriorSummary(
        mean=float(flat.mean()),
        sd=float(flat.std(ddof=1)),
        q025=float(lo),
        q975=float(hi),
        ess=ess(draws),
        rhat=rhat(draws),
    )


def summarize(samples, quantity: str) -> PosteriorSummary:
    return summarize_draws(samples.quantity(quantity))


def diagnostics_gate(summaries: dict, rhat_max=RHAT_MAX, ess_min=ESS_MIN) -> GateResult:
    offenders = []
    for name, s in summaries.items():
        if not s.rhat <= rhat_max:
            offenders.append(f"{name}: rhat {s.rhat:.4f} > {rhat_max}")
        if not s.ess >= ess_min:
            offenders.append(f"{name}: ess {s.ess:.1f} < {ess_min:g}")
    return GateResult(passed=not offenders, offenders=offenders)
