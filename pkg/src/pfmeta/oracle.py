"""Deterministic posterior moments by 2-D quadrature.

The study effects are integrated out analytically, ``PF_i | mu, tau2 ~
N(mu, V_i + tau2)``, leaving a (mu, tau) integral evaluated with the trapezoid
rule on a grid that is uniform in mu and in log tau. Study-effect moments are
mixed from the conjugate normal conditional at each grid node.

Nothing here touches the MCMC code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import FlatMu, HierarchicalModel
from .priors import log_prior_tau

BOUNDARY_RATIO = 1e-8


@dataclass(frozen=True)
class GridSpec:
    mu_lo: float = -3.0
    mu_hi: float = 2.0
    n_mu: int = 400
    tau_lo: float = 1e-3
    tau_hi: float = 5.0
    n_tau: int = 400

    def __post_init__(self):
        if not self.mu_lo < self.mu_hi:
            raise DomainError("mu range must have lo < hi")
        if not 0 < self.tau_lo < self.tau_hi:
            raise DomainError("tau range must satisfy 0 < lo < hi")
        if self.n_mu < 200 or self.n_tau < 200:
            raise DomainError("grids need at least 200 points per axis")

    def refined(self, factor=2):
        return GridSpec(
            self.mu_lo, self.mu_hi, self.n_mu * factor, self.tau_lo, self.tau_hi, self.n_tau * factor
        )


@dataclass(frozen=True)
class GridMoments:
    mu_mean: float
    mu_sd: float
    tau2_mean: float
    tau2_sd: float
    theta_mean: tuple[float, ...]
    theta_sd: tuple[float, ...]
    log_normalizer: float
    labels: tuple[str, ...] = ()

    @property
    def normalizer(self):
        return math.exp(self.log_normalizer)


def marginal_loglik(mu, tau2, data):
    """``sum_i log N(PF_i; mu, V_i + tau2)``; broadcasts over ``mu`` and ``tau2``."""
    if np.any(np.asarray(tau2) < 0):
        raise DomainError("tau2 must be >= 0")
    if isinstance(data, HierarchicalModel):
        y, v = data.y, data.v
    else:
        y = np.array([e.pf for e in data], dtype=float)
        v = np.array([e.variance for e in data], dtype=float)
    mu = np.asarray(mu, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    total = np.zeros(np.broadcast(mu, tau2).shape)
    for yi, vi in zip(y, v):
        s = vi + tau2
        total = total - 0.5 * (math.log(2 * math.pi) + np.log(s) + (yi - mu) ** 2 / s)
    return total if total.ndim else float(total)


def _trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def log_posterior_grid(model: HierarchicalModel, grid: GridSpec):
    """Unnormalized log posterior on the grid in the (mu, log tau) measure.

    Returns ``(mu, tau, logp)`` with ``logp`` shaped ``(n_mu, n_tau)``.
    """
    mu = np.linspace(grid.mu_lo, grid.mu_hi, grid.n_mu)
    u = np.linspace(math.log(grid.tau_lo), math.log(grid.tau_hi), grid.n_tau)
    tau = np.exp(u)
    tau2 = tau * tau
    log_prior = np.array([log_prior_tau(model.prior, t2, wrt="tau") for t2 in tau2]) + u
    if isinstance(model.mu_prior, FlatMu):
        log_mu = np.zeros_like(mu)
    else:
        log_mu = np.array([model.mu_prior.log_density(m) for m in mu])
    logp = marginal_loglik(mu[:, None], tau2[None, :], model) + log_prior[None, :] + log_mu[:, None]
    return mu, tau, logp


def check_boundary(logp, ratio=BOUNDARY_RATIO):
    peak = logp.max()
    edge = max(logp[0].max(), logp[-1].max(), logp[:, 0].max(), logp[:, -1].max())
    if not np.isfinite(peak):
        raise DomainError("posterior grid has no finite mass")
    rel = math.exp(edge - peak)
    if rel >= ratio:
        raise DomainError(
            f"posterior density on the grid boundary is {rel:.2e} of its peak "
            f"(limit {ratio:g}); widen the grid"
        )
    return rel


def grid_posterior_moments(model: HierarchicalModel, grid: GridSpec = GridSpec()) -> GridMoments:
    mu, tau, logp = log_posterior_grid(model, grid)
    check_boundary(logp)
    h_mu = (grid.mu_hi - grid.mu_lo) / (grid.n_mu - 1)
    h_u = (math.log(grid.tau_hi) - math.log(grid.tau_lo)) / (grid.n_tau - 1)
    weights = _trapezoid_weights(grid.n_mu, h_mu)[:, None] * _trapezoid_weights(grid.n_tau, h_u)[None, :]
    peak = logp.max()
    dens = weights * np.exp(logp - peak)
    z = dens.sum()
    p = dens / z

    m_grid = np.broadcast_to(mu[:, None], p.shape)
    t2_grid = np.broadcast_to((tau * tau)[None, :], p.shape)

    def moments(f, f2=None):
        mean = float(np.sum(p * f))
        second = float(np.sum(p * (f * f if f2 is None else f2)))
        return mean, math.sqrt(max(second - mean * mean, 0.0))

    mu_mean, mu_sd = moments(m_grid)
    tau2_mean, tau2_sd = moments(t2_grid)
    theta_mean, theta_sd = [], []
    for yi, vi in zip(model.y, model.v):
        prec = 1.0 / vi + 1.0 / t2_grid
        cmean = (yi / vi + m_grid / t2_grid) / prec
        mean, sd = moments(cmean, cmean * cmean + 1.0 / prec)
        theta_mean.append(mean)
        theta_sd.append(sd)
    return GridMoments(
        mu_mean=mu_mean,
        mu_sd=mu_sd,
        tau2_mean=tau2_mean,
        tau2_sd=tau2_sd,
        theta_mean=tuple(theta_mean),
        theta_sd=tuple(theta_sd),
        log_normalizer=float(peak + math.log(z)),
        labels=tuple(model.labels),
    )


def prior_normalization(prior, step=0.05):
    """Integral of the prior density over its natural coordinate.

    Positive coordinates are integrated in ``log x`` and the variance ratio in
    ``logit B``, with the trapezoid rule. Precision priors are evaluated
    through ``log_density_log`` because diffuse Gamma priors keep much of
    their mass below the smallest representable float.
    """
    if prior.space == "B":
        z = np.arange(-400.0, 400.0 + step, step)
        x = 1.0 / (1.0 + np.exp(-z))
        log_jac = -np.logaddexp(0.0, -z) - np.logaddexp(0.0, z)
        keep = (x > 0) & (x < 1)
        logp = [prior.log_density(float(xi)) for xi in x[keep]] + log_jac[keep]
    elif hasattr(prior, "log_density_log"):
        z = np.arange(-30000.0, 60.0 + step, step)
        logp = np.array([prior.log_density_log(float(zi)) for zi in z]) + z
    else:
        z = np.arange(-700.0, 60.0 + step, step)
        logp = np.array([prior.log_density(math.exp(zi)) for zi in z]) + z
    f = np.exp(np.asarray(logp))
    return float(step * (f.sum() - 0.5 * (f[0] + f[-1])))
