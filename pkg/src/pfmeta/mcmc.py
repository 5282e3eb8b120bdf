"""Blocked Gibbs sampler for the hierarchical model.

Each sweep draws theta (conjugate normal), then mu (conjugate normal), then the
heterogeneity block. Gamma precision priors get an exact Gamma draw; every
other family is updated by a univariate slice sampler (or random-walk
Metropolis, when configured) in the prior's natural coordinate.

Chain ``c`` draws from its own PCG64 stream keyed on ``(seed, c)``, so chains
give the same output whether they run serially or in worker processes.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SamplerError
from .model import (
    FlatMu,
    HierarchicalModel,
    heterogeneity_log_conditional,
    initial_state,
    precision_full_conditional_gamma,
)
from .priors import GammaPrecision

MAX_STEP_OUT = 10**6
KERNELS = ("slice", "metropolis")


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 4
    iterations: int = 30_000
    burn_in: int = 10_000
    thin: int = 1
    seed: int = 20240101
    step_scale: float = 1.0
    kernel: str = "slice"
    workers: int = 1

    def __post_init__(self):
        if self.chains < 2:
            raise DomainError(f"need at least 2 chains, got {self.chains}")
        if self.iterations < 1 or not 0 <= self.burn_in < self.iterations:
            raise DomainError(f"burn_in ({self.burn_in}) must be in [0, iterations={self.iterations})")
        if self.thin < 1:
            raise DomainError(f"thin must be >= 1, got {self.thin}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.step_scale > 0:
            raise DomainError(f"step_scale must be > 0, got {self.step_scale}")
        if self.kernel not in KERNELS:
            raise DomainError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")

    @property
    def retained(self):
        """Retained draws per chain."""
        return len(range(self.burn_in, self.iterations, self.thin))


@dataclass
class ChainSamples:
    mu: np.ndarray  # (chains, draws)
    tau2: np.ndarray  # (chains, draws)
    theta: np.ndarray  # (chains, draws, k)
    labels: list[str]
    s0_sq: float
    iterations: np.ndarray  # sweep index of each retained draw
    acceptance: list[dict] = field(default_factory=list)

    @property
    def n_chains(self):
        return self.mu.shape[0]

    @property
    def n_draws(self):
        return self.mu.shape[1]

    def quantity(self, name: str) -> np.ndarray:
        """Draws of a named scalar quantity, shape ``(chains, draws)``.

        Names: ``mu`` (alias ``spf``), ``tau2``, ``tau``, ``precision``, ``B``,
        ``s0_sq``, ``theta[i]`` (1-based) or ``theta[<label>]``, or a bare study label.
        """
        if name in ("mu", "spf"):
            return self.mu
        if name == "tau2":
            return self.tau2
        if name == "tau":
            return np.sqrt(self.tau2)
        if name == "precision":
            return 1.0 / self.tau2
        if name == "B":
            return self.tau2 / (self.tau2 + self.s0_sq)
        if name == "s0_sq":
            return np.full_like(self.mu, self.s0_sq)
        key = name
        if name.startswith("theta[") and name.endswith("]"):
            key = name[6:-1]
            if key.isdigit():
                i = int(key) - 1
                if not 0 <= i < len(self.labels):
                    raise DomainError(f"study index out of range in {name!r}")
                return self.theta[:, :, i]
        if key in self.labels:
            return self.theta[:, :, self.labels.index(key)]
        raise DomainError(f"unknown quantity {name!r}")


def chain_rng(seed, chain):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chain,))))


def draw_theta(rng, y, v, mu, tau2):
    precision = 1.0 / v + 1.0 / tau2
    mean = (y / v + mu / tau2) / precision
    return mean + rng.standard_normal(y.shape[0]) / np.sqrt(precision)


def draw_mu(rng, theta, tau2, mu_prior=FlatMu()):
    k = theta.shape[0]
    if isinstance(mu_prior, FlatMu):
        mean, var = float(theta.sum()) / k, tau2 / k
    else:
        data_precision = k / tau2
        precision = data_precision + mu_prior.precision
        mean = (data_precision * float(theta.sum()) / k + mu_prior.precision * mu_prior.mean) / precision
        var = 1.0 / precision
    return mean + math.sqrt(var) * rng.standard_normal()


def draw_precision_gamma(rng, theta, mu, a, b):
    shape, rate = precision_full_conditional_gamma(theta, mu, a, b)
    return rng.gamma(shape, 1.0 / rate)


def slice_step(rng, logf, x0, width, lp0=None, max_steps=MAX_STEP_OUT):
    """One univariate slice-sampling update with step-out and shrinkage.

    Returns ``(x, logf(x), evaluations)``.
    """
    if lp0 is None:
        lp0 = logf(x0)
    if not math.isfinite(lp0):
        raise SamplerError("non-finite log-density at the current point", {"x": x0, "logf": lp0})
    log_u = lp0 + math.log(rng.random())
    r = rng.random()
    lo = x0 - r * width
    hi = x0 + (1.0 - r) * width
    evals = 0
    steps = 0
    while True:
        f = logf(lo)
        evals += 1
        if math.isnan(f):
            raise SamplerError("non-finite log-density during step-out", {"x": lo})
        if not f > log_u:
            break
        lo -= width
        steps += 1
        if steps > max_steps:
            raise SamplerError("slice step-out exceeded limit", {"x": x0, "lo": lo})
    steps = 0
    while True:
        f = logf(hi)
        evals += 1
        if math.isnan(f):
            raise SamplerError("non-finite log-density during step-out", {"x": hi})
        if not f > log_u:
            break
        hi += width
        steps += 1
        if steps > max_steps:
            raise SamplerError("slice step-out exceeded limit", {"x": x0, "hi": hi})
    while True:
        x1 = lo + rng.random() * (hi - lo)
        f = logf(x1)
        evals += 1
        if math.isnan(f) or f == math.inf:
            raise SamplerError("non-finite log-density during shrinkage", {"x": x1, "logf": f})
        if f > log_u:
            return x1, f, evals
        if x1 < x0:
            lo = x1
        elif x1 > x0:
            hi = x1
        else:
            raise SamplerError("slice shrank onto the current point", {"x": x0})


def metropolis_step(rng, logf, x0, sd, lp0=None):
    """Random-walk Metropolis update. Returns ``(x, logf(x), accepted)``."""
    if lp0 is None:
        lp0 = logf(x0)
    x1 = x0 + sd * rng.standard_normal()
    lp1 = logf(x1)
    if math.isnan(lp1):
        raise SamplerError("non-finite log-density at proposal", {"x": x1})
    if math.log(rng.random()) < lp1 - lp0:
        return x1, lp1, True
    return x0, lp0, False


def _natural_width(model: HierarchicalModel, tau2_init, step_scale):
    prior = model.prior
    if prior.space == "tau":
        ref = math.sqrt(tau2_init)
    elif prior.space == "B":
        ref = 0.25
    else:
        ref = 1.0 / tau2_init
    return step_scale * ref


def run_chain(model: HierarchicalModel, config: McmcConfig, chain: int):
    """Run one chain; returns ``(mu, tau2, theta, acceptance)`` for the retained draws."""
    rng = chain_rng(config.seed, chain)
    prior = model.prior
    mu_prior = model.mu_prior
    y, v = model.y, model.v
    k = model.k
    state = initial_state(model)
    mu, tau2, theta = state.mu, state.tau2, state.theta

    n_keep = config.retained
    mu_out = np.empty(n_keep)
    tau2_out = np.empty(n_keep)
    theta_out = np.empty((n_keep, k))

    conjugate = isinstance(prior, GammaPrecision)
    width = _natural_width(model, tau2, config.step_scale)
    x = prior.to_natural(tau2)
    moves = 0
    evals = 0
    updates = 0
    j = 0
    for it in range(config.iterations):
        theta = draw_theta(rng, y, v, mu, tau2)
        mu = draw_mu(rng, theta, tau2, mu_prior)
        dev = theta - mu
        ssq = float(dev @ dev)
        if conjugate:
            prec = draw_precision_gamma(rng, theta, mu, prior.a, prior.b)
            tau2 = 1.0 / prec
        else:
            def logf(z):
                return heterogeneity_log_conditional(prior, z, k, ssq)

            if config.kernel == "slice":
                x, _, n_ev = slice_step(rng, logf, x, width)
                evals += n_ev
                moves += 1
            else:
                x, _, accepted = metropolis_step(rng, logf, x, width)
                moves += accepted
                evals += 2
            updates += 1
            tau2 = prior.to_tau2(x)
        if not (math.isfinite(mu) and math.isfinite(tau2) and tau2 > 0 and np.isfinite(ssq)):
            raise SamplerError(
                f"non-finite state in chain {chain} at sweep {it}",
                {"mu": mu, "tau2": tau2, "theta": theta.tolist()},
            )
        if it >= config.burn_in and (it - config.burn_in) % config.thin == 0:
            mu_out[j] = mu
            tau2_out[j] = tau2
            theta_out[j] = theta
            j += 1

    if conjugate:
        acceptance = {"block": "heterogeneity", "kernel": "gamma-conjugate"}
    else:
        acceptance = {
            "block": "heterogeneity",
            "kernel": config.kernel,
            "acceptance_rate": moves / updates,
            "evaluations_per_update": evals / updates,
        }
    return mu_out, tau2_out, theta_out, acceptance


def _run_chain_args(args):
    return run_chain(*args)


def run_chains(model: HierarchicalModel, config: McmcConfig) -> ChainSamples:
    jobs = [(model, config, c) for c in range(config.chains)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, config.chains)) as pool:
            results = list(pool.map(_run_chain_args, jobs))
    else:
        results = [_run_chain_args(job) for job in jobs]
    return ChainSamples(
        mu=np.stack([r[0] for r in results]),
        tau2=np.stack([r[1] for r in results]),
        theta=np.stack([r[2] for r in results]),
        labels=model.labels,
        s0_sq=model.s0_sq,
        iterations=np.arange(config.burn_in, config.iterations, config.thin),
        acceptance=[r[3] for r in results],
    )


def dump_samples(samples: ChainSamples, path):
    """Write one row per retained draw: chain, iter, mu, tau2, theta_1..theta_k."""
    k = len(samples.labels)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chain", "iter", "mu", "tau2"] + [f"theta_{i + 1}" for i in range(k)])
        for c in range(samples.n_chains):
            for j, it in enumerate(samples.iterations):
                row = [c, int(it), repr(float(samples.mu[c, j])), repr(float(samples.tau2[c, j]))]
                row += [repr(float(t)) for t in samples.theta[c, j]]
                writer.writerow(row)
