"""End-to-end orchestration: dataset -> classical and Bayesian analyses -> report."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from . import __version__
from .classical import fixed_effect_pool, heterogeneity, random_effects_pool
from .diagnostics import diagnostics_gate, summarize
from .effect_size import to_estimate, variance_to_ci
from .errors import DomainError, SamplerError
from .io import Dataset
from .mcmc import McmcConfig, run_chains
from .model import FlatMu, HierarchicalModel, NormalMu, harmonic_mean_s0sq
from .priors import DEFAULT_CHISQ_D, PRESET_NAMES, describe, make_prior

SCHEMA_VERSION = "1.0"
ANALYSES = ("fixed", "random", "bayes")

# Harmonic-mean within-study variance reported for the original trial data.
REFERENCE_S0_SQ = 0.0095
S0_SQ_REL_TOL = 0.05


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    analyses: tuple[str, ...] = ("fixed", "random", "bayes")
    priors: tuple[str, ...] = PRESET_NAMES
    d: float = DEFAULT_CHISQ_D
    beta1: Optional[float] = None
    beta2: Optional[float] = None
    gamma_a: Optional[float] = None
    gamma_b: Optional[float] = None
    mu_prior: str = "flat"
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    out_dir: str = "out"

    def __post_init__(self):
        if not self.analyses:
            raise DomainError("select at least one analysis")
        for a in self.analyses:
            if a not in ANALYSES:
                raise DomainError(f"unknown analysis {a!r}; choose from {ANALYSES}")
        if "bayes" in self.analyses and not self.priors:
            raise DomainError("bayes analysis needs at least one prior")
        if self.mu_prior not in ("flat", "normal"):
            raise DomainError(f"mu_prior must be 'flat' or 'normal', got {self.mu_prior!r}")

    def echo(self) -> dict:
        """Everything that determines the numbers; output location is left out."""
        out = asdict(self)
        out.pop("out_dir")
        out["mcmc"].pop("workers")
        return out


def _split(value):
    return tuple(v.strip() for v in value.split(",") if v.strip())


def build_config(values: dict[str, str], **overrides) -> AnalysisConfig:
    """Merge parsed config values with CLI overrides (overrides win; ``None`` is ignored)."""
    kw = {}
    mc = {}
    if "analyses" in values:
        kw["analyses"] = _split(values["analyses"])
    if "prior.family" in values:
        kw["priors"] = _split(values["prior.family"])
    for key, name in (("prior.d", "d"), ("prior.beta1", "beta1"), ("prior.beta2", "beta2"),
                      ("prior.gamma_a", "gamma_a"), ("prior.gamma_b", "gamma_b")):
        if key in values:
            kw[name] = float(values[key])
    if "mu_prior" in values:
        kw["mu_prior"] = values["mu_prior"]
    for key in ("chains", "iterations", "burn_in", "thin", "seed"):
        if key in values:
            mc[key] = int(values[key])
    if "out_dir" in values:
        kw["out_dir"] = values["out_dir"]

    if overrides.get("seed") is not None:
        mc["seed"] = int(overrides["seed"])
    if overrides.get("workers") is not None:
        mc["workers"] = int(overrides["workers"])
    if overrides.get("prior") is not None:
        kw["priors"] = _split(overrides["prior"])
    if overrides.get("out_dir") is not None:
        kw["out_dir"] = overrides["out_dir"]
    if kw.get("priors") == ("all",):
        kw["priors"] = PRESET_NAMES
    kw["mcmc"] = McmcConfig(**mc)
    return AnalysisConfig(**kw)


def default_workers(chains):
    return max(1, min(chains, os.cpu_count() or 1))


def _pooled_dict(result):
    return {
        "model": result.model,
        "spf": result.spf,
        "variance": result.variance,
        "ci_lower": result.ci[0],
        "ci_upper": result.ci[1],
        "tau2": result.tau2,
        "weights": list(result.weights),
    }


def _summary_row(name, s):
    return {"parameter": name, "mean": s.mean, "sd": s.sd, "q025": s.q025, "q975": s.q975,
            "ess": s.ess, "rhat": s.rhat}


def run_bayes(estimates, prior_name, config: AnalysisConfig) -> dict:
    s0_sq = harmonic_mean_s0sq([e.variance for e in estimates])
    prior = make_prior(
        prior_name, s0_sq, d=config.d, beta1=config.beta1, beta2=config.beta2,
        gamma_a=config.gamma_a, gamma_b=config.gamma_b,
    )
    mu_prior = NormalMu() if config.mu_prior == "normal" else FlatMu()
    model = HierarchicalModel(estimates, prior, mu_prior)
    samples = run_chains(model, config.mcmc)

    rows = {"SPF": summarize(samples, "mu"), "tau2": summarize(samples, "tau2"),
            "s0_sq": summarize(samples, "s0_sq")}
    for label in model.labels:
        rows[label] = summarize(samples, f"theta[{label}]")
    derived = {"tau": summarize(samples, "tau"), "precision": summarize(samples, "precision")}
    if prior.space == "B":
        derived["B"] = summarize(samples, "B")
    gate = diagnostics_gate(rows)
    return {
        "prior_name": prior_name,
        "prior": describe(prior),
        "mu_prior": describe_mu(mu_prior),
        "s0_sq": model.s0_sq,
        "converged": gate.passed,
        "gate_offenders": gate.offenders,
        "rows": [_summary_row(n, s) for n, s in rows.items()],
        "derived": [_summary_row(n, s) for n, s in derived.items()],
        "acceptance": samples.acceptance,
    }, samples


def describe_mu(mu_prior):
    if isinstance(mu_prior, FlatMu):
        return {"family": "flat"}
    return {"family": "normal", "mean": mu_prior.mean, "precision": mu_prior.precision}


def run_pipeline(dataset: Dataset, config: AnalysisConfig, keep_samples=False) -> dict:
    """Run the configured analyses and return the report document (a plain dict).

    With ``keep_samples`` the raw ``ChainSamples`` per prior are returned
    alongside as ``(report, samples)``.
    """
    warnings = []
    estimates = []
    studies = []
    for record in dataset.records:
        est, notes = to_estimate(record)
        warnings.extend(notes)
        estimates.append(est)
        if record.arms is None:
            ci = (record.reported_effect.ci_lower, record.reported_effect.ci_upper)
        else:
            ci = variance_to_ci(est.pf, est.variance)
        studies.append({
            "label": est.label,
            "pf": est.pf,
            "variance": est.variance,
            "ci_lower": ci[0],
            "ci_upper": ci[1],
            "source": "arms" if record.arms is not None else "reported_effect",
            "provenance": dataset.provenance.get(est.label, ""),
        })

    report = {
        "schema_version": SCHEMA_VERSION,
        "engine_version": __version__,
        "dataset": {"sha256": dataset.sha256, "notes": dataset.notes, "studies": studies},
        "config": config.echo(),
        "warnings": warnings,
    }
    all_samples = {}

    if len(estimates) >= 2 and ("random" in config.analyses or "fixed" in config.analyses):
        report["heterogeneity"] = asdict(heterogeneity(estimates))
    else:
        report["heterogeneity"] = None
    if "fixed" in config.analyses:
        try:
            report["fixed"] = _pooled_dict(fixed_effect_pool(estimates))
        except DomainError as err:
            raise PipelineError(f"fixed: {err}") from err
    if "random" in config.analyses:
        try:
            het = report["heterogeneity"]
            tau2 = het["tau2_dl"] if het else 0.0
            report["random"] = _pooled_dict(random_effects_pool(estimates, tau2))
        except DomainError as err:
            raise PipelineError(f"random: {err}") from err
    if "bayes" in config.analyses:
        report["bayes"] = []
        s0_flagged = False
        for name in config.priors:
            try:
                result, samples = run_bayes(estimates, name, config)
            except (DomainError, SamplerError) as err:
                raise PipelineError(f"bayes[{name}]: {err}") from err
            report["bayes"].append(result)
            if keep_samples:
                all_samples[name] = samples
            if not result["converged"]:
                warnings.append(f"bayes[{name}]: not converged ({'; '.join(result['gate_offenders'])})")
            if not s0_flagged:
                s0 = result["s0_sq"]
                if abs(s0 - REFERENCE_S0_SQ) > S0_SQ_REL_TOL * REFERENCE_S0_SQ:
                    warnings.append(
                        f"s0_sq = {s0:.6g} deviates from the reference value {REFERENCE_S0_SQ} "
                        "computed from the original trial-level variances"
                    )
                s0_flagged = True
    report["warnings"] = report.pop("warnings")
    if keep_samples:
        return report, all_samples
    return report


def with_workers(config: AnalysisConfig, workers: int) -> AnalysisConfig:
    return replace(config, mcmc=replace(config.mcmc, workers=workers))
