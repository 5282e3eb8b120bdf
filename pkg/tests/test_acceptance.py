"""Acceptance criteria, each checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s``. One PASS/FAIL line per
criterion is printed as it runs and again in the terminal summary.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from pfmeta.classical import cochran_q, dl_tau2, fixed_effect_pool, random_effects_pool
from pfmeta.effect_size import EffectEstimate
from pfmeta.mcmc import chain_rng, draw_mu, draw_precision_gamma, draw_theta
from pfmeta.model import HierarchicalModel, harmonic_mean_s0sq, initial_state
from pfmeta.oracle import grid_posterior_moments, prior_normalization
from pfmeta.priors import PRESET_NAMES, GammaPrecision, RatioB, ScaledChiSqPrecision, make_prior

pytestmark = pytest.mark.slow

RESULTS = []
SEED = 20240101
KS_DRAWS = 100_000


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print("\n" + line)
    assert ok, line


def _analyze(out_dir):
    start = time.perf_counter()
    subprocess.run(
        [sys.executable, "-m", "pfmeta", "analyze", "builtin", "--seed", str(SEED), "--out", str(out_dir)],
        check=True, capture_output=True, text=True,
    )
    return time.perf_counter() - start


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run_a")
    elapsed = _analyze(out)
    report = json.loads((out / "report.json").read_text())
    return out, elapsed, report


@pytest.fixture(scope="module")
def bayes(default_run):
    return {run["prior_name"]: {r["parameter"]: r for r in run["rows"]} for run in default_run[2]["bayes"]}


@pytest.fixture(scope="module")
def grid(builtin_estimates):
    s0_sq = harmonic_mean_s0sq([e.variance for e in builtin_estimates])
    return {name: grid_posterior_moments(HierarchicalModel(builtin_estimates, make_prior(name, s0_sq)))
            for name in PRESET_NAMES}


def test_c01_oracle_mcmc_agreement(default_run, bayes, grid):
    _, elapsed, _ = default_run
    worst_mu = max(abs(bayes[p]["SPF"]["mean"] - grid[p].mu_mean) for p in PRESET_NAMES)
    worst_t2 = max(abs(bayes[p]["tau2"]["mean"] - grid[p].tau2_mean) for p in PRESET_NAMES)
    ok = len(bayes) == len(PRESET_NAMES) and worst_mu <= 0.005 and worst_t2 <= 0.01 and elapsed < 300
    record(1, ok, f"max|dE[mu]| = {worst_mu:.5f} (<= 0.005), max|dE[tau2]| = {worst_t2:.5f} (<= 0.01), "
                  f"runtime {elapsed:.1f} s (< 300) over {len(bayes)} priors")


def test_c02_pareto_target(bayes):
    spf, t2 = bayes["pareto"]["SPF"]["mean"], bayes["pareto"]["tau2"]["mean"]
    ok = abs(spf - (-0.4341)) <= 0.05 and abs(t2 - 0.0496) <= 0.05
    record(2, ok, f"pareto E[SPF] = {spf:.4f} (target -0.4341 +/- 0.05), E[tau2] = {t2:.4f} (0.0496 +/- 0.05)")


def test_c03_half_normal_target(bayes):
    spf = bayes["half_normal"]["SPF"]["mean"]
    t2_hn, t2_p = bayes["half_normal"]["tau2"]["mean"], bayes["pareto"]["tau2"]["mean"]
    ok = abs(spf - (-0.4328)) <= 0.05 and t2_hn > t2_p
    record(3, ok, f"half_normal E[SPF] = {spf:.4f} (target -0.4328 +/- 0.05), "
                  f"E[tau2] half_normal {t2_hn:.4f} > pareto {t2_p:.4f}")


def test_c04_prior_robustness(bayes):
    means = {p: bayes[p]["SPF"]["mean"] for p in PRESET_NAMES}
    excl = {p: bayes[p]["SPF"]["q975"] < 0 or bayes[p]["SPF"]["q025"] > 0 for p in PRESET_NAMES}
    ok = all(-0.48 <= m <= -0.38 for m in means.values()) and all(excl.values())
    record(4, ok, f"SPF means in [{min(means.values()):.4f}, {max(means.values()):.4f}] (within [-0.48, -0.38]); "
                  f"CrIs excluding 0: {sum(excl.values())}/{len(excl)}")


def test_c05_study_sign_pattern(bayes):
    bad = []
    for p in PRESET_NAMES:
        m = bayes[p]["Milsom"]
        if not m["q025"] <= 0 <= m["q975"]:
            bad.append(f"{p}:Milsom")
        for label in ("Koch", "Tewari", "Skold"):
            if not bayes[p][label]["q975"] < 0:
                bad.append(f"{p}:{label}")
    record(5, not bad, "Milsom CrI contains 0 and Koch/Tewari/Skold CrIs below 0 for all priors"
                       + (f"; violations {bad}" if bad else ""))


def test_c06_classical_exactness():
    est = [EffectEstimate("a", -0.2, 0.04), EffectEstimate("b", -0.6, 0.04)]
    fe = fixed_effect_pool(est)
    q, tau2 = cochran_q(est), dl_tau2(est)
    re = random_effects_pool(est, tau2)
    errs = [abs(fe.spf + 0.4), abs(fe.variance - 0.02), abs(q - 2.0), abs(tau2 - 0.04), abs(re.variance - 0.04)]
    record(6, max(errs) <= 1e-12, f"2-study fixture max abs error {max(errs):.2e} (<= 1e-12)")


def test_c07_fixed_effect_figure(builtin_estimates):
    fe = fixed_effect_pool(builtin_estimates)
    lo, hi = fe.ci
    ok = abs(fe.spf + 0.34) <= 0.03 and abs(lo + 0.48) <= 0.03 and abs(hi + 0.20) <= 0.03
    record(7, ok, f"fixed SPF {fe.spf:.4f} CI ({lo:.4f}, {hi:.4f}); target -0.34 (-0.48, -0.20) +/- 0.03")


def test_c08_conjugate_kernels(builtin_estimates):
    model = HierarchicalModel(builtin_estimates, GammaPrecision(0.1, 0.1))
    state = initial_state(model)
    y, v = model.y, model.v
    rng = chain_rng(SEED, 0)

    theta = np.array([draw_theta(rng, y, v, state.mu, state.tau2) for _ in range(KS_DRAWS)])
    prec = 1 / v + 1 / state.tau2
    mean = (y / v + state.mu / state.tau2) / prec
    ks_theta = max(stats.kstest(theta[:, i], stats.norm(mean[i], 1 / math.sqrt(prec[i])).cdf).statistic
                   for i in range(model.k))

    th = state.theta
    mu = np.array([draw_mu(rng, th, state.tau2) for _ in range(KS_DRAWS)])
    ks_mu = stats.kstest(mu, stats.norm(th.mean(), math.sqrt(state.tau2 / model.k)).cdf).statistic

    p = np.array([draw_precision_gamma(rng, th, state.mu, 0.1, 0.1) for _ in range(KS_DRAWS)])
    rate = 0.1 + 0.5 * float(np.sum((th - state.mu) ** 2))
    ks_gamma = stats.kstest(p, stats.gamma(0.1 + model.k / 2, scale=1 / rate).cdf).statistic

    worst = max(ks_theta, ks_mu, ks_gamma)
    record(8, worst < 0.01, f"KS theta {ks_theta:.4f}, mu {ks_mu:.4f}, gamma {ks_gamma:.4f} (< 0.01 at 1e5 draws)")


def test_c09_determinism(default_run, tmp_path):
    out_a = default_run[0]
    out_b = tmp_path / "run_b"
    _analyze(out_b)
    same_json = (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()
    same_svg = (out_a / "forest.svg").read_bytes() == (out_b / "forest.svg").read_bytes()
    record(9, same_json and same_svg, f"report.json identical: {same_json}, forest.svg identical: {same_svg}")


def test_c10_prior_properness(builtin_estimates):
    s0_sq = harmonic_mean_s0sq([e.variance for e in builtin_estimates])
    priors = {name: make_prior(name, s0_sq) for name in PRESET_NAMES}
    priors["ratio_b(2,5)"] = RatioB(2.0, 5.0, s0_sq)
    priors["chisq(d=4, scale=1)"] = ScaledChiSqPrecision(4.0)
    totals = {name: prior_normalization(p) for name, p in priors.items()}
    worst = max(abs(t - 1) for t in totals.values())
    record(10, worst <= 1e-3, f"max |integral - 1| = {worst:.2e} over {len(totals)} priors (<= 1e-3)")
