"""Command-line entry point: ``pfmeta analyze | plot | oracle``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import DomainError
from .forest import default_analysis, emit_forest_svg
from .io import load_builtin_dataset, parse_config, parse_dataset
from .mcmc import dump_samples
from .model import FlatMu, HierarchicalModel, NormalMu, harmonic_mean_s0sq
from .effect_size import to_estimate
from .oracle import GridSpec, grid_posterior_moments
from .pipeline import PipelineError, build_config, default_workers, run_pipeline
from .priors import PRESET_NAMES, make_prior
from .report import emit_report, load_report


def _load_dataset(path):
    if path == "builtin":
        return load_builtin_dataset()
    return parse_dataset(path)


def cmd_analyze(args):
    values = parse_config(args.config) if args.config else {}
    config = build_config(values, seed=args.seed, prior=args.prior, out_dir=args.out)
    workers = args.workers if args.workers is not None else default_workers(config.mcmc.chains)
    config = build_config(values, seed=args.seed, prior=args.prior, out_dir=args.out, workers=workers)
    dataset = _load_dataset(args.dataset)
    report, samples = run_pipeline(dataset, config, keep_samples=True)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(report, out / "report.json", "json")
    emit_report(report, out / "report.txt", "text")
    emit_forest_svg(report, out / "forest.svg")
    if args.dump_samples:
        for name, s in samples.items():
            dump_samples(s, out / f"samples_{name}.csv")
    print((out / "report.txt").read_text(encoding="utf-8"), end="")
    print(f"wrote {out / 'report.json'}, {out / 'report.txt'}, {out / 'forest.svg'}")
    return 0


def cmd_plot(args):
    report = load_report(args.report)
    emit_forest_svg(report, args.out, args.analysis or default_analysis(report))
    print(f"wrote {args.out}")
    return 0


def cmd_oracle(args):
    values = parse_config(args.config) if args.config else {}
    config = build_config(values)
    dataset = _load_dataset(args.dataset)
    estimates = [to_estimate(r)[0] for r in dataset.records]
    s0_sq = harmonic_mean_s0sq([e.variance for e in estimates])
    prior = make_prior(args.prior, s0_sq, d=config.d, beta1=config.beta1, beta2=config.beta2,
                       gamma_a=config.gamma_a, gamma_b=config.gamma_b)
    mu_prior = NormalMu() if config.mu_prior == "normal" else FlatMu()
    model = HierarchicalModel(estimates, prior, mu_prior)
    grid = GridSpec(args.mu_lo, args.mu_hi, args.n, args.tau_lo, args.tau_hi, args.n)
    m = grid_posterior_moments(model, grid)
    print(f"prior {args.prior}: {prior}")
    print(f"s0_sq = {s0_sq:.6g}; log normalizing constant = {m.log_normalizer:.6f}")
    print(f"{'Parameter':<14}{'Mean':>10}{'SD':>10}")
    print(f"{'SPF':<14}{m.mu_mean:>10.4f}{m.mu_sd:>10.4f}")
    print(f"{'tau2':<14}{m.tau2_mean:>10.4f}{m.tau2_sd:>10.4f}")
    for label, mean, sd in zip(m.labels, m.theta_mean, m.theta_sd):
        print(f"{label:<14}{mean:>10.4f}{sd:>10.4f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="pfmeta", description="Prevented-fraction meta-analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the configured analyses and write reports")
    p.add_argument("dataset", help="dataset CSV, or 'builtin' for the bundled 9-study dataset")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--prior", help=f"prior preset(s), comma separated, or 'all': {', '.join(PRESET_NAMES)}")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="processes for running chains (output is unaffected)")
    p.add_argument("--dump-samples", action="store_true", help="also write per-prior sample CSVs")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plot", help="draw a forest plot from a report JSON")
    p.add_argument("report")
    p.add_argument("--out", required=True)
    p.add_argument("--analysis", help="fixed, random, or bayes:<prior>")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("oracle", help="posterior moments by grid quadrature")
    p.add_argument("dataset")
    p.add_argument("--prior", required=True)
    p.add_argument("--config")
    p.add_argument("--mu-lo", type=float, default=GridSpec.mu_lo)
    p.add_argument("--mu-hi", type=float, default=GridSpec.mu_hi)
    p.add_argument("--tau-lo", type=float, default=GridSpec.tau_lo)
    p.add_argument("--tau-hi", type=float, default=GridSpec.tau_hi)
    p.add_argument("-n", type=int, default=GridSpec.n_mu, help="points per grid axis")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, PipelineError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
