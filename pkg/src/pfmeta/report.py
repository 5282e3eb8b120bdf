"""Report emission: schema-versioned JSON and a plain-text table."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import DomainError

FORMATS = ("json", "text")


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _fmt(x, width=10, digits=4):
    return f"{x:>{width}.{digits}f}"


def report_text(report: dict) -> str:
    lines = [f"pfmeta report (schema {report['schema_version']})", ""]
    for key, title in (("fixed", "Fixed-effect pool"), ("random", "Random-effects pool (DerSimonian-Laird)")):
        pooled = report.get(key)
        if not pooled:
            continue
        lines.append(title)
        lines.append(f"{'SPF':>10} {'Var':>10} {'CI low':>10} {'CI high':>10} {'tau2':>10}")
        lines.append(
            " ".join([_fmt(pooled["spf"]), _fmt(pooled["variance"], digits=6), _fmt(pooled["ci_lower"]),
                      _fmt(pooled["ci_upper"]), _fmt(pooled["tau2"], digits=6)])
        )
        lines.append("")
    het = report.get("heterogeneity")
    if het:
        lines.append(
            f"Heterogeneity: Q = {het['q']:.4f} on {het['df']} df, "
            f"I^2 = {100 * het['i_squared']:.1f}%, DL tau2 = {het['tau2_dl']:.6f}"
        )
        lines.append("")
    for run in report.get("bayes", []):
        prior = run["prior"]
        params = ", ".join(f"{k}={v}" for k, v in prior.items() if k not in ("family", "space"))
        status = "converged" if run["converged"] else "NOT CONVERGED"
        lines.append(f"Bayesian hierarchical model, prior {run['prior_name']} "
                     f"[{prior['family']}({params}) on {prior['space']}] - {status}")
        lines.append(f"{'Parameter':<14}{'Mean':>10}{'SD':>10}{'2.5%':>10}{'97.5%':>10}{'ESS':>10}{'Rhat':>8}")
        for row in run["rows"] + run["derived"]:
            lines.append(
                f"{row['parameter']:<14}{row['mean']:>10.4f}{row['sd']:>10.4f}{row['q025']:>10.4f}"
                f"{row['q975']:>10.4f}{row['ess']:>10.0f}{row['rhat']:>8.4f}"
            )
        lines.append("")
    if report.get("warnings"):
        lines.append("Warnings:")
        lines.extend(f"  - {w}" for w in report["warnings"])
    return "\n".join(lines).rstrip() + "\n"


def emit_report(report: dict, path, format="json"):
    if format == "json":
        text = report_json(report)
    elif format == "text":
        text = report_text(report)
    else:
        raise DomainError(f"unknown report format {format!r}; choose from {FORMATS}")
    Path(path).write_text(text, encoding="utf-8")
    return path
