"""Dataset and config file parsing.

Dataset CSV: UTF-8, mandatory header, ``#`` comment lines allowed. Comments
before the header are file notes; comments between rows attach to the next
row as its provenance. Arm columns (``mean_t .. n_c``) and effect columns
(``pf, ci_lower, ci_upper``) are each optional as a group.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .effect_size import ArmStats, ReportedEffect, StudyRecord
from .errors import DomainError

COLUMNS = ("label", "mean_t", "sd_t", "n_t", "mean_c", "sd_c", "n_c", "pf", "ci_lower", "ci_upper")
ARM_COLUMNS = COLUMNS[1:7]
EFFECT_COLUMNS = COLUMNS[7:]

CONFIG_KEYS = (
    "analyses",
    "prior.family",
    "prior.d",
    "prior.beta1",
    "prior.beta2",
    "prior.gamma_a",
    "prior.gamma_b",
    "mu_prior",
    "chains",
    "iterations",
    "burn_in",
    "thin",
    "seed",
    "out_dir",
)

BUILTIN_DATASET = "fluoride_varnish.csv"


class DatasetError(DomainError):
    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.column = column


@dataclass
class Dataset:
    records: list[StudyRecord]
    provenance: dict[str, str] = field(default_factory=dict)
    notes: str = ""
    sha256: str = ""

    def __post_init__(self):
        if not self.records:
            raise DomainError("dataset has no studies")
        labels = [r.label for r in self.records]
        if len(set(labels)) != len(labels):
            raise DomainError("dataset labels must be unique")

    @property
    def labels(self):
        return [r.label for r in self.records]


def _number(text, line, column, integer=False):
    try:
        if integer:
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        return float(text)
    except ValueError:
        raise DatasetError(f"cannot parse {text!r} as a number", line, column) from None


def parse_dataset_text(text: str) -> Dataset:
    notes = []
    pending = []
    provenance = {}
    records = []
    header = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comment = stripped[1:].strip()
            (pending if header is not None else notes).append(comment)
            continue
        cells = [c.strip() for c in next(csv.reader([raw]))]
        if header is None:
            header = cells
            missing = [c for c in COLUMNS if c not in header]
            unknown = [c for c in header if c not in COLUMNS]
            if unknown:
                raise DatasetError(f"unknown columns {unknown}", lineno)
            if "label" in missing:
                raise DatasetError("header must contain 'label'", lineno)
            continue
        if len(cells) != len(header):
            raise DatasetError(f"expected {len(header)} fields, got {len(cells)}", lineno)
        row = dict(zip(header, cells))
        label = row["label"]
        if not label:
            raise DatasetError("empty label", lineno, "label")
        if label in seen:
            raise DatasetError(f"duplicate label {label!r}", lineno, "label")
        seen.add(label)

        arm_cells = [row.get(c, "") for c in ARM_COLUMNS]
        eff_cells = [row.get(c, "") for c in EFFECT_COLUMNS]
        arms = effect = None
        if any(arm_cells):
            for c, value in zip(ARM_COLUMNS, arm_cells):
                if not value:
                    raise DatasetError("arm columns must be filled as a group", lineno, c)
            mt, sdt, nt, mc, sdc, nc = (
                _number(row[c], lineno, c, integer=c.startswith("n_")) for c in ARM_COLUMNS
            )
            for c, value in (("sd_t", sdt), ("sd_c", sdc)):
                if not value > 0:
                    raise DatasetError(f"study {label!r}: sd must be > 0", lineno, c)
            for c, value in (("n_t", nt), ("n_c", nc)):
                if value < 2:
                    raise DatasetError(f"study {label!r}: n must be >= 2", lineno, c)
            if not mc > 0:
                raise DatasetError(f"study {label!r}: control mean must be > 0", lineno, "mean_c")
            arms = (ArmStats(mt, sdt, nt), ArmStats(mc, sdc, nc))
        if any(eff_cells):
            for c, value in zip(EFFECT_COLUMNS, eff_cells):
                if not value:
                    raise DatasetError("effect columns must be filled as a group", lineno, c)
            pf, lo, hi = (_number(row[c], lineno, c) for c in EFFECT_COLUMNS)
            if not lo < hi:
                raise DatasetError(f"study {label!r}: ci_lower must be < ci_upper", lineno, "ci_lower")
            effect = ReportedEffect(pf, lo, hi)
        if arms is None and effect is None:
            raise DatasetError(f"study {label!r}: needs arm or effect columns", lineno)
        try:
            records.append(StudyRecord(label, arms, effect))
        except DomainError as err:
            raise DatasetError(str(err), lineno) from None
        provenance[label] = " ".join(pending)
        pending = []
    if header is None:
        raise DatasetError("missing header row")
    if not records:
        raise DatasetError("no data rows")
    return Dataset(
        records,
        provenance=provenance,
        notes=" ".join(notes),
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )


def parse_dataset(path) -> Dataset:
    return parse_dataset_text(Path(path).read_text(encoding="utf-8"))


def builtin_dataset_path():
    return resources.files("pfmeta.data").joinpath(BUILTIN_DATASET)


def load_builtin_dataset() -> Dataset:
    return parse_dataset_text(builtin_dataset_path().read_text(encoding="utf-8"))


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` config; ``#`` starts a comment line."""
    values = {}
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise DomainError(f"config line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def parse_config(path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
