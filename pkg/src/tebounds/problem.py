"""Problem assembly: ingestion, configuration, and sensitivity grids.

A :class:`Problem` is the package's stand-in for a fully known joint
distribution of (outcome, treatment, covariates): a weighted list of
discrete covariate cells, the requested estimands, and a grid of
sensitivity points. Covariates are discrete by construction; continuous
covariates must be binned by the caller before ingestion.

Two input formats are supported: raw micro-data CSV (one row per
observation) and a cell-summary CSV (one row per covariate cell carrying
weight, propensity, and the two arm distributions as value/mass lists).
A problem ingested either way produces identical bound rows.
"""

from __future__ import annotations

import csv
import hashlib
import io
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import yaml

from .envelopes import Cell
from .errors import InputError, OverlapError
from .sensitivity import (
    CellSensitivity,
    GmsmBounds,
    cdep_from_conditional_c,
    cdep_from_gmsm,
    validate_sensitivity,
)
from .stepcdf import StepCdf
from .estimands import ALL_ESTIMANDS
from .validation import as_binary_treatment, as_outcome_array

DEFAULT_OVERLAP_EPSILON = 1e-6


@dataclass(frozen=True)
class EstimandRequest:
    """One estimand evaluation request with its frozen parameters."""

    name: str
    params: tuple[tuple[str, object], ...] = ()

    @classmethod
    def make(cls, name: str, **params) -> "EstimandRequest":
        name = str(name)
        if name not in ALL_ESTIMANDS:
            raise InputError(
                f"unknown estimand {name!r}; known: {', '.join(sorted(ALL_ESTIMANDS))}"
            )
        clean: dict[str, object] = {}
        for key, value in params.items():
            if value is None:
                continue
            if key in ("tau", "z", "y1", "y0"):
                clean[key] = float(value)
            elif key == "cell":
                clean[key] = str(value)
            elif key == "omega":
                if isinstance(value, dict):
                    clean[key] = tuple(sorted((str(k), float(v)) for k, v in value.items()))
                else:
                    clean[key] = float(value)
            else:
                raise InputError(f"unknown parameter {key!r} for estimand {name!r}")
        return cls(name, tuple(sorted(clean.items())))

    def param_dict(self) -> dict:
        out = {}
        for key, value in self.params:
            if key == "omega" and isinstance(value, tuple):
                out[key] = dict(value)
            else:
                out[key] = value
        return out

    def label(self) -> str:
        parts = []
        for key, value in self.params:
            if key == "omega" and isinstance(value, tuple):
                parts.append("omega=per-cell")
            else:
                parts.append(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}")
        return ";".join(parts)


@dataclass(frozen=True)
class SensitivitySpec:
    """Grid of sensitivity points in one of four parameterizations.

    kind "msm": points are odds-ratio levels L >= 1, mapped to bounds
    (1/L, L). kind "gmsm": points are (lambda_lo, lambda_hi) pairs.
    kind "conditional_c": points are additive half-widths c >= 0.
    kind "raw": a single point giving (c_lo, c_hi) per cell id.
    """

    kind: str
    points: tuple = ()

    def __post_init__(self):
        if self.kind not in ("msm", "gmsm", "conditional_c", "raw"):
            raise InputError(f"unknown sensitivity kind {self.kind!r}")
        if len(self.points) == 0:
            raise InputError("sensitivity grid is empty")

    @classmethod
    def msm(cls, lambdas) -> "SensitivitySpec":
        pts = tuple(float(v) for v in lambdas)
        if any(v < 1.0 for v in pts):
            raise InputError("msm grid values must be at least 1")
        return cls("msm", pts)

    @classmethod
    def gmsm(cls, pairs) -> "SensitivitySpec":
        return cls("gmsm", tuple((float(a), float(b)) for a, b in pairs))

    @classmethod
    def conditional_c(cls, cs) -> "SensitivitySpec":
        pts = tuple(float(v) for v in cs)
        if any(v < 0.0 for v in pts):
            raise InputError("conditional_c grid values must be nonnegative")
        return cls("conditional_c", pts)

    @classmethod
    def raw(cls, per_cell: dict) -> "SensitivitySpec":
        point = tuple(sorted((str(k), (float(v[0]), float(v[1]))) for k, v in per_cell.items()))
        return cls("raw", (point,))

    def cell_sensitivity(self, index: int, cell: Cell) -> CellSensitivity:
        point = self.points[index]
        if self.kind == "msm":
            return cdep_from_gmsm(cell.p1, GmsmBounds.symmetric(point))
        if self.kind == "gmsm":
            return cdep_from_gmsm(cell.p1, GmsmBounds(point[0], point[1]))
        if self.kind == "conditional_c":
            return cdep_from_conditional_c(cell.p1, point)
        mapping = dict(point)
        if cell.id not in mapping:
            raise InputError(f"raw sensitivity has no bounds for cell {cell.id!r}")
        c_lo, c_hi = mapping[cell.id]
        msg = validate_sensitivity(cell.p1, c_lo, c_hi)
        if msg is not None:
            raise InputError(f"cell {cell.id!r}: invalid sensitivity: {msg}")
        return CellSensitivity(c_lo, c_hi)

    def point_label(self, index: int) -> str:
        point = self.points[index]
        if self.kind == "msm":
            return f"lambda={point:.6g}"
        if self.kind == "gmsm":
            return f"lambda=[{point[0]:.6g},{point[1]:.6g}]"
        if self.kind == "conditional_c":
            return f"c={point:.6g}"
        return "raw"

    def lambda_pair(self, index: int) -> tuple[float, float] | None:
        """Odds-ratio bounds for the point, when cell-independent."""
        point = self.points[index]
        if self.kind == "msm":
            return (1.0 / point, point)
        if self.kind == "gmsm":
            return (point[0], point[1])
        return None


@dataclass(frozen=True)
class Problem:
    """Cells plus estimand requests plus a sensitivity grid."""

    cells: tuple[Cell, ...]
    sensitivity: SensitivitySpec
    requests: tuple[EstimandRequest, ...] = ()
    overlap_epsilon: float = DEFAULT_OVERLAP_EPSILON
    source_digest: str = ""
    config_echo: str = ""
    dropped_cells: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.cells) == 0:
            raise InputError("problem has no cells")
        ids = [c.id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate cell ids")
        if list(ids) != sorted(ids):
            object.__setattr__(self, "cells", tuple(sorted(self.cells, key=lambda c: c.id)))
        total = sum(c.weight for c in self.cells)
        if abs(total - 1.0) > 1e-9:
            raise InputError(f"cell weights sum to {total!r}, not 1")
        violations = _overlap_violations(self.cells, self.overlap_epsilon)
        if violations:
            raise OverlapError("overlap violation in cells: " + "; ".join(violations))

    def cell(self, cell_id: str) -> Cell:
        for c in self.cells:
            if c.id == cell_id:
                return c
        raise InputError(f"no cell with id {cell_id!r}")


def _overlap_violations(cells, epsilon: float) -> list[str]:
    eps = max(float(epsilon), 1e-12)
    out = []
    for c in cells:
        if not eps <= c.p1 <= 1.0 - eps:
            out.append(f"{c.id} (p1={c.p1:.6g})")
    return out


# ---------------------------------------------------------------------------
# micro-data ingestion


def _file_digest(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def cells_from_arrays(
    outcome,
    treatment,
    covariate_keys: list[tuple[str, ...]],
    covariate_names: list[str] | None = None,
    epsilon: float = DEFAULT_OVERLAP_EPSILON,
    drop_nonoverlap: bool = False,
) -> tuple[tuple[Cell, ...], tuple[str, ...]]:
    """Group observations into cells; returns (cells, dropped cell ids).

    Cells whose within-cell treated share violates the overlap requirement
    abort ingestion, unless ``drop_nonoverlap`` is set, in which case they
    are removed and the remaining cells reweighted.
    """
    y = as_outcome_array(outcome)
    x = as_binary_treatment(treatment)
    if len(covariate_keys) != y.size or x.size != y.size:
        raise InputError("outcome, treatment, and covariates must have equal length")

    names = covariate_names or [f"w{i + 1}" for i in range(len(covariate_keys[0]))]
    groups: dict[tuple[str, ...], list[int]] = defaultdict(list)
    for i, key in enumerate(covariate_keys):
        groups[key].append(i)

    raw_cells = []
    bad_ids: list[str] = []
    bad_msgs: list[str] = []
    eps = max(float(epsilon), 1e-12)
    for key in sorted(groups):
        idx = np.array(groups[key])
        cid = "|".join(f"{n}={v}" for n, v in zip(names, key))
        n_cell = idx.size
        treated = idx[x[idx] == 1]
        control = idx[x[idx] == 0]
        p1 = treated.size / n_cell
        if treated.size == 0 or control.size == 0 or not eps <= p1 <= 1.0 - eps:
            bad_ids.append(cid)
            bad_msgs.append(f"{cid} (p1={p1:.6g})")
            continue
        raw_cells.append(
            (cid, n_cell, p1, StepCdf.from_samples(y[treated]), StepCdf.from_samples(y[control]))
        )

    if bad_ids and not drop_nonoverlap:
        raise OverlapError("overlap violation in cells: " + "; ".join(bad_msgs))
    if not raw_cells:
        raise OverlapError("no cells satisfy the overlap requirement")
    total = sum(n for _, n, _, _, _ in raw_cells)
    cells = tuple(
        Cell(cid, n / total, p1, ft, fc) for cid, n, p1, ft, fc in raw_cells
    )
    return cells, tuple(bad_ids)


def ingest_micro_csv(
    path: str,
    outcome_col: str,
    treatment_col: str,
    covariate_cols: list[str],
    epsilon: float = DEFAULT_OVERLAP_EPSILON,
    drop_nonoverlap: bool = False,
) -> tuple[tuple[Cell, ...], str, tuple[str, ...]]:
    """Read observation-level CSV into cells; returns (cells, digest, dropped)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path!r}: {exc}")
    digest = _file_digest(raw)
    reader = csv.DictReader(io.StringIO(raw.decode("utf-8")))
    if reader.fieldnames is None:
        raise InputError(f"{path!r} is empty")
    missing = [
        c
        for c in [outcome_col, treatment_col, *covariate_cols]
        if c not in reader.fieldnames
    ]
    if missing:
        raise InputError(f"missing columns in {path!r}: {', '.join(missing)}")
    outcomes, treatments, keys = [], [], []
    for row in reader:
        try:
            outcomes.append(float(row[outcome_col]))
        except ValueError:
            raise InputError(f"non-numeric outcome value {row[outcome_col]!r}")
        treatments.append(row[treatment_col])
        keys.append(tuple(row[c] for c in covariate_cols) if covariate_cols else ("all",))
    if not outcomes:
        raise InputError(f"{path!r} has no data rows")
    cells, dropped = cells_from_arrays(
        outcomes,
        treatments,
        keys,
        covariate_names=list(covariate_cols) if covariate_cols else ["w"],
        epsilon=epsilon,
        drop_nonoverlap=drop_nonoverlap,
    )
    return cells, digest, dropped


# ---------------------------------------------------------------------------
# cell-summary format

_SUMMARY_COLUMNS = ["cell", "weight", "p1", "y1_support", "y1_mass", "y0_support", "y0_mass"]


def write_cell_summary(cells, path: str) -> None:
    """Serialize cells as one CSV row per cell with full float precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SUMMARY_COLUMNS)
        for c in cells:
            writer.writerow(
                [
                    c.id,
                    repr(float(c.weight)),
                    repr(float(c.p1)),
                    ";".join(repr(float(v)) for v in c.f_treated.support),
                    ";".join(repr(float(v)) for v in c.f_treated.pmf),
                    ";".join(repr(float(v)) for v in c.f_control.support),
                    ";".join(repr(float(v)) for v in c.f_control.pmf),
                ]
            )


def ingest_cell_summary_csv(
    path: str,
    epsilon: float = DEFAULT_OVERLAP_EPSILON,
    drop_nonoverlap: bool = False,
) -> tuple[tuple[Cell, ...], str, tuple[str, ...]]:
    """Read a cell-summary CSV; returns (cells, digest, dropped)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path!r}: {exc}")
    digest = _file_digest(raw)
    reader = csv.DictReader(io.StringIO(raw.decode("utf-8")))
    if reader.fieldnames is None or any(c not in reader.fieldnames for c in _SUMMARY_COLUMNS):
        raise InputError(
            f"cell-summary file {path!r} must have columns {', '.join(_SUMMARY_COLUMNS)}"
        )

    def floats(s: str) -> list[float]:
        return [float(v) for v in s.split(";") if v != ""]

    rows = []
    for row in reader:
        try:
            rows.append(
                (
                    row["cell"],
                    float(row["weight"]),
                    float(row["p1"]),
                    StepCdf.from_pmf(floats(row["y1_support"]), floats(row["y1_mass"])),
                    StepCdf.from_pmf(floats(row["y0_support"]), floats(row["y0_mass"])),
                )
            )
        except ValueError as exc:
            raise InputError(f"bad cell-summary row {row.get('cell')!r}: {exc}")
    if not rows:
        raise InputError(f"{path!r} has no cells")

    eps = max(float(epsilon), 1e-12)
    kept, bad_ids, bad_msgs = [], [], []
    for cid, weight, p1, ft, fc in rows:
        if not eps <= p1 <= 1.0 - eps:
            bad_ids.append(cid)
            bad_msgs.append(f"{cid} (p1={p1:.6g})")
            continue
        kept.append((cid, weight, p1, ft, fc))
    if bad_ids and not drop_nonoverlap:
        raise OverlapError("overlap violation in cells: " + "; ".join(bad_msgs))
    if not kept:
        raise OverlapError("no cells satisfy the overlap requirement")
    total = sum(w for _, w, _, _, _ in kept)
    if total <= 0:
        raise InputError("cell weights must be positive")
    cells = tuple(Cell(cid, w / total, p1, ft, fc) for cid, w, p1, ft, fc in kept)
    return cells, digest, tuple(bad_ids)


# ---------------------------------------------------------------------------
# configuration


def load_config(path: str) -> dict:
    try:
        with open(path, "r") as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path!r}: {exc}")
    except yaml.YAMLError as exc:
        raise InputError(f"config {path!r} is not valid YAML: {exc}")
    if not isinstance(cfg, dict):
        raise InputError("config must be a mapping at the top level")
    return cfg


def sensitivity_from_config(section) -> SensitivitySpec:
    if not isinstance(section, dict) or "kind" not in section:
        raise InputError("sensitivity config must be a mapping with a 'kind' key")
    kind = section["kind"]
    if kind == "msm":
        return SensitivitySpec.msm(section.get("grid", [1.0]))
    if kind == "gmsm":
        return SensitivitySpec.gmsm(section.get("grid", [[1.0, 1.0]]))
    if kind == "conditional_c":
        return SensitivitySpec.conditional_c(section.get("grid", [0.0]))
    if kind == "raw":
        cells = section.get("cells")
        if not isinstance(cells, dict):
            raise InputError("raw sensitivity config needs a 'cells' mapping")
        return SensitivitySpec.raw(cells)
    raise InputError(f"unknown sensitivity kind {kind!r}")


def requests_from_config(section) -> tuple[EstimandRequest, ...]:
    if section is None:
        return ()
    if not isinstance(section, list):
        raise InputError("estimands config must be a list")
    out = []
    for item in section:
        if isinstance(item, str):
            out.append(EstimandRequest.make(item))
        elif isinstance(item, dict) and "name" in item:
            params = {k: v for k, v in item.items() if k != "name"}
            out.append(EstimandRequest.make(item["name"], **params))
        else:
            raise InputError(f"bad estimand entry {item!r}")
    return tuple(out)


def problem_from_config(
    config: dict,
    data_path: str | None = None,
    cells_path: str | None = None,
    epsilon: float | None = None,
    drop_nonoverlap: bool | None = None,
) -> Problem:
    """Assemble a problem from a parsed config plus one input file."""
    import json

    eps = float(
        epsilon
        if epsilon is not None
        else config.get("overlap_epsilon", DEFAULT_OVERLAP_EPSILON)
    )
    drop = bool(
        drop_nonoverlap
        if drop_nonoverlap is not None
        else config.get("drop_nonoverlap", False)
    )
    if (data_path is None) == (cells_path is None):
        raise InputError("provide exactly one of a micro-data file or a cell-summary file")
    if data_path is not None:
        columns = config.get("columns")
        if not isinstance(columns, dict) or "outcome" not in columns or "treatment" not in columns:
            raise InputError("config needs a 'columns' mapping with outcome and treatment")
        covs = columns.get("covariates", [])
        if isinstance(covs, str):
            covs = [covs]
        cells, digest, dropped = ingest_micro_csv(
            data_path,
            str(columns["outcome"]),
            str(columns["treatment"]),
            [str(c) for c in covs],
            epsilon=eps,
            drop_nonoverlap=drop,
        )
    else:
        cells, digest, dropped = ingest_cell_summary_csv(
            cells_path, epsilon=eps, drop_nonoverlap=drop
        )
    return Problem(
        cells=cells,
        sensitivity=sensitivity_from_config(config.get("sensitivity", {"kind": "msm", "grid": [1.0]})),
        requests=requests_from_config(config.get("estimands")),
        overlap_epsilon=eps,
        source_digest=digest,
        config_echo=json.dumps(config, sort_keys=True, default=str),
        dropped_cells=dropped,
    )
