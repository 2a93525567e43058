"""Grid evaluation, breakdown search, and deterministic report emission."""

from __future__ import annotations

from dataclasses import dataclass

from ._version import __version__
from .envelopes import compute_envelopes
from .errors import InputError, InternalError
from .estimands import COPULA_FREE, BoundInterval, compute_estimand
from .problem import EstimandRequest, Problem, SensitivitySpec


def _fmt(value: float) -> str:
    return f"{value:.12g}"


@dataclass(frozen=True)
class ReportRow:
    estimand: str
    params: str
    grid_index: int
    grid_label: str
    lambda_lo: float | None
    lambda_hi: float | None
    c_cells: str
    lo: float
    hi: float
    flags: str

    def sort_key(self):
        return (self.estimand, self.params, self.grid_index)


@dataclass(frozen=True)
class Report:
    rows: tuple[ReportRow, ...]
    provenance: tuple[tuple[str, str], ...]
    breakdowns: tuple[tuple[str, float | None], ...] = ()

    HEADER = "estimand,params,grid,lambda_lo,lambda_hi,c_cells,lo,hi,flags"

    def row_lines(self) -> list[str]:
        out = []
        for r in self.rows:
            out.append(
                ",".join(
                    [
                        r.estimand,
                        r.params,
                        r.grid_label,
                        _fmt(r.lambda_lo) if r.lambda_lo is not None else "",
                        _fmt(r.lambda_hi) if r.lambda_hi is not None else "",
                        r.c_cells,
                        _fmt(r.lo),
                        _fmt(r.hi),
                        r.flags,
                    ]
                )
            )
        return out

    def _breakdown_lines(self) -> list[str]:
        return [
            f"breakdown {label}: {_fmt(value) if value is not None else 'not-reached'}"
            for label, value in self.breakdowns
        ]

    def to_csv(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.provenance]
        lines.extend(f"# {line}" for line in self._breakdown_lines())
        lines.append(self.HEADER)
        lines.extend(self.row_lines())
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = ["bound report", "============"]
        for k, v in self.provenance:
            lines.append(f"{k}: {v}")
        lines.extend(self._breakdown_lines())
        lines.append("")
        header = f"{'estimand':<10} {'params':<22} {'grid':<22} {'lo':>16} {'hi':>16} flags"
        lines.append(header)
        lines.append("-" * len(header))
        for r in self.rows:
            lines.append(
                f"{r.estimand:<10} {r.params:<22} {r.grid_label:<22}"
                f" {_fmt(r.lo):>16} {_fmt(r.hi):>16} {r.flags}"
            )
        return "\n".join(lines) + "\n"


def _cell_sens_digest(sens_by_cell) -> str:
    joined = "|".join(f"{_fmt(s.c_lo)}:{_fmt(s.c_hi)}" for s in sens_by_cell)
    if len(sens_by_cell) <= 6:
        return joined
    import hashlib

    return f"sha256:{hashlib.sha256(joined.encode()).hexdigest()[:12]}"


def _envelopes_at(problem: Problem, index: int):
    sens = [problem.sensitivity.cell_sensitivity(index, c) for c in problem.cells]
    envs = [compute_envelopes(c, s) for c, s in zip(problem.cells, sens)]
    return sens, envs


def run(problem: Problem, breakdown_target: float | None = None) -> Report:
    """Evaluate every requested estimand at every sensitivity grid point.

    Rows are sorted by (estimand, params, grid index) and numbers printed
    with 12 significant digits, so identical inputs yield byte-identical
    reports. When ``breakdown_target`` is given, the report also carries the
    smallest symmetric odds level covering that target for every copula-free
    requested estimand.
    """
    rows = []
    for gi in range(len(problem.sensitivity.points)):
        sens, envs = _envelopes_at(problem, gi)
        lam = problem.sensitivity.lambda_pair(gi)
        digest = _cell_sens_digest(sens)
        for req in problem.requests:
            interval = compute_estimand(req.name, envs, req.param_dict())
            if interval.lo > interval.hi + 1e-12:
                raise InternalError(
                    f"inverted interval for {req.name}: [{interval.lo}, {interval.hi}]"
                )
            flags = list(interval.flags)
            if problem.dropped_cells:
                flags.append("dropped-cells")
            rows.append(
                ReportRow(
                    estimand=req.name,
                    params=req.label(),
                    grid_index=gi,
                    grid_label=problem.sensitivity.point_label(gi),
                    lambda_lo=lam[0] if lam else None,
                    lambda_hi=lam[1] if lam else None,
                    c_cells=digest,
                    lo=interval.lo,
                    hi=interval.hi,
                    flags=";".join(flags),
                )
            )
    rows.sort(key=ReportRow.sort_key)
    provenance = (
        ("tebounds-version", __version__),
        ("input-sha256", problem.source_digest or "n/a"),
        ("config", problem.config_echo or "n/a"),
        ("cells", str(len(problem.cells))),
        ("dropped-cells", ",".join(problem.dropped_cells) or "none"),
    )
    breakdowns = []
    if breakdown_target is not None:
        for req in problem.requests:
            if req.name not in COPULA_FREE:
                continue
            label = req.name if not req.label() else f"{req.name};{req.label()}"
            breakdowns.append((label, breakdown(problem, req, target=breakdown_target)))
        breakdowns.sort(key=lambda item: item[0])
    return Report(tuple(rows), provenance, tuple(breakdowns))


def evaluate_at_lambda(
    problem: Problem, request: EstimandRequest, lam: float
) -> BoundInterval:
    """Evaluate one estimand under symmetric odds bounds (1/lam, lam)."""
    tmp = Problem(
        cells=problem.cells,
        sensitivity=SensitivitySpec.msm([lam]),
        requests=(),
        overlap_epsilon=problem.overlap_epsilon,
    )
    _, envs = _envelopes_at(tmp, 0)
    return compute_estimand(request.name, envs, request.param_dict())


def breakdown(
    problem: Problem,
    request: EstimandRequest,
    target: float = 0.0,
    lambda_max: float = 100.0,
    tol: float = 1e-6,
) -> float | None:
    """Smallest odds-ratio level at which the interval covers ``target``.

    Exists because intervals are nested in the sensitivity level, so
    coverage of the target is monotone and bisection applies. Returns None
    if the target is not covered even at ``lambda_max``. Copula-dependent
    estimands are rejected.
    """
    if request.name not in COPULA_FREE:
        raise InputError(
            f"breakdown is defined for copula-free estimands, not {request.name!r}"
        )
    if lambda_max < 1.0:
        raise InputError("lambda_max must be at least 1")

    def covered(lam: float) -> bool:
        b = evaluate_at_lambda(problem, request, lam)
        return b.lo - 1e-12 <= target <= b.hi + 1e-12

    if covered(1.0):
        return 1.0
    if not covered(lambda_max):
        return None
    lo, hi = 1.0, lambda_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if covered(mid):
            hi = mid
        else:
            lo = mid
    return hi
