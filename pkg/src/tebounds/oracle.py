"""Brute-force ground truth on small instances.

Independent of the closed-form envelope machinery, these routines search the
raw feasible set: latent treatment probabilities confined to [c_lo, c_hi]
whose implied counterfactual distribution is a probability distribution, or
couplings of two fixed marginals. They exist to certify the closed forms on
instances small enough to enumerate.

The score search enumerates grid values on all but one support point and
solves the remaining score exactly from the normalization constraint, so
every profile it keeps is exactly feasible. The extremes of cdf values and
means over the feasible set are linear programs over a box intersected with
a hyperplane once rewritten in implied-mass space, so their optima have at
most one score off the box corners; the solved coordinate covers exactly
that pattern and the search attains the true endpoints at any resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelopes import Cell, CellEnvelopes, SwitchingScore, compute_envelopes, switching_score
from .errors import InputError
from .sensitivity import CellSensitivity, validate_sensitivity
from .stepcdf import StepCdf

#: largest per-arm support the score enumeration accepts
MAX_SUPPORT = 6
#: enumeration size guard: (resolution + 1) ** (support - 1) per pass
MAX_GRID_POINTS = 2_000_000


@dataclass(frozen=True)
class LatentScoreGrid:
    """Candidate score values c_lo + k (c_hi - c_lo) / n for k = 0..n."""

    values: np.ndarray
    c_lo: float
    c_hi: float
    resolution: int


def score_grid(sens: CellSensitivity, resolution: int) -> LatentScoreGrid:
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    values = np.linspace(sens.c_lo, sens.c_hi, resolution + 1)
    values.setflags(write=False)
    return LatentScoreGrid(values, sens.c_lo, sens.c_hi, resolution)


def _effective_box(cell: Cell, sens: CellSensitivity, arm: int):
    """Observed cdf, scale p_x, and denominator box for one arm.

    The implied counterfactual mass at support point i is
    pmf_i * p_x / d_i, where d_i is the latent score for the treated arm
    and one minus it for the control arm.
    """
    if arm == 1:
        return cell.f_treated, cell.p1, sens.c_lo, sens.c_hi
    return cell.f_control, 1.0 - cell.p1, 1.0 - sens.c_hi, 1.0 - sens.c_lo


def _feasible_masses(obs: StepCdf, scale: float, lo: float, hi: float, resolution: int):
    """Yield (masses, valid) arrays of exactly feasible implied pmf profiles.

    masses has shape (m, N): one row per support point, N enumerated
    profiles. Iterates one pass per solved coordinate.
    """
    m = obs.support.size
    if m > MAX_SUPPORT:
        raise InputError(
            f"support size {m} exceeds enumeration limit {MAX_SUPPORT}"
        )
    amounts = obs.pmf * scale
    grid = np.linspace(lo, hi, resolution + 1)
    if m == 1:
        # the only candidate is the exactly solved score
        mass = np.array([[1.0]])
        valid = np.array([lo - 1e-12 <= amounts[0] <= hi + 1e-12])
        yield mass, valid
        return
    n_inner = (resolution + 1) ** (m - 1)
    if n_inner > MAX_GRID_POINTS:
        raise InputError(
            f"enumeration of {n_inner} profiles exceeds limit {MAX_GRID_POINTS};"
            " lower the resolution or the support size"
        )
    shape = (resolution + 1,) * (m - 1)
    for solved in range(m):
        others = [i for i in range(m) if i != solved]
        comps = np.empty((m, n_inner))
        rest = np.zeros(shape)
        for axis, i in enumerate(others):
            ax_shape = [1] * (m - 1)
            ax_shape[axis] = resolution + 1
            fi = (amounts[i] / grid).reshape(ax_shape)
            rest = rest + fi
            comps[i] = np.broadcast_to(fi, shape).ravel()
        r = 1.0 - rest.ravel()
        with np.errstate(divide="ignore", invalid="ignore"):
            d_solved = np.where(r > 0.0, amounts[solved] / r, np.inf)
        valid = (r > 0.0) & (d_solved >= lo - 1e-12) & (d_solved <= hi + 1e-12)
        comps[solved] = r
        yield comps, valid


def attainable_cdf_profile(
    cell: Cell, sens: CellSensitivity, arm: int, resolution: int = 200
) -> list[tuple[float, float, float]]:
    """Attainable range of the counterfactual cdf at every support point.

    Returns [(y, lo, hi)] for each observed support point of the arm.
    """
    _check_sens(cell, sens)
    obs, scale, lo_d, hi_d = _effective_box(cell, sens, arm)
    m = obs.support.size
    lo = np.full(m, np.inf)
    hi = np.full(m, -np.inf)
    any_valid = False
    for masses, valid in _feasible_masses(obs, scale, lo_d, hi_d, resolution):
        if not np.any(valid):
            continue
        any_valid = True
        cums = np.cumsum(masses, axis=0)[:, valid]
        lo = np.minimum(lo, cums.min(axis=1))
        hi = np.maximum(hi, cums.max(axis=1))
    if not any_valid:
        raise InputError("no feasible latent score found; sensitivity misspecified")
    return [(float(y), float(a), float(b)) for y, a, b in zip(obs.support, lo, hi)]


def attainable_cdf_range(
    cell: Cell, sens: CellSensitivity, arm: int, y: float, resolution: int = 200
) -> tuple[float, float]:
    """Attainable range of the counterfactual cdf at one point y."""
    obs = cell.arm_cdf(arm)
    idx = int(np.searchsorted(obs.support, y, side="right")) - 1
    if idx < 0:
        return (0.0, 0.0)
    profile = attainable_cdf_profile(cell, sens, arm, resolution)
    return profile[idx][1], profile[idx][2]


def attainable_param_range(
    cell: Cell,
    sens: CellSensitivity,
    estimand: str,
    resolution: int = 100,
    arm: int | None = None,
    tau: float | None = None,
) -> tuple[float, float]:
    """Attainable range of a cell-level estimand over feasible scores.

    Supported estimands: "mean" and "quantile" of one arm's counterfactual
    outcome (pass ``arm`` and, for quantiles, ``tau``), and "cate" which
    combines the two arms' independent mean ranges.
    """
    _check_sens(cell, sens)
    if estimand == "cate":
        lo1, hi1 = attainable_param_range(cell, sens, "mean", resolution, arm=1)
        lo0, hi0 = attainable_param_range(cell, sens, "mean", resolution, arm=0)
        return lo1 - hi0, hi1 - lo0
    if arm not in (0, 1):
        raise InputError("estimand requires arm 0 or 1")
    obs, scale, lo_d, hi_d = _effective_box(cell, sens, arm)
    lo = np.inf
    hi = -np.inf
    any_valid = False
    for masses, valid in _feasible_masses(obs, scale, lo_d, hi_d, resolution):
        if not np.any(valid):
            continue
        any_valid = True
        if estimand == "mean":
            vals = obs.support @ masses[:, valid]
        elif estimand == "quantile":
            if tau is None or not 0.0 < tau < 1.0:
                raise InputError("quantile estimand needs tau in (0, 1)")
            cums = np.cumsum(masses[:, valid], axis=0)
            # first index with cumulative mass >= tau; the top row sums to 1
            # up to float noise, so clip rather than trust an exact compare
            idx = np.minimum((cums < tau).sum(axis=0), obs.support.size - 1)
            vals = obs.support[idx]
        else:
            raise InputError(f"unknown oracle estimand {estimand!r}")
        lo = min(lo, float(vals.min()))
        hi = max(hi, float(vals.max()))
    if not any_valid:
        raise InputError("no feasible latent score found; sensitivity misspecified")
    return lo, hi


def _check_sens(cell: Cell, sens: CellSensitivity) -> None:
    msg = validate_sensitivity(cell.p1, sens.c_lo, sens.c_hi)
    if msg is not None:
        raise InputError(f"invalid sensitivity: {msg}")


# ---------------------------------------------------------------------------
# coupling sweep for copula-dependent quantities


def coupling_range(f1: StepCdf, f0: StepCdf, z: float) -> tuple[float, float]:
    """Exact range of P(Y1 - Y0 <= z) over all couplings of two marginals.

    Two-point marginals use the closed-form one-parameter family of joint
    distributions; anything with joint support up to 9 points solves two
    small transport programs. Larger supports are rejected.
    """
    n1, n0 = f1.support.size, f0.support.size
    if n1 == 2 and n0 == 2:
        return _coupling_range_2x2(f1, f0, z)
    if n1 * n0 <= 9:
        return _coupling_range_lp(f1, f0, z)
    raise InputError(
        f"coupling sweep supports joint supports up to 9 points, got {n1 * n0}"
    )


def _coupling_range_2x2(f1: StepCdf, f0: StepCdf, z: float) -> tuple[float, float]:
    s1 = float(f1.pmf[1])  # mass on the high point of Y1
    s0 = float(f0.pmf[1])
    lo_hh = max(0.0, s1 + s0 - 1.0)
    hi_hh = min(s1, s0)
    y1l, y1h = f1.support
    y0l, y0h = f0.support
    ind = (
        1.0 if y1l - y0l <= z else 0.0,
        1.0 if y1l - y0h <= z else 0.0,
        1.0 if y1h - y0l <= z else 0.0,
        1.0 if y1h - y0h <= z else 0.0,
    )

    def prob(p_hh: float) -> float:
        cells = (
            1.0 - s1 - s0 + p_hh,  # (low, low)
            s0 - p_hh,  # (low, high)
            s1 - p_hh,  # (high, low)
            p_hh,  # (high, high)
        )
        return sum(i * c for i, c in zip(ind, cells))

    a, b = prob(lo_hh), prob(hi_hh)
    return (min(a, b), max(a, b))


def _coupling_range_lp(f1: StepCdf, f0: StepCdf, z: float) -> tuple[float, float]:
    from scipy.optimize import linprog

    n1, n0 = f1.support.size, f0.support.size
    cost = (f1.support[:, None] - f0.support[None, :] <= z).astype(float).ravel()
    a_eq = np.zeros((n1 + n0, n1 * n0))
    for i in range(n1):
        a_eq[i, i * n0 : (i + 1) * n0] = 1.0
    for j in range(n0):
        a_eq[n1 + j, j::n0] = 1.0
    b_eq = np.concatenate([f1.pmf, f0.pmf])
    out = []
    for sign in (1.0, -1.0):
        res = linprog(sign * cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if not res.success:
            raise InputError(f"coupling program failed: {res.message}")
        out.append(sign * res.fun)
    return (max(0.0, out[0]), min(1.0, out[1]))


# ---------------------------------------------------------------------------
# witness verification


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    error: float
    detail: str = ""


@dataclass(frozen=True)
class WitnessReport:
    cell_id: str
    arm: int
    side: str
    constant_score: bool
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_witness(
    cell: Cell,
    sens: CellSensitivity,
    arm: int,
    side: str,
    score: SwitchingScore | None = None,
    env: CellEnvelopes | None = None,
    tol: float = 1e-10,
) -> WitnessReport:
    """Check that the switching score actually attains its envelope.

    Four checks: (a) inverse-probability reweighting of the observed cell
    law reproduces the envelope at every support point; (b) the implied
    counterfactual pmf is a probability distribution; (c) all score values
    stay inside [c_lo, c_hi]; (d) the score averages to the propensity under
    the implied counterfactual marginal. Returns a report, never raises on
    a failing check.
    """
    _check_sens(cell, sens)
    if env is None:
        env = compute_envelopes(cell, sens)
    if score is None:
        score = switching_score(cell, sens, arm, side, env=env)
    obs = cell.arm_cdf(arm)
    scale = cell.p1 if arm == 1 else 1.0 - cell.p1
    s_vals = np.asarray(score.evaluate(obs.support), dtype=float)
    branch = s_vals if arm == 1 else 1.0 - s_vals

    with np.errstate(divide="ignore", invalid="ignore"):
        implied = obs.pmf * scale / branch
    implied = np.where(np.isfinite(implied), implied, np.inf)

    target = env.marginal(arm, side)
    reproduced = np.cumsum(implied)
    env_vals = target.cdf(obs.support)
    err_a = float(np.max(np.abs(reproduced - env_vals))) if np.all(np.isfinite(implied)) else np.inf

    total = float(np.sum(implied)) if np.all(np.isfinite(implied)) else np.inf
    err_b = max(abs(total - 1.0), float(max(0.0, -np.min(implied))))

    err_c = float(
        max(np.max(s_vals) - sens.c_hi, sens.c_lo - np.min(s_vals), 0.0)
    )

    if np.all(np.isfinite(implied)):
        err_d = abs(float(np.dot(implied, s_vals)) - cell.p1)
    else:
        err_d = np.inf

    checks = (
        CheckResult("reweighting-identity", err_a <= tol, err_a),
        CheckResult("implied-pmf", err_b <= tol, err_b),
        CheckResult("score-range", err_c <= 1e-12, err_c),
        CheckResult("integral-constraint", err_d <= tol, err_d),
    )
    return WitnessReport(
        cell_id=cell.id,
        arm=arm,
        side=side,
        constant_score=score.threshold is None,
        checks=checks,
    )
