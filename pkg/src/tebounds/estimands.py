"""Bound intervals for treatment-effect estimands by envelope substitution.

Copula-free estimands are monotone under first-order stochastic dominance in
each counterfactual cdf, so their sharp bounds come from plugging the
envelope CDFs into the estimand with a fixed orientation: a higher cdf means
a stochastically smaller outcome, hence the mean of the upper cdf envelope
is the lower bound on the expected potential outcome, and quantile bounds
invert the opposite-side envelope. The orientation of every supported
estimand is hard-coded below; unknown estimand names are rejected.

Copula-dependent quantities (joint cdf, distribution and quantiles of the
unit-level effect) additionally optimize over the unconstrained dependence
between the two potential outcomes, which yields pointwise extremal-copula
bounds for the joint cdf and sup/inf convolution bounds for the effect
distribution, evaluated exactly over the jump points of the step CDFs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .envelopes import (
    CellEnvelopes,
    aggregate_cross_treated,
    aggregate_marginal,
    aggregate_observed_treated,
    _check_weights,
)
from .errors import InputError, InternalError
from .stepcdf import StepCdf

#: reported intervals may be inverted by at most this much before erroring
INTERVAL_TOL = 1e-12

#: estimands whose identified set does not depend on the outcome copula
COPULA_FREE = {"cate", "cqte", "ate", "wate", "att", "qte", "qtt", "qcate", "aww"}
ALL_ESTIMANDS = COPULA_FREE | {"joint_cdf", "dte", "qdte"}


@dataclass(frozen=True)
class BoundInterval:
    """Identified-set interval [lo, hi] for one estimand at one sensitivity."""

    lo: float
    hi: float
    estimand: str
    sensitivity: str = ""
    flags: tuple[str, ...] = field(default=(), compare=False)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack

    def nested_in(self, other: "BoundInterval", slack: float = INTERVAL_TOL) -> bool:
        return other.lo - slack <= self.lo and self.hi <= other.hi + slack


def _sens_label(envs: Sequence[CellEnvelopes]) -> str:
    pairs = {(e.sens.c_lo, e.sens.c_hi) for e in envs}
    if len(pairs) == 1:
        lo, hi = next(iter(pairs))
        return f"c=[{lo:.6g},{hi:.6g}]"
    return f"c=per-cell({len(envs)})"


def _sens_flags(envs: Sequence[CellEnvelopes]) -> tuple[str, ...]:
    flags: list[str] = []
    for e in envs:
        for f in e.sens.flags:
            if f not in flags:
                flags.append(f)
    return tuple(flags)


def _interval(
    estimand: str, lo: float, hi: float, envs: Sequence[CellEnvelopes]
) -> BoundInterval:
    lo = float(lo)
    hi = float(hi)
    if lo > hi + INTERVAL_TOL:
        raise InternalError(
            f"estimand {estimand!r} produced inverted interval [{lo}, {hi}]"
        )
    return BoundInterval(
        lo=min(lo, hi),
        hi=hi,
        estimand=estimand,
        sensitivity=_sens_label(envs),
        flags=_sens_flags(envs),
    )


def _mean_bounds(env: CellEnvelopes, arm: int) -> tuple[float, float]:
    """(lower, upper) bounds on the expected potential outcome in one cell."""
    return env.marginal(arm, "hi").mean(), env.marginal(arm, "lo").mean()


# ---------------------------------------------------------------------------
# conditional (single-cell) estimands


def cate_bounds(env: CellEnvelopes) -> BoundInterval:
    """Conditional average effect: difference of per-arm mean bounds."""
    m1_lo, m1_hi = _mean_bounds(env, 1)
    m0_lo, m0_hi = _mean_bounds(env, 0)
    return _interval("cate", m1_lo - m0_hi, m1_hi - m0_lo, [env])


def cqte_bounds(env: CellEnvelopes, tau: float) -> BoundInterval:
    """Conditional quantile effect at level tau."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
    lo = env.marginal(1, "hi").quantile(tau) - env.marginal(0, "lo").quantile(tau)
    hi = env.marginal(1, "lo").quantile(tau) - env.marginal(0, "hi").quantile(tau)
    return _interval("cqte", lo, hi, [env])


# ---------------------------------------------------------------------------
# averaged estimands


def _resolve_omega(envs, omega, lo_ok: float, hi_ok: float, name: str) -> np.ndarray:
    if isinstance(omega, Mapping):
        try:
            w = np.array([float(omega[e.cell.id]) for e in envs])
        except KeyError as exc:
            raise InputError(f"omega is missing a weight for cell {exc.args[0]!r}")
    elif np.isscalar(omega):
        w = np.full(len(envs), float(omega))
    else:
        w = np.asarray(omega, dtype=float)
        if w.shape != (len(envs),):
            raise InputError("omega array must have one entry per cell")
    if np.any(w < lo_ok) or np.any(w > hi_ok):
        raise InputError(
            f"{name} weights must lie in [{lo_ok:g}, {hi_ok:g}]"
            if np.isfinite(hi_ok)
            else f"{name} weights must be at least {lo_ok:g}"
        )
    return w


def wate_bounds(envs: Sequence[CellEnvelopes], omega=1.0) -> BoundInterval:
    """Weighted average effect for nonnegative cell weights omega."""
    cw = _check_weights(envs)
    om = _resolve_omega(envs, omega, 0.0, np.inf, "wate")
    lo = hi = 0.0
    for w, o, env in zip(cw, om, envs):
        c = cate_bounds(env)
        lo += w * o * c.lo
        hi += w * o * c.hi
    return _interval("wate", lo, hi, envs)


def ate_bounds(envs: Sequence[CellEnvelopes]) -> BoundInterval:
    b = wate_bounds(envs, 1.0)
    return _interval("ate", b.lo, b.hi, envs)


def att_bounds(envs: Sequence[CellEnvelopes]) -> BoundInterval:
    """Average effect on the treated.

    The observed treated mean is point identified; the counterfactual
    control mean among the treated is bounded by the means of the arm-0
    cross envelopes aggregated with treated shares. The lower interval
    endpoint subtracts the larger counterfactual mean, which comes from the
    lower cdf envelope.
    """
    cells = [e.cell for e in envs]
    y1_mean = aggregate_observed_treated(cells).mean()
    upper_cf = aggregate_cross_treated(envs, "lo").mean()
    lower_cf = aggregate_cross_treated(envs, "hi").mean()
    return _interval("att", y1_mean - upper_cf, y1_mean - lower_cf, envs)


def qte_bounds(envs: Sequence[CellEnvelopes], tau: float) -> BoundInterval:
    """Unconditional quantile effect: invert the aggregated envelopes."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
    lo = aggregate_marginal(envs, 1, "hi").quantile(tau) - aggregate_marginal(
        envs, 0, "lo"
    ).quantile(tau)
    hi = aggregate_marginal(envs, 1, "lo").quantile(tau) - aggregate_marginal(
        envs, 0, "hi"
    ).quantile(tau)
    return _interval("qte", lo, hi, envs)


def qtt_bounds(envs: Sequence[CellEnvelopes], tau: float) -> BoundInterval:
    """Quantile effect on the treated."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
    q_obs = aggregate_observed_treated([e.cell for e in envs]).quantile(tau)
    lo = q_obs - aggregate_cross_treated(envs, "lo").quantile(tau)
    hi = q_obs - aggregate_cross_treated(envs, "hi").quantile(tau)
    return _interval("qtt", lo, hi, envs)


def qcate_bounds(envs: Sequence[CellEnvelopes], tau: float) -> BoundInterval:
    """Quantile of the cell-level average effect distribution.

    Endpoint curves are the tau-quantiles of the cell-weight distributions
    of the per-cell interval endpoints, taken with the left-inverse
    convention.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
    w = _check_weights(envs)
    per_cell = [cate_bounds(e) for e in envs]
    lo = StepCdf.from_pmf([c.lo for c in per_cell], w).quantile(tau)
    hi = StepCdf.from_pmf([c.hi for c in per_cell], w).quantile(tau)
    return _interval("qcate", lo, hi, envs)


def aww_bounds(envs: Sequence[CellEnvelopes], omega) -> BoundInterval:
    """Average welfare of a probabilistic assignment rule omega in [0, 1].

    Increasing in both potential outcomes, so both arms substitute the same
    envelope side: upper cdf envelopes give the lower welfare bound.
    """
    cw = _check_weights(envs)
    om = _resolve_omega(envs, omega, 0.0, 1.0, "aww")
    lo = hi = 0.0
    for w, o, env in zip(cw, om, envs):
        m1_lo, m1_hi = _mean_bounds(env, 1)
        m0_lo, m0_hi = _mean_bounds(env, 0)
        lo += w * (o * m1_lo + (1.0 - o) * m0_lo)
        hi += w * (o * m1_hi + (1.0 - o) * m0_hi)
    return _interval("aww", lo, hi, envs)


# ---------------------------------------------------------------------------
# copula-dependent estimands

# Conditional on (X=x, W=w) the own-arm counterfactual cdf is the observed
# arm cdf; only the opposite arm is bounded, by the cross envelopes.


def _conditional_cdfs(env: CellEnvelopes, x: int, side1: str, side0: str):
    if x == 1:
        f1 = env.cell.f_treated
        f0 = env.cross(0, side0)
    else:
        f1 = env.cross(1, side1)
        f0 = env.cell.f_control
    return f1, f0


def joint_cdf_bounds(
    envs: Sequence[CellEnvelopes], y1: float, y0: float
) -> BoundInterval:
    """Pointwise bounds on P(Y1 <= y1, Y0 <= y0).

    Per (treatment, cell) stratum the joint probability lies between the
    extremal-copula evaluations max{u + v - 1, 0} and min{u, v} of the
    conditional marginal bounds; stratum weights are weight * p_x.
    """
    w = _check_weights(envs)
    lo = hi = 0.0
    for wi, env in zip(w, envs):
        for x in (0, 1):
            px = env.cell.p1 if x == 1 else 1.0 - env.cell.p1
            f1_lo, f0_lo = _conditional_cdfs(env, x, "lo", "lo")
            f1_hi, f0_hi = _conditional_cdfs(env, x, "hi", "hi")
            lo += wi * px * max(f1_lo.cdf(y1) + f0_lo.cdf(y0) - 1.0, 0.0)
            hi += wi * px * min(f1_hi.cdf(y1), f0_hi.cdf(y0))
    return _interval("joint_cdf", lo, hi, envs)


def _makarov_bounds(f1: StepCdf, f0: StepCdf, z: float) -> tuple[float, float]:
    """Sharp range of P(Y1 - Y0 <= z) over all couplings of two step CDFs.

    The lower bound is sup over y of F1(y) - F0((y - z)-) and the upper
    bound is 1 + inf over y of F1(y) - F0(y - z): the left limit on the
    subtracted cdf in the lower bound is what keeps it attainable when the
    two outcomes share mass points.

    For step inputs both extrema are reached on the monotone staircase of
    index pairs visited as y sweeps the merged jump positions, so they are
    computed by a two-pointer walk. Jump positions are ordered by comparing
    the pairwise support difference against z directly, which keeps exact
    ties on the same convention as the coupling enumeration they are
    verified against.
    """
    s1, c1 = f1.support, f1.cum
    s0, c0 = f0.support, f0.cum
    n1, n0 = s1.size, s0.size
    i = j = 0
    lo_sup = 0.0
    hi_inf = 0.0

    def val(ii: int, jj: int) -> float:
        a = c1[ii - 1] if ii > 0 else 0.0
        b = c0[jj - 1] if jj > 0 else 0.0
        return float(a - b)

    while i < n1 or j < n0:
        if j == n0:
            i += 1
        elif i == n1:
            j += 1
        else:
            d = s1[i] - s0[j]
            if d < z:
                i += 1
            elif d > z:
                j += 1
            else:
                # simultaneous jumps: the lower-bound curve sees the corner
                # where F1 has jumped but the left limit of F0 has not
                lo_sup = max(lo_sup, val(i + 1, j))
                i += 1
                j += 1
        v = val(i, j)
        lo_sup = max(lo_sup, v)
        hi_inf = min(hi_inf, v)
    return lo_sup, 1.0 + hi_inf


def _makarov_lower(f1: StepCdf, f0: StepCdf, z: float) -> float:
    return _makarov_bounds(f1, f0, z)[0]


def _makarov_upper(f1: StepCdf, f0: StepCdf, z: float) -> float:
    return _makarov_bounds(f1, f0, z)[1]


def dte_bounds(envs: Sequence[CellEnvelopes], z: float) -> BoundInterval:
    """Bounds on the distribution of the unit-level effect at z.

    The lower bound substitutes the (lower Y1, upper Y0) conditional cdfs
    into the sup-convolution, the upper bound the opposite pair into the
    inf-convolution; both aggregate over (treatment, cell) strata.
    """
    w = _check_weights(envs)
    lo = hi = 0.0
    for wi, env in zip(w, envs):
        for x in (0, 1):
            px = env.cell.p1 if x == 1 else 1.0 - env.cell.p1
            f1_lo, f0_hi = _conditional_cdfs(env, x, "lo", "hi")
            f1_hi, f0_lo = _conditional_cdfs(env, x, "hi", "lo")
            lo += wi * px * _makarov_lower(f1_lo, f0_hi, z)
            hi += wi * px * _makarov_upper(f1_hi, f0_lo, z)
    return _interval("dte", lo, hi, envs)


def _dte_candidates(envs: Sequence[CellEnvelopes]) -> np.ndarray:
    """All z values where either effect-distribution bound can jump.

    For step inputs both bound curves are step functions of z jumping only
    at pairwise support differences of the substituted conditional cdfs.
    """
    diffs: list[np.ndarray] = []
    for env in envs:
        for x in (0, 1):
            for side1, side0 in (("lo", "hi"), ("hi", "lo")):
                f1, f0 = _conditional_cdfs(env, x, side1, side0)
                diffs.append(
                    (f1.support[:, None] - f0.support[None, :]).ravel()
                )
    return np.unique(np.concatenate(diffs))


def _invert_step_curve(curve, candidates: np.ndarray, tau: float) -> float:
    """inf{z : curve(z) >= tau} for a nondecreasing step curve.

    The curve may take its higher value only strictly after a jump point,
    so plateaus between candidates are probed at midpoints; the infimum of
    an open qualifying interval is still the candidate on its left edge.
    """
    for i, zc in enumerate(candidates):
        if curve(float(zc)) >= tau:
            return float(zc)
        probe = (
            float(zc) + 1.0
            if i + 1 == candidates.size
            else float(0.5 * (zc + candidates[i + 1]))
        )
        if curve(probe) >= tau:
            return float(zc)
    raise InternalError("effect-distribution curve never reaches the target level")


def qdte_bounds(envs: Sequence[CellEnvelopes], tau: float) -> BoundInterval:
    """Quantile of the unit-level effect: left-inverse of the dte bounds.

    The lower endpoint inverts the upper cdf curve and conversely. The
    search is exact: candidate z values are the pairwise support
    differences where the step curves can jump.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
    candidates = _dte_candidates(envs)
    lo = _invert_step_curve(lambda z: dte_bounds(envs, z).hi, candidates, tau)
    hi = _invert_step_curve(lambda z: dte_bounds(envs, z).lo, candidates, tau)
    return _interval("qdte", lo, hi, envs)


# ---------------------------------------------------------------------------
# dispatch by estimand name


def compute_estimand(
    name: str, envs: Sequence[CellEnvelopes], params: Mapping | None = None
) -> BoundInterval:
    """Evaluate a named estimand; unknown names are rejected."""
    params = dict(params or {})

    def pick_cell() -> CellEnvelopes:
        cell_id = params.get("cell")
        if cell_id is None:
            if len(envs) == 1:
                return envs[0]
            raise InputError(f"estimand {name!r} needs a 'cell' parameter")
        for env in envs:
            if env.cell.id == str(cell_id):
                return env
        raise InputError(f"no cell with id {cell_id!r}")

    def need(key: str) -> float:
        if key not in params:
            raise InputError(f"estimand {name!r} needs parameter {key!r}")
        return float(params[key])

    if name == "cate":
        return cate_bounds(pick_cell())
    if name == "cqte":
        return cqte_bounds(pick_cell(), need("tau"))
    if name == "ate":
        return ate_bounds(envs)
    if name == "wate":
        return wate_bounds(envs, params.get("omega", 1.0))
    if name == "att":
        return att_bounds(envs)
    if name == "qte":
        return qte_bounds(envs, need("tau"))
    if name == "qtt":
        return qtt_bounds(envs, need("tau"))
    if name == "qcate":
        return qcate_bounds(envs, need("tau"))
    if name == "aww":
        if "omega" not in params:
            raise InputError("estimand 'aww' needs parameter 'omega'")
        return aww_bounds(envs, params["omega"])
    if name == "joint_cdf":
        return joint_cdf_bounds(envs, need("y1"), need("y0"))
    if name == "dte":
        return dte_bounds(envs, need("z"))
    if name == "qdte":
        return qdte_bounds(envs, need("tau"))
    raise InputError(f"unknown estimand {name!r}")
