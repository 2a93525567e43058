"""Per-cell envelope CDFs, thresholds, and switching-score witnesses.

For one covariate cell with observed arm distributions F1, F0 and propensity
p1, latent-probability bounds (c_lo, c_hi) pin each counterfactual cdf
between two step CDFs. For the treated arm the marginal envelopes are

    upper(y) = min{ F1(y) p1/c_lo,  (c_hi - p1)/c_hi + F1(y) p1/c_hi }
    lower(y) = max{ F1(y) p1/c_hi,  (c_lo - p1)/c_lo + F1(y) p1/c_lo }

with cross-arm versions (conditioning on the opposite treatment) obtained by
removing the observed share of the mixture. Control-arm expressions follow
by swapping p1 with p0 = 1 - p1 and (c_lo, c_hi) with (1 - c_hi, 1 - c_lo);
the implementation works in that "effective" parameterization so one code
path serves both arms.

Each envelope is attained by a latent probability with a three-branch
switching structure: one bound below a quantile threshold, the other above,
and an interpolating constant on the threshold's mass point. Those witnesses
are exposed as :class:`SwitchingScore` and visibly reproduce the envelopes
through inverse-probability reweighting of the observed cell law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .sensitivity import CellSensitivity, validate_sensitivity
from .stepcdf import PROB_TOL, StepCdf, weighted_mixture

Side = str  # "lo" | "hi", referring to the cdf envelope


@dataclass(frozen=True)
class Cell:
    """One covariate value: weight, propensity, and the two observed arms."""

    id: str
    weight: float
    p1: float
    f_treated: StepCdf
    f_control: StepCdf

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"cell weight must lie in (0, 1], got {self.weight}")
        if not 0.0 < self.p1 < 1.0:
            raise ValueError(f"cell propensity must lie in (0, 1), got {self.p1}")

    def arm_cdf(self, arm: int) -> StepCdf:
        return self.f_treated if arm == 1 else self.f_control


@dataclass(frozen=True)
class SwitchingScore:
    """Three-branch latent treatment probability P(X=1 | Y_x = y).

    Equals ``below_value`` strictly below the threshold, ``at_value`` on it,
    and ``above_value`` strictly above. ``threshold`` is None for the
    constant score returned when the sensitivity interval does not contain
    the propensity strictly.
    """

    below_value: float
    at_value: float
    above_value: float
    threshold: float | None

    def evaluate(self, y):
        y_arr = np.asarray(y, dtype=float)
        if self.threshold is None:
            out = np.full(y_arr.shape, self.at_value)
        else:
            out = np.where(
                y_arr < self.threshold,
                self.below_value,
                np.where(y_arr > self.threshold, self.above_value, self.at_value),
            )
        return float(out) if y_arr.ndim == 0 else out


@dataclass(frozen=True)
class ArmEnvelopes:
    """Envelopes and auxiliary constants for one potential outcome.

    ``lo_marginal``/``hi_marginal`` bound the cdf given covariates only;
    ``lo_cross``/``hi_cross`` bound it given covariates and the opposite
    treatment. ``tau_lo``/``tau_hi`` are the observed-arm quantile levels at
    which the lower/upper envelope switches branch, ``q_lo``/``q_hi`` the
    corresponding outcome thresholds, and ``a_lo``/``a_hi`` the witness score
    values on those thresholds (always inside [c_lo, c_hi]). The auxiliary
    fields are None when the envelopes collapse to the observed cdf.
    """

    lo_marginal: StepCdf
    hi_marginal: StepCdf
    lo_cross: StepCdf
    hi_cross: StepCdf
    tau_lo: float | None
    tau_hi: float | None
    q_lo: float | None
    q_hi: float | None
    a_lo: float | None
    a_hi: float | None


@dataclass(frozen=True)
class CellEnvelopes:
    """All eight envelope CDFs for one cell at one sensitivity level."""

    cell: Cell
    sens: CellSensitivity
    arm0: ArmEnvelopes
    arm1: ArmEnvelopes

    def arm(self, x: int) -> ArmEnvelopes:
        return self.arm1 if x == 1 else self.arm0

    def marginal(self, arm: int, side: Side) -> StepCdf:
        a = self.arm(arm)
        return a.hi_marginal if side == "hi" else a.lo_marginal

    def cross(self, arm: int, side: Side) -> StepCdf:
        a = self.arm(arm)
        return a.hi_cross if side == "hi" else a.lo_cross


def _effective_params(cell: Cell, sens: CellSensitivity, arm: int):
    """Observed cdf and (p, a, b) parameters for the requested arm.

    Arm 0 reuses the arm-1 formulas after swapping p1 with p0 and mapping the
    score bounds through c -> 1 - c (which flips and reorders them).
    """
    if arm == 1:
        return cell.f_treated, cell.p1, sens.c_lo, sens.c_hi
    return cell.f_control, 1.0 - cell.p1, 1.0 - sens.c_hi, 1.0 - sens.c_lo


def _quantile_clamped(f: StepCdf, tau: float) -> float:
    if tau <= 0.0:
        return float(f.support[0])
    if tau >= 1.0:
        return float(f.support[-1])
    return f.quantile(tau)


def _jump(f: StepCdf, y: float) -> float:
    return float(f.cdf(y) - f.cdf_left(y))


def _arm_envelopes(cell: Cell, sens: CellSensitivity, arm: int) -> ArmEnvelopes:
    obs, p, a, b = _effective_params(cell, sens, arm)
    if not a < p < b:
        # either score bound equals the propensity: all envelopes collapse
        # to the observed cdf and the switching thresholds are undefined
        return ArmEnvelopes(obs, obs, obs, obs, None, None, None, None, None, None)

    q = 1.0 - p
    s = obs.support
    F = obs.cum

    hi_m = np.minimum(F * (p / a), (b - p) / b + F * (p / b))
    lo_m = np.maximum(F * (p / b), (a - p) / a + F * (p / a))
    hi_x = np.minimum(
        F * (p * (1.0 - a) / (q * a)),
        (b - p) / (b * q) + F * (p * (1.0 - b) / (q * b)),
    )
    lo_x = np.maximum(
        F * (p * (1.0 - b) / (q * b)),
        (a - p) / (a * q) + F * (p * (1.0 - a) / (q * a)),
    )

    # the min/max of strictly increasing affine maps of a strictly increasing
    # cdf is itself strictly increasing with positive first value and final
    # value 1, so the arrays satisfy the invariants by construction
    hi_marginal = StepCdf._from_valid(s, np.clip(hi_m, 0.0, 1.0))
    lo_marginal = StepCdf._from_valid(s, np.clip(lo_m, 0.0, 1.0))
    hi_cross = StepCdf._from_valid(s, np.clip(hi_x, 0.0, 1.0))
    lo_cross = StepCdf._from_valid(s, np.clip(lo_x, 0.0, 1.0))

    tau_lo = (p - a) * b / (p * (b - a))
    tau_hi = 1.0 - tau_lo
    q_lo = _quantile_clamped(obs, tau_lo)
    q_hi = _quantile_clamped(obs, tau_hi)

    def mass_constant(env: StepCdf, threshold: float) -> float:
        den = _jump(env, threshold)
        if den <= 0.0:
            return p
        return p * _jump(obs, threshold) / den

    a_lo_eff = mass_constant(lo_marginal, q_lo)
    a_hi_eff = mass_constant(hi_marginal, q_hi)
    if arm == 0:
        # stored in P(X=1 | .) space for both arms
        a_lo_eff = 1.0 - a_lo_eff
        a_hi_eff = 1.0 - a_hi_eff

    return ArmEnvelopes(
        lo_marginal,
        hi_marginal,
        lo_cross,
        hi_cross,
        tau_lo,
        tau_hi,
        q_lo,
        q_hi,
        a_lo_eff,
        a_hi_eff,
    )


def compute_envelopes(cell: Cell, sens: CellSensitivity) -> CellEnvelopes:
    """Compute all eight envelope CDFs plus thresholds for one cell."""
    msg = validate_sensitivity(cell.p1, sens.c_lo, sens.c_hi)
    if msg is not None:
        raise InputError(f"cell {cell.id!r}: invalid sensitivity: {msg}")
    return CellEnvelopes(
        cell=cell,
        sens=sens,
        arm0=_arm_envelopes(cell, sens, 0),
        arm1=_arm_envelopes(cell, sens, 1),
    )


def switching_score(
    cell: Cell,
    sens: CellSensitivity,
    arm: int,
    side: Side,
    env: CellEnvelopes | None = None,
) -> SwitchingScore:
    """Witness score attaining the requested marginal envelope.

    For the treated arm the upper envelope is attained by scores that are
    low (c_lo) below the threshold and high (c_hi) above it, and vice versa
    for the lower envelope; the control arm flips the pattern. When the
    sensitivity interval touches the propensity the constant score p1 is
    returned instead.
    """
    if env is None:
        env = compute_envelopes(cell, sens)
    arm_env = env.arm(arm)
    if arm_env.tau_lo is None:
        return SwitchingScore(cell.p1, cell.p1, cell.p1, None)
    increasing = (arm == 1) == (side == "hi")
    below, above = (
        (sens.c_lo, sens.c_hi) if increasing else (sens.c_hi, sens.c_lo)
    )
    at = arm_env.a_hi if side == "hi" else arm_env.a_lo
    threshold = arm_env.q_hi if side == "hi" else arm_env.q_lo
    return SwitchingScore(below, at, above, threshold)


def envelope_quantile(
    env: CellEnvelopes,
    arm: int,
    side: Side,
    tau: float,
    conditioning: str = "marginal",
) -> float:
    """Quantile bound: the left-inverse of the opposite-side envelope cdf.

    The upper quantile bound inverts the lower cdf envelope and conversely,
    since higher cdfs mean stochastically smaller outcomes.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
    cdf_side = "lo" if side == "hi" else "hi"
    if conditioning == "marginal":
        return env.marginal(arm, cdf_side).quantile(tau)
    if conditioning == "cross":
        return env.cross(arm, cdf_side).quantile(tau)
    raise ValueError(f"unknown conditioning {conditioning!r}")


def envelope_quantile_closed_form(
    cell: Cell,
    sens: CellSensitivity,
    arm: int,
    side: Side,
    tau: float,
    conditioning: str = "marginal",
) -> float:
    """Quantile bound via direct composition with the observed quantile.

    Cross-check for :func:`envelope_quantile`: the envelope's left-inverse
    equals the observed-arm quantile evaluated at a min/max of two affine
    transformations of tau. Both routes agree exactly on step CDFs.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
    obs, p, a, b = _effective_params(cell, sens, arm)
    if not a < p < b:
        return obs.quantile(tau)
    q = 1.0 - p
    if conditioning == "marginal":
        if side == "hi":
            arg = min(b / p * tau, (p - a) / p + a / p * tau)
        else:
            arg = max(a / p * tau, (p - b) / p + b / p * tau)
    elif conditioning == "cross":
        if side == "hi":
            arg = min(
                b * q / (p * (1.0 - b)) * tau,
                (p - a) / (p * (1.0 - a)) + a * q / (p * (1.0 - a)) * tau,
            )
        else:
            arg = max(
                a * q / (p * (1.0 - a)) * tau,
                (p - b) / (p * (1.0 - b)) + b * q / (p * (1.0 - b)) * tau,
            )
    else:
        raise ValueError(f"unknown conditioning {conditioning!r}")
    return _quantile_clamped(obs, arg)


def envelope_mean_closed_forms(cell: Cell, sens: CellSensitivity) -> dict:
    """Means of the marginal envelope CDFs via truncated-mean expressions.

    Returns {(arm, side): value} where side refers to the cdf envelope, so
    the "hi" entry is the lower bound on the expected potential outcome.
    Serves as an independent route to cross-check integrating the
    materialized envelopes directly; the two agree to float precision even
    with a mass point sitting exactly on the switching threshold.
    """
    out = {}
    for arm in (0, 1):
        obs, p, a, b = _effective_params(cell, sens, arm)
        if not a < p < b:
            m = obs.mean()
            out[(arm, "hi")] = m
            out[(arm, "lo")] = m
            continue
        tau_lo = (p - a) * b / (p * (b - a))
        tau_hi = 1.0 - tau_lo
        for side, tau in (("hi", tau_hi), ("lo", tau_lo)):
            cut = _quantile_clamped(obs, tau)
            mass = obs.cdf(cut)
            idx = np.searchsorted(obs.support, cut, side="right")
            lower_sum = float(np.dot(obs.support[:idx], obs.pmf[:idx]))
            upper_sum = obs.mean() - lower_sum
            adj = cut * (mass - tau)
            if side == "hi":
                out[(arm, side)] = (p / a) * (lower_sum - adj) + (p / b) * (
                    upper_sum + adj
                )
            else:
                out[(arm, side)] = (p / b) * (lower_sum - adj) + (p / a) * (
                    upper_sum + adj
                )
    return out


def _check_weights(envs) -> np.ndarray:
    if len(envs) == 0:
        raise InputError("need at least one cell")
    w = np.array([e.cell.weight for e in envs], dtype=float)
    if abs(float(w.sum()) - 1.0) > PROB_TOL:
        raise InputError(f"cell weights sum to {float(w.sum())!r}, not 1")
    return w


def aggregate_marginal(envs, arm: int, side: Side) -> StepCdf:
    """Population-level envelope: cell-weight average of marginal envelopes."""
    w = _check_weights(envs)
    return weighted_mixture([e.marginal(arm, side) for e in envs], w)


def aggregate_cross_treated(envs, side: Side) -> StepCdf:
    """Control-outcome envelope among the treated.

    Averages the arm-0 cross envelopes with weights P(W = w | X = 1),
    proportional to weight * p1 per cell.
    """
    _check_weights(envs)
    tw = np.array([e.cell.weight * e.cell.p1 for e in envs], dtype=float)
    total = float(tw.sum())
    if total <= 0.0:
        raise InputError("no treated mass across cells")
    return weighted_mixture([e.cross(0, side) for e in envs], tw / total)


def aggregate_observed_treated(cells) -> StepCdf:
    """Observed outcome distribution among the treated."""
    tw = np.array([c.weight * c.p1 for c in cells], dtype=float)
    total = float(tw.sum())
    if total <= 0.0:
        raise InputError("no treated mass across cells")
    return weighted_mixture([c.f_treated for c in cells], tw / total)


def mean_treated_observed(cells) -> float:
    """E[Y | X = 1] computed from the observed cells."""
    return aggregate_observed_treated(cells).mean()
