"""Sensitivity-model parameterizations and their exact conversions.

Two equivalent ways of bounding how far the latent treatment probability
P(X=1 | Y_x, W=w) may drift from the observed propensity score p1:

* direct bounds ``(c_lo, c_hi)`` on the latent probability itself, and
* odds-ratio bounds ``(lambda_lo, lambda_hi)`` on
  [p(y) / (1-p(y))] / [p1 / (1-p1)].

The two are in exact bijection given p1; the conversions below implement
both directions. Symmetric odds bounds (1/L, L) recover the single-parameter
odds-ratio model, and c = 0 additive bounds recover unconfoundedness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

#: additive latent-probability bounds are clamped into [CLAMP, 1 - CLAMP]
CLAMP = 1e-9


@dataclass(frozen=True)
class CellSensitivity:
    """Bounds (c_lo, c_hi) on the latent treatment probability in one cell."""

    c_lo: float
    c_hi: float
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not 0.0 < self.c_lo <= self.c_hi < 1.0:
            raise ValueError(
                f"need 0 < c_lo <= c_hi < 1, got ({self.c_lo}, {self.c_hi})"
            )

    @property
    def width(self) -> float:
        return self.c_hi - self.c_lo

    def is_strict(self, p1: float) -> bool:
        """True when c_lo < p1 < c_hi, the case with nondegenerate envelopes."""
        return self.c_lo < p1 < self.c_hi

    def contains(self, other: "CellSensitivity") -> bool:
        return self.c_lo <= other.c_lo and other.c_hi <= self.c_hi


@dataclass(frozen=True)
class GmsmBounds:
    """Odds-ratio bounds with lambda_lo in (0, 1] and lambda_hi in [1, inf)."""

    lambda_lo: float
    lambda_hi: float

    def __post_init__(self):
        if not 0.0 < self.lambda_lo <= 1.0:
            raise ValueError(f"lambda_lo must lie in (0, 1], got {self.lambda_lo}")
        if self.lambda_hi < 1.0:
            raise ValueError(f"lambda_hi must be at least 1, got {self.lambda_hi}")

    @classmethod
    def symmetric(cls, lam: float) -> "GmsmBounds":
        """Single-parameter odds model: bounds (1/lam, lam) for lam >= 1."""
        if lam < 1.0:
            raise ValueError(f"lambda must be at least 1, got {lam}")
        return cls(1.0 / lam, lam)


def _check_p1(p1: float) -> None:
    if not 0.0 < p1 < 1.0:
        raise ValueError(f"p1 must lie strictly inside (0, 1), got {p1}")


def validate_sensitivity(p1: float, c_lo: float, c_hi: float) -> str | None:
    """Check 0 < c_lo <= p1 <= c_hi < 1; return None if ok.

    On failure returns a message naming the violated inequality. The
    propensity score must lie inside the bounds: it is the average of the
    latent probability over the cell, so bounds excluding it are
    misspecified.
    """
    if not c_lo > 0.0:
        return f"c_lo <= 0 (c_lo={c_lo})"
    if c_lo > p1:
        return f"c_lo > p1 (c_lo={c_lo}, p1={p1})"
    if c_hi < p1:
        return f"c_hi < p1 (c_hi={c_hi}, p1={p1})"
    if not c_hi < 1.0:
        return f"c_hi >= 1 (c_hi={c_hi})"
    return None


def cdep_from_gmsm(p1: float, g: GmsmBounds) -> CellSensitivity:
    """Convert odds-ratio bounds into latent-probability bounds.

    Each endpoint maps through c = p1*L / (p0 + p1*L); the output always
    satisfies c_lo <= p1 <= c_hi.
    """
    _check_p1(p1)
    p0 = 1.0 - p1
    c_lo = p1 * g.lambda_lo / (p0 + p1 * g.lambda_lo)
    c_hi = p1 * g.lambda_hi / (p0 + p1 * g.lambda_hi)
    return CellSensitivity(c_lo, c_hi)


def gmsm_from_cdep(p1: float, s: CellSensitivity) -> GmsmBounds:
    """Convert latent-probability bounds into odds-ratio bounds.

    Each endpoint maps through L = [c / (1-c)] * [p0 / p1]; inverse of
    ``cdep_from_gmsm`` up to float rounding.
    """
    _check_p1(p1)
    msg = validate_sensitivity(p1, s.c_lo, s.c_hi)
    if msg is not None:
        raise ValueError(f"invalid sensitivity for p1={p1}: {msg}")
    odds = (1.0 - p1) / p1
    lam_lo = s.c_lo / (1.0 - s.c_lo) * odds
    lam_hi = s.c_hi / (1.0 - s.c_hi) * odds
    # guard against float wobble at the unconfoundedness point
    return GmsmBounds(min(lam_lo, 1.0), max(lam_hi, 1.0))


def cdep_from_conditional_c(p1: float, c: float) -> CellSensitivity:
    """Additive bounds p1 +/- c, clamped into (0, 1).

    c = 0 yields the unconfoundedness point (p1, p1). Bounds falling outside
    (0, 1) are clamped to [1e-9, 1 - 1e-9] and the result is flagged, since
    values at or beyond those limits carry no additional information.
    """
    _check_p1(p1)
    if c < 0.0:
        raise ValueError(f"c must be nonnegative, got {c}")
    c_lo = p1 - c
    c_hi = p1 + c
    flags: tuple[str, ...] = ()
    if c_lo < CLAMP or c_hi > 1.0 - CLAMP:
        flags = ("clamped-sensitivity",)
    return CellSensitivity(max(c_lo, CLAMP), min(c_hi, 1.0 - CLAMP), flags=flags)
