"""Exact algebra on finitely supported step CDFs.

Every distribution in this package is a right-continuous step function with
finitely many jumps: empirical arm distributions, envelope bounds, and their
mixtures. ``StepCdf`` stores the jump locations (``support``) and cumulative
probabilities at those locations (``cum``) and provides the exact operations
the rest of the package is built from: evaluation, left limits, left-inverse
quantiles, means, truncated means, mixtures, and partial quantile integrals.

All values are immutable after construction and every operation is a pure
function, so instances can be shared freely across threads.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

#: cumulative mass may differ from 1 by this much before input is rejected
PROB_TOL = 1e-9
#: support values closer than this are treated as the same outcome
MERGE_TOL = 1e-12


class TruncatedMeans(NamedTuple):
    """Conditional means on either side of a quantile cutoff.

    ``upper_empty`` flags the degenerate case where no mass lies strictly
    above the cutoff; ``upper_mean`` is then reported as 0 so that weighted
    sums whose weight on that term is 0 stay well defined.
    """

    lower_mean: float
    upper_mean: float
    mass_at_or_below: float
    cutoff: float
    upper_empty: bool


def _canonicalize(support: np.ndarray, cum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge near-duplicate support points and drop zero-mass points."""
    if support.ndim != 1 or cum.ndim != 1:
        raise ValueError("support and cum must be one-dimensional")
    if support.size == 0:
        raise ValueError("distribution must have at least one support point")
    if support.size != cum.size:
        raise ValueError("support and cum must have equal length")
    if not np.all(np.isfinite(support)) or not np.all(np.isfinite(cum)):
        raise ValueError("support and cum must be finite")
    if np.any(np.diff(support) < 0):
        raise ValueError("support must be sorted in increasing order")

    # merge support points closer than MERGE_TOL, keeping the rightmost cum
    # (the cdf value at the merged point is the value after all its jumps)
    if support.size > 1:
        gaps = np.diff(support)
        if np.any(gaps < MERGE_TOL):
            keep = np.concatenate([gaps >= MERGE_TOL, [True]])
            support = support[keep]
            cum = np.maximum.accumulate(cum)[keep]

    # tolerate tiny float decreases, reject real ones
    dec = np.diff(cum)
    if np.any(dec < -1e-12):
        raise ValueError("cumulative probabilities must be nondecreasing")
    cum = np.maximum.accumulate(cum)

    total = cum[-1]
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"cumulative mass is {total!r}, not 1 within {PROB_TOL}")
    if total != 1.0:
        cum = cum / total
        cum[-1] = 1.0

    # drop zero-mass points; they carry no information
    pmf = np.diff(cum, prepend=0.0)
    keep = pmf > 0.0
    if not np.any(keep):
        raise ValueError("distribution has no positive mass")
    if not np.all(keep):
        support = support[keep]
        cum = cum[keep]
        cum[-1] = 1.0
    return support, cum


class StepCdf:
    """Finite-support right-continuous distribution function.

    Invariants enforced on construction: the support is strictly increasing,
    cumulative probabilities are nondecreasing with every stored point
    carrying positive mass, and the final entry equals 1 (inputs within
    1e-9 of total mass 1 are normalized, anything else is rejected).
    """

    __slots__ = ("support", "cum", "_pmf")

    def __init__(self, support, cum):
        support = np.asarray(support, dtype=float)
        cum = np.asarray(cum, dtype=float)
        support, cum = _canonicalize(support.copy(), cum.copy())
        support.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cum", cum)
        object.__setattr__(self, "_pmf", None)

    def __setattr__(self, name, value):
        raise AttributeError("StepCdf is immutable")

    @classmethod
    def _from_valid(cls, support: np.ndarray, cum: np.ndarray) -> "StepCdf":
        """Fast path for arrays already satisfying the invariants.

        Callers guarantee a canonical strictly increasing support and
        strictly increasing cumulative values in (0, 1]; only the final
        entry is reconciled to exactly 1.
        """
        if cum[-1] != 1.0:
            if abs(cum[-1] - 1.0) > PROB_TOL:
                raise ValueError(f"cumulative mass is {cum[-1]!r}, not 1")
            cum = cum / cum[-1]
            cum[-1] = 1.0
        cum.setflags(write=False)
        self = object.__new__(cls)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cum", cum)
        object.__setattr__(self, "_pmf", None)
        return self

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def from_pmf(cls, values: Iterable[float], masses: Iterable[float]) -> "StepCdf":
        """Build from outcome values and probability masses.

        Values need not be sorted or unique; equal values (within 1e-12)
        merge their masses.
        """
        values = np.asarray(list(values), dtype=float)
        masses = np.asarray(list(masses), dtype=float)
        if values.shape != masses.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("values and masses must be equal-length nonempty 1d sequences")
        if np.any(masses < 0):
            raise ValueError("masses must be nonnegative")
        order = np.argsort(values, kind="stable")
        values = values[order]
        masses = masses[order]
        return cls(values, np.cumsum(masses))

    @classmethod
    def from_samples(cls, values: Iterable[float]) -> "StepCdf":
        """Empirical distribution putting mass 1/n on each sample."""
        values = np.asarray(list(values), dtype=float)
        if values.size == 0:
            raise ValueError("need at least one sample")
        return cls.from_pmf(values, np.full(values.size, 1.0 / values.size))

    @classmethod
    def point_mass(cls, value: float) -> "StepCdf":
        return cls(np.array([float(value)]), np.array([1.0]))

    # ------------------------------------------------------------------
    # basic queries

    @property
    def pmf(self) -> np.ndarray:
        if self._pmf is None:
            pmf = np.diff(self.cum, prepend=0.0)
            pmf.setflags(write=False)
            object.__setattr__(self, "_pmf", pmf)
        return self._pmf

    def cdf(self, y):
        """P(Y <= y), right-continuous; 0 below the support, 1 above."""
        y_arr = np.asarray(y, dtype=float)
        idx = np.searchsorted(self.support, y_arr, side="right")
        out = np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.isscalar(y) or y_arr.ndim == 0 else out

    def cdf_left(self, y):
        """Left limit P(Y < y); equals cdf(y) except at jump points."""
        y_arr = np.asarray(y, dtype=float)
        idx = np.searchsorted(self.support, y_arr, side="left")
        out = np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if np.isscalar(y) or y_arr.ndim == 0 else out

    def quantile(self, tau: float) -> float:
        """Left-inverse quantile inf{y : F(y) >= tau} for tau in (0, 1)."""
        if not 0.0 < tau < 1.0:
            raise ValueError(f"tau must lie strictly inside (0, 1), got {tau}")
        idx = int(np.searchsorted(self.cum, tau, side="left"))
        idx = min(idx, self.support.size - 1)
        return float(self.support[idx])

    def mean(self) -> float:
        return float(np.dot(self.support, self.pmf))

    # ------------------------------------------------------------------
    # truncated means and quantile integrals

    def truncated_means(self, a: float) -> TruncatedMeans:
        """Means below and above the a-quantile cutoff.

        Satisfies lower*F(cutoff) + upper*(1 - F(cutoff)) = mean().
        """
        if not 0.0 < a < 1.0:
            raise ValueError(f"a must lie strictly inside (0, 1), got {a}")
        cutoff = self.quantile(a)
        mass = self.cdf(cutoff)
        idx = np.searchsorted(self.support, cutoff, side="right")
        pmf = self.pmf
        lower_sum = float(np.dot(self.support[:idx], pmf[:idx]))
        lower_mean = lower_sum / mass
        upper_mass = 1.0 - mass
        if upper_mass <= 1e-15:
            return TruncatedMeans(lower_mean, 0.0, mass, cutoff, True)
        upper_mean = (self.mean() - lower_sum) / upper_mass
        return TruncatedMeans(lower_mean, upper_mean, mass, cutoff, False)

    def lower_quantile_integral(self, a: float) -> float:
        """The integral of the quantile function over (0, a].

        Computed through the closed form
        E[Y | Y <= Q(a)] F(Q(a)) - Q(a) (F(Q(a)) - a),
        which is exact for step CDFs with mass points at the cutoff. The
        complementary integral over (a, 1] is mean() minus this value.
        """
        if not 0.0 < a < 1.0:
            raise ValueError(f"a must lie strictly inside (0, 1), got {a}")
        cutoff = self.quantile(a)
        mass = self.cdf(cutoff)
        idx = np.searchsorted(self.support, cutoff, side="right")
        lower_sum = float(np.dot(self.support[:idx], self.pmf[:idx]))
        return lower_sum - cutoff * (mass - a)

    # ------------------------------------------------------------------
    # comparisons and display

    def __eq__(self, other):
        if not isinstance(other, StepCdf):
            return NotImplemented
        return np.array_equal(self.support, other.support) and np.array_equal(
            self.cum, other.cum
        )

    __hash__ = None

    def allclose(self, other: "StepCdf", tol: float = 1e-12) -> bool:
        """Pointwise agreement of the two cdfs over the merged support."""
        grid = np.union1d(self.support, other.support)
        return bool(np.max(np.abs(self.cdf(grid) - other.cdf(grid))) <= tol)

    def __repr__(self):
        pts = ", ".join(
            f"{s:g}:{c:g}" for s, c in zip(self.support[:6], self.cum[:6])
        )
        more = "" if self.support.size <= 6 else f", ...{self.support.size} points"
        return f"StepCdf({pts}{more})"


def mix(f: StepCdf, g: StepCdf, eps: float) -> StepCdf:
    """Convex combination eps*F + (1-eps)*G as a step CDF on merged support."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    return weighted_mixture([f, g], [eps, 1.0 - eps])


def weighted_mixture(cdfs: Sequence[StepCdf], weights: Sequence[float]) -> StepCdf:
    """Weighted pointwise average of step CDFs; weights must sum to 1."""
    if len(cdfs) == 0 or len(cdfs) != len(weights):
        raise ValueError("need equally many cdfs and weights, at least one each")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0.0):
        raise ValueError("mixture weights must be nonnegative")
    if abs(float(w.sum()) - 1.0) > PROB_TOL:
        raise ValueError(f"mixture weights sum to {float(w.sum())!r}, not 1")
    grid = np.unique(np.concatenate([f.support for f in cdfs]))
    cum = np.zeros(grid.size)
    for wi, f in zip(w, cdfs):
        if wi != 0.0:
            cum += wi * f.cdf(grid)
    return StepCdf(grid, cum)
