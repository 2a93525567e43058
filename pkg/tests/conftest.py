import numpy as np
import pytest

from tebounds import Cell, CellSensitivity, StepCdf


@pytest.fixture
def bernoulli_half() -> StepCdf:
    return StepCdf.from_pmf([0.0, 1.0], [0.5, 0.5])


@pytest.fixture
def fixture_cell(bernoulli_half) -> Cell:
    """Both arms Bernoulli(0.5), propensity one half, single cell."""
    return Cell("w", 1.0, 0.5, bernoulli_half, bernoulli_half)


@pytest.fixture
def fixture_sens() -> CellSensitivity:
    return CellSensitivity(0.3, 0.7)


def random_step_cdf(rng, max_support=8, integer=False, span=2.0) -> StepCdf:
    k = int(rng.integers(1, max_support + 1))
    if integer:
        values = rng.choice(np.arange(-4, 5), size=k, replace=False).astype(float)
    else:
        values = rng.uniform(-span, span, size=k)
    masses = rng.dirichlet(np.ones(k))
    return StepCdf.from_pmf(values, masses)


def random_cell(rng, cell_id="w", weight=1.0, max_support=8, integer=False) -> Cell:
    p1 = float(rng.uniform(0.15, 0.85))
    return Cell(
        cell_id,
        weight,
        p1,
        random_step_cdf(rng, max_support, integer=integer),
        random_step_cdf(rng, max_support, integer=integer),
    )


def random_sensitivity(rng, p1, kind="strict") -> CellSensitivity:
    """Sample bounds around p1: strict, half-collapsed, or collapsed."""
    if kind == "collapsed":
        return CellSensitivity(p1, p1)
    margin_lo = float(rng.uniform(0.02, 1.0) * (p1 - 0.01))
    margin_hi = float(rng.uniform(0.02, 1.0) * (1.0 - p1 - 0.01))
    if kind == "half-lo":
        return CellSensitivity(p1, p1 + margin_hi)
    if kind == "half-hi":
        return CellSensitivity(p1 - margin_lo, p1)
    return CellSensitivity(p1 - margin_lo, p1 + margin_hi)


def random_two_cell_problem(rng):
    """Two cells with random weights plus random strict sensitivities."""
    w1 = float(rng.uniform(0.25, 0.75))
    cells = [
        random_cell(rng, "w=a", w1, max_support=5),
        random_cell(rng, "w=b", 1.0 - w1, max_support=5),
    ]
    sens = [random_sensitivity(rng, c.p1) for c in cells]
    return cells, sens
