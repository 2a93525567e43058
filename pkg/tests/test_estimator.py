import numpy as np
import pytest
from sklearn.base import clone

from tebounds import CDependenceSensitivity, InputError

Y = [0, 1, 0, 1, 2, 3, 2, 3]
X = [1, 1, 0, 0, 1, 1, 0, 0]
W = ["a", "a", "a", "a", "b", "b", "b", "b"]


def test_docstring_example():
    import doctest

    import tebounds.estimator as mod

    assert doctest.testmod(mod).failed == 0


class TestSklearnSurface:
    def test_get_params_round_trip(self):
        est = CDependenceSensitivity(grid=[1.0, 3.0], overlap_epsilon=0.01)
        params = est.get_params()
        est2 = CDependenceSensitivity(**params)
        assert est2.get_params() == params

    def test_clone(self):
        est = CDependenceSensitivity(sensitivity="conditional_c", grid=[0.0, 0.1])
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_set_params(self):
        est = CDependenceSensitivity()
        est.set_params(grid=[1.0])
        assert est.grid == [1.0]

    def test_fit_returns_self(self):
        est = CDependenceSensitivity(grid=[1.0])
        assert est.fit(Y, X, W) is est
        assert est.n_cells_ == 2


class TestBounds:
    def test_ate_over_grid(self):
        est = CDependenceSensitivity(grid=[1.0, 2.0]).fit(Y, X, W)
        b1, b2 = est.bounds("ate")
        assert (b1.lo, b1.hi) == (0.0, 0.0)
        assert b2.lo == pytest.approx(-0.25, abs=1e-12)
        assert b2.hi == pytest.approx(0.25, abs=1e-12)

    def test_conditional_c_grid(self):
        est = CDependenceSensitivity(sensitivity="conditional_c", grid=[0.0, 0.2]).fit(
            Y, X, W
        )
        b1, b2 = est.bounds("ate")
        assert (b1.lo, b1.hi) == (0.0, 0.0)
        assert b2.lo == pytest.approx(-2 / 7, abs=1e-12)
        assert b2.hi == pytest.approx(2 / 7, abs=1e-12)

    def test_per_cell_estimand(self):
        est = CDependenceSensitivity(grid=[2.0]).fit(Y, X, W)
        (b,) = est.bounds("cate", cell="w1=b")
        assert b.lo == pytest.approx(-0.25, abs=1e-12)
        assert b.hi == pytest.approx(0.25, abs=1e-12)

    def test_without_covariates_single_cell(self):
        est = CDependenceSensitivity(grid=[1.0]).fit([0, 1, 0, 1], [1, 1, 0, 0])
        assert est.n_cells_ == 1

    def test_requires_fit(self):
        with pytest.raises(InputError):
            CDependenceSensitivity().bounds("ate")

    def test_rejects_unknown_sensitivity_kind(self):
        est = CDependenceSensitivity(sensitivity="rosenbaum").fit(Y, X, W)
        with pytest.raises(InputError):
            est.bounds("ate")

    def test_two_column_covariates(self):
        w2 = np.column_stack([W, ["u"] * 8])
        est = CDependenceSensitivity(grid=[1.0]).fit(Y, X, w2)
        assert est.n_cells_ == 2
        assert est.cells_[0].id == "w1=a|w2=u"


class TestReportAndBreakdown:
    def test_report(self):
        est = CDependenceSensitivity(grid=[1.0, 2.0]).fit(Y, X, W)
        report = est.report(["ate", ("qte", {"tau": 0.5})])
        assert len(report.rows) == 4
        assert report.rows[0].estimand == "ate"

    def test_breakdown(self):
        est = CDependenceSensitivity(grid=[1.0]).fit(Y, X, W)
        assert est.breakdown("ate", target=0.0) == 1.0
        lam = est.breakdown("ate", target=0.1, lambda_max=20.0)
        assert lam == pytest.approx(1.25, abs=1e-4)
