import numpy as np
import pytest

from gaitbch.errors import ConvergenceError
from gaitbch.quadrature import composite_rule, disc_rule, interval_rule, refine, square_rule


def test_interval_rule_polynomial_exact():
    x, w = interval_rule(-1.0, 2.0, 5)
    assert w @ x**9 == pytest.approx((2.0**10 - 1.0) / 10.0, rel=1e-13)


def test_composite_rule_covers_breaks():
    x, w = composite_rule([0.0, 0.3, 1.0], panels=3, n=4)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all((x > 0) & (x < 1))
    assert len(x) == 2 * 3 * 4


def test_disc_rule_area_and_moments():
    pts, w = disc_rule((0.2, -0.1), 0.5, 8)
    assert w.sum() == pytest.approx(np.pi * 0.25, rel=1e-13)
    d = pts - np.array([0.2, -0.1])
    assert w @ d[:, 0] == pytest.approx(0.0, abs=1e-15)
    # second moment of a disc: pi R^4 / 4
    assert w @ d[:, 0] ** 2 == pytest.approx(np.pi * 0.5**4 / 4.0, rel=1e-13)


def test_square_rule_area():
    pts, w = square_rule((1.0, 2.0), 0.25, 6)
    assert w.sum() == pytest.approx(0.25, rel=1e-14)
    assert pts[:, 0].min() > 0.75 and pts[:, 1].max() < 2.25


def test_refine_converges():
    val = refine(lambda n: np.array([1.0 + 1.0 / n**4]), 1e-8, start=4)
    assert val[0] == pytest.approx(1.0, abs=1e-7)


def test_refine_reports_achieved():
    with pytest.raises(ConvergenceError) as info:
        refine(lambda n: np.array([1.0 / n]), 1e-12, start=4, limit=64)
    assert info.value.achieved > 0
