import numpy as np
import pytest

from swlab.errors import DomainError
from swlab.pinning import (condition_A_score, constant_pinning, eval_smooth_bump, smooth_bump,
                           smooth_bump_g, zero_pinning)
from swlab.rw_core import Grid, critical_beta

BC = critical_beta()


def test_constant_score_zero():
    a = 0.1
    p = constant_pinning(a, BC - np.log(a))
    assert condition_A_score(p, BC) == pytest.approx(0.0, abs=1e-12)
    assert p.exp_integral == pytest.approx(np.exp(BC))


def test_smooth_bump_values():
    assert eval_smooth_bump(0.25, 0.1) == pytest.approx(BC + np.log(4.0625), rel=1e-14)
    assert eval_smooth_bump(0.25, 0.25) == pytest.approx(BC + 2 * np.log(0.25), rel=1e-14)
    with pytest.raises(DomainError):
        eval_smooth_bump(0.25, 0.3)
    with pytest.raises(DomainError):
        eval_smooth_bump(0.0, 0.0)


def test_smooth_bump_integral_sandwich():
    a = 0.25
    eps = a * a
    p = smooth_bump(a)
    g_int = p.exp_integral / np.exp(BC)
    assert (1 / a + eps) * (a - eps) <= g_int <= (1 / a + eps) * a
    s = condition_A_score(p, BC)
    assert abs(s) <= 1.5
    assert np.exp(-1.5 * a) <= g_int <= np.exp(1.5 * a)


def test_smooth_bump_shape():
    a = 0.2
    x = np.linspace(0, a, 201)
    g = smooth_bump_g(a, x)
    assert np.all(np.diff(g) <= 1e-15)     # nonincreasing towards the edge
    assert np.allclose(g[x <= a - a * a], 1 / a + a * a)


def test_score_examples():
    s = condition_A_score(smooth_bump(0.1), BC)
    assert -1.5 <= s <= 1.5
    z = condition_A_score(zero_pinning(0.1), BC)
    assert z == pytest.approx((np.log(0.1) - BC) / 0.1, rel=1e-12)
    assert z == pytest.approx(-22.6, abs=0.1)
    assert abs(z) > 2


def test_grid_quadrature_score():
    p = smooth_bump(0.1)
    g = Grid(0.1, 256)
    assert condition_A_score(p, BC, grid=g) == pytest.approx(condition_A_score(p, BC), abs=2e-3)


def test_pinning_errors():
    with pytest.raises(DomainError):
        constant_pinning(0.0, 1.0)
    with pytest.raises(DomainError):
        constant_pinning(0.1, 1.0).evaluate(-0.01)
    assert constant_pinning(0.1, 0.7).describe() == "constant(beta=0.7)"
