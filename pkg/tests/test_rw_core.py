import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb, zeta

from swlab.errors import ConfigurationError, DomainError, UnsupportedModelError
from swlab.rw_core import (SQRT2PI, Grid, RngStream, critical_beta, endpoint_weights, free_survival,
                           hurwitz_tail, make_custom_model, make_gaussian_model, sample_increments,
                           tilted_tail)


def test_critical_beta_series():
    # direct partial sum plus integral tail of sum n^{-3/2}
    k = np.arange(1, 10**6 + 1, dtype=float)
    z = np.sum(k ** -1.5) + 2 / np.sqrt(10**6 + 0.5)
    assert abs(np.exp(critical_beta()) - SQRT2PI / z) < 1e-10
    assert abs(np.exp(critical_beta()) - 0.9595207) < 1e-7


def test_free_survival_sparre_andersen():
    P = free_survival(40)
    n = np.arange(41)
    assert np.allclose(P, comb(2 * n, n) / 4.0 ** n, rtol=1e-12)
    assert P[0] == 1.0


def test_free_survival_monte_carlo():
    gen = np.random.default_rng(0)
    S = np.cumsum(gen.standard_normal((200000, 8)), axis=1)
    emp = np.mean(np.all(S > 0, axis=1))
    assert abs(emp - free_survival(8)[8]) < 4 * np.sqrt(emp / 200000)


def test_hurwitz_tail():
    assert np.isclose(hurwitz_tail(1.5, 0), zeta(1.5), rtol=1e-14)
    k = np.arange(11, 200001, dtype=float)
    assert abs(hurwitz_tail(1.5, 10) - np.sum(k ** -1.5) - 2 / np.sqrt(200000.5)) < 1e-10


@pytest.mark.parametrize("lam", [1e-6, 1e-3, 0.05, 1.0])
def test_tilted_tail_direct(lam):
    k = np.arange(101, 4_000_001, dtype=float)
    ref = np.sum(k ** -1.5 * np.exp(-lam * k))
    err_cut = 2 / np.sqrt(4e6) * np.exp(-lam * 4e6)
    assert abs(tilted_tail(lam, 100) - ref) < 1e-9 + err_cut


def test_tilted_tail_rejects_negative():
    with pytest.raises(DomainError):
        tilted_tail(-0.1, 5)


@pytest.mark.parametrize("order", [2, 4, 8])
def test_endpoint_weights_polynomials(order):
    # corrected trapezoid on [0, L] is exact for polynomials up to degree order
    h, L = 0.1, 40
    x = h * np.arange(L + 1)
    w = np.full(L + 1, h)
    w[: order + 1] = endpoint_weights(order, h)
    w[-(order + 1):] = endpoint_weights(order, h)[::-1]
    for deg in range(order + 1):
        exact = x[-1] ** (deg + 1) / (deg + 1)
        assert abs(w @ x ** deg - exact) <= 1e-9 * max(1.0, exact)


def test_grid():
    g = Grid(0.2, 4)
    assert np.allclose(g.points, [0.025, 0.075, 0.125, 0.175])
    assert g.weight == pytest.approx(0.05)
    assert g.integrate(np.ones(4)) == pytest.approx(0.2)
    z = Grid(0.0, 8)
    assert z.size == 1 and z.weight == 0.0
    with pytest.raises(ConfigurationError):
        Grid(0.1, 0)
    with pytest.raises(DomainError):
        Grid(-0.1, 4)


def test_rng_reproducible_and_distinct():
    a = RngStream(7, 3).generator().random(5)
    b = RngStream(7, 3).generator().random(5)
    c = RngStream(7, 4).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(7, 3).child(2) == RngStream(7, 3).child(2)
    assert RngStream(7, 3).child(2) != RngStream(7, 3).child(1)
    adv = RngStream(7, 3).advance(1).generator().random(2)
    assert not np.array_equal(adv, a[:2])


def test_rng_streams_uncorrelated():
    x = RngStream(1, 0).generator().standard_normal(200000)
    y = RngStream(1, 1).generator().standard_normal(200000)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.01


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 2**16), st.integers(0, 1000))
def test_child_streams_deterministic(seed, sid, k):
    s = RngStream(seed, sid)
    assert np.array_equal(s.child(k).generator().random(3), s.child(k).generator().random(3))


def test_gaussian_model():
    m = make_gaussian_model()
    assert m.closed_form
    assert m.density(0.0) == pytest.approx(1 / SQRT2PI, rel=1e-15)
    x = sample_increments(m, 0, 100000)
    assert abs(x.mean()) < 0.02 and abs(x.var() - 1) < 0.02


def test_custom_model_validation():
    m = make_custom_model(lambda x: np.abs(x), 2.0)
    assert not m.closed_form
    with pytest.raises(DomainError):
        make_custom_model(lambda x: np.abs(x), 3.0)
    with pytest.raises(DomainError):
        make_custom_model(lambda x: 0.5 * (x - 0.3) ** 2, SQRT2PI)
    with pytest.raises(UnsupportedModelError):
        critical_beta(m)
    with pytest.raises(UnsupportedModelError):
        sample_increments(m, 0, 3)
