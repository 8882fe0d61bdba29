import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swlab.errors import ConfigurationError, DomainError, UnsupportedModelError
from swlab.excursion_kernels import (closed_form_fn, ladder_constant, oracle_fn_bruteforce,
                                     ratio_bound_fit, survival, transfer_kernel)
from swlab.rw_core import Grid, RngStream, free_survival, make_custom_model


def test_closed_form_values():
    assert closed_form_fn(1) == pytest.approx(0.398942280401, rel=1e-12)
    assert closed_form_fn(3) == pytest.approx(0.0767765, abs=1e-7)
    with pytest.raises(DomainError):
        closed_form_fn(0)


def test_oracle_examples(model):
    assert oracle_fn_bruteforce(model, 0.0, 0.0, 0.0, 1) == pytest.approx(0.398942, abs=1e-6)
    assert oracle_fn_bruteforce(model, 0.0, 0.0, 0.0, 3) == pytest.approx(3 ** -1.5 / np.sqrt(2 * np.pi), rel=1e-8)
    v1 = oracle_fn_bruteforce(model, 0.2, 0.1, 0.15, 2)
    v2 = oracle_fn_bruteforce(model, 0.2, 0.15, 0.1, 2)
    assert v1 == pytest.approx(v2, rel=1e-12)
    with pytest.raises(UnsupportedModelError):
        oracle_fn_bruteforce(model, 0.1, 0.0, 0.0, 5)


@pytest.mark.parametrize("a", [0.0, 0.1, 0.3])
def test_table_matches_oracle_all_pairs(model, table, a):
    T = table(a, 6, 8)
    for n in (1, 2, 3, 4):
        for i, x in enumerate(T.points):
            for j, y in enumerate(T.points):
                ref = oracle_fn_bruteforce(model, a, x, y, n)
                assert abs(T.full[n, i, j] / ref - 1) < 1e-3


def test_table_structure(table):
    T = table(0.2, 8, 32)
    assert T.full.shape == (33, 10, 10)
    assert np.all(T.full[0] == 0)
    assert T.asymmetry < 1e-10
    assert np.allclose(T.full, T.full.transpose(0, 2, 1), rtol=0, atol=0)
    n = np.arange(1, 33)
    assert np.allclose(T.corner[1:], closed_form_fn(n), rtol=1e-6)
    # monotone in both arguments for walks with an interior step
    d = np.diff(T.full[2:], axis=1)
    assert np.all(d > 0)
    assert np.all(T.ratio_origin() <= 1 + 1e-9)


def test_tail_fit(table):
    T = table(0.1, 8, 512)
    n = np.arange(400, 513, dtype=float)
    pred = T.tail_full[None] * n[:, None, None] ** -1.5
    assert np.max(np.abs(T.full[400:] / pred - 1)) < 0.02


def test_survival(table, model):
    a = 0.2
    S = survival(model, a, Grid(a, 8), 64)
    assert np.allclose(S.end, free_survival(64), rtol=1e-7)
    # start further inside the strip survives less
    assert np.all(np.diff(S.values[1:], axis=1) >= -1e-15)
    assert np.all(S.origin[1:] <= S.values[1:, 0])
    assert S.at(0) == 1.0


def test_survival_sandwich_vs_ladder(table, model):
    a = 0.2
    T = table(a, 8, 4096)
    lad = ladder_constant(model, a, 0.0, RngStream(5, 0), 100000)
    n = T.n_max
    s = np.sqrt(np.pi * n) * T.surv_full[n]
    # C^a(0) <~ sqrt(pi n) P^a_x(n) <~ 1
    assert np.all(s <= 1 + 1e-6)
    assert s[0] >= lad.value - 4 * lad.uncertainty - 0.02
    assert s[0] == pytest.approx(lad.value, abs=4 * lad.uncertainty + 0.02)


def test_ladder_constant(model):
    assert ladder_constant(model, 0.2, 0.2, 0, 10).value == 1.0
    r = RngStream(9, 0)
    c1 = ladder_constant(model, 0.2, 0.0, r, 50000)
    c2 = ladder_constant(model, 0.4, 0.0, r, 50000)
    c3 = ladder_constant(model, 0.01, 0.0, r, 50000)
    assert 0 < c1.value < 1 and c2.value < c1.value < c3.value
    assert c3.value > 0.97
    assert c1.bias_bound < 0.01


def test_ratio_fit(table):
    tabs = [table(a, 8, 64) for a in (0.05, 0.1, 0.2, 0.4)]
    fit = ratio_bound_fit(tabs)
    assert all(c > 0 for c in fit.as_tuple())
    for T in tabs:
        r = T.ratio_origin()
        assert np.all(r >= fit.lower(T.a) * (1 - 1e-12))
        assert np.all(r <= fit.upper(T.a) * (1 + 1e-12))


def test_kernel_errors(model):
    with pytest.raises(ConfigurationError):
        transfer_kernel(model, 0.2, Grid(0.1, 4), 8)
    with pytest.raises(DomainError):
        transfer_kernel(model, 0.2, Grid(0.2, 4), 0)
    custom = make_custom_model(lambda x: np.abs(x), 2.0)
    with pytest.raises(UnsupportedModelError):
        ladder_constant(custom, 0.2, 0.0, 0, 10)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.01, 0.5), st.integers(1, 6))
def test_kernel_properties(a, M):
    from swlab.rw_core import make_gaussian_model
    T = transfer_kernel(make_gaussian_model(), a, Grid(a, M), 16)
    n = np.arange(1, 17)
    assert np.allclose(T.corner[1:], closed_form_fn(n), rtol=1e-5)
    assert np.all(T.full[1:] > 0)
    assert np.all(T.full[1:] <= closed_form_fn(n)[:, None, None] * (1 + 1e-6))
