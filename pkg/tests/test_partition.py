import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swlab.errors import DomainError, SizeError
from swlab.excursion_kernels import closed_form_fn
from swlab.partition import (contact_set_density_ratio, enumerate_renewal, partition_sandwich,
                             renewal_set_probability, renewal_tables, strip_partition,
                             strip_partition_enumerated, strip_set_probability)
from swlab.pinning import constant_pinning, smooth_bump, zero_pinning
from swlab.rw_core import critical_beta

BC = critical_beta()


def test_renewal_examples():
    R = renewal_tables(BC, 4096)
    q1, q2 = R.q[1], R.q[2]
    assert R.Zc[1] == pytest.approx(np.exp(BC) / np.sqrt(2 * np.pi), rel=1e-14)
    assert R.Zc[1] == pytest.approx(0.38279, abs=1e-5)
    assert R.Zc[2] == pytest.approx(q2 + q1 ** 2, rel=1e-13)
    assert R.log_Zc[0] == 0.0
    assert np.all(R.Zc <= 1 + 1e-12)
    # free partition function settles (Cauchy trend)
    d = np.abs(np.diff(R.Zf[[512, 1024, 2048, 4096]]))
    assert np.all(np.diff(d) < 0)


def test_gap_law_is_probability():
    R = renewal_tables(BC, 64)
    assert R.q[1:].sum() + R.Q[64] == pytest.approx(1.0, rel=1e-13)
    assert np.allclose(R.Q[:-1] - R.Q[1:], R.q[1:], rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.0, 1.0), st.integers(1, 10), st.sampled_from("cf"))
def test_recursion_vs_subsets(dbeta, N, alpha):
    beta = BC + dbeta
    R = renewal_tables(beta, N)
    E = enumerate_renewal(beta, N, alpha)
    ref = sum(E.values())
    got = R.Zc[N] if alpha == "c" else R.Zf[N]
    assert abs(got / ref - 1) < 1e-12
    probs = [renewal_set_probability(A, R, alpha) for A in E]
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)


def test_strip_single_step(table):
    from scipy.integrate import quad
    from swlab.rw_core import make_gaussian_model
    a, beta = 0.3, 0.4
    T = table(a, 64, 4)
    S = strip_partition(constant_pinning(a, beta), T, 1)
    ref = np.exp(beta) * quad(make_gaussian_model().density, 0, a)[0]
    assert S.Zc_total == pytest.approx(ref, rel=1e-4)


@pytest.mark.parametrize("kind", ["smooth", "constant", "zero"])
def test_strip_dp_vs_expansion(table, kind):
    a = 0.3
    T = table(a, 4, 8)
    p = {"smooth": smooth_bump(a), "constant": constant_pinning(a, 1.7), "zero": zero_pinning(a)}[kind]
    for N in (1, 4, 8):
        S = strip_partition(p, T, N)
        for alpha in "cf":
            lz, E = strip_partition_enumerated(S, alpha)
            got = S.log_Zc[N] if alpha == "c" else S.log_Zf[N]
            assert abs(np.expm1(got - lz)) < 1e-10
            tot = sum(strip_set_probability(A, S, alpha) for A in E)
            assert tot == pytest.approx(1.0, abs=1e-10)
    assert np.all(S.Wc >= 0)


def test_tilt_invariance(table):
    a = 0.2
    T = table(a, 8, 64)
    p = constant_pinning(a, 2.5)
    S0 = strip_partition(p, T, 64)
    S1 = strip_partition(p, T, 64, tilt=0.3)
    assert np.allclose(S0.log_Zc[1:], S1.log_Zc[1:], rtol=1e-12, atol=1e-12)
    assert np.allclose(S0.log_Zf, S1.log_Zf, rtol=1e-12, atol=1e-12)


def test_single_grid_point_reduces_to_kernel(table):
    a = 1e-3
    T = table(a, 1, 32)
    S = strip_partition(zero_pinning(a), T, 1)
    assert S.Zc_total / a == pytest.approx(T.full[1, 0, 1], rel=1e-12)
    assert T.full[5, 0, 1] == pytest.approx(closed_form_fn(5), rel=5e-3)


def test_density_ratio(table):
    N = 8
    vals = []
    for a in (0.2, 0.1, 0.05):
        T = table(a, 8, N)
        bca_like = BC - np.log(a)
        p = constant_pinning(a, bca_like)
        S = strip_partition(p, T, N)
        R = renewal_tables(BC, N)
        vals.append(contact_set_density_ratio((3, 8), S, R, "c"))
        # single contact at N: closed form from the one-term expansion
        w = S.grid.weight
        num = w * S.K0[N].sum()
        r1 = contact_set_density_ratio((N,), S, R, "c")
        assert r1 == pytest.approx(num / S.Zc_total / renewal_set_probability((N,), R, "c"), rel=1e-12)
    assert abs(vals[-1] - 1) < abs(vals[0] - 1)
    with pytest.raises(DomainError):
        contact_set_density_ratio((3, 2, 8), S, R, "c")
    with pytest.raises(DomainError):
        contact_set_density_ratio((3,), S, R, "c")


def test_density_ratio_bound(table):
    # ratio bounded by the partition quotient of the sandwich
    a, N = 0.1, 128
    T = table(a, 16, N)
    p = smooth_bump(a)
    S = strip_partition(p, T, N)
    B = partition_sandwich(p, T, N)
    R = renewal_tables(BC + B.C_prime * a, N)
    bound = B.upper_c[N] / B.lower_c[N]
    gen = np.random.default_rng(1)
    for _ in range(30):
        A = tuple(sorted(gen.choice(np.arange(1, N), size=gen.integers(0, 6), replace=False).tolist())) + (N,)
        assert contact_set_density_ratio(A, S, R, "c") <= bound


def test_size_guard(table):
    T = table(0.1, 32, 64)
    with pytest.raises(SizeError) as e:
        strip_partition(smooth_bump(0.1), T, 10**6)
    assert e.value.suggestion["N"] < 10**6


def test_errors(table):
    with pytest.raises(DomainError):
        renewal_tables(BC, 0)
    with pytest.raises(DomainError):
        strip_partition(smooth_bump(0.2), table(0.1, 8, 8), 4)
