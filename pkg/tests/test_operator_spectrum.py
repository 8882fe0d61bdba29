import numpy as np
import pytest

from swlab.errors import DomainError
from swlab.operator_spectrum import (build_resolvent, critical_beta_strip, delta_of_lambda, free_energy,
                                     hilbert_schmidt_check, invariance_defect, leading_eigen,
                                     markov_kernel_rows)
from swlab.rw_core import Grid, critical_beta, SQRT2PI
from swlab.excursion_kernels import transfer_kernel

BC = critical_beta()


def test_resolvent_small_a_limit(table):
    a = 0.05
    k = build_resolvent(table(a, 32, 4096), 0.0)
    avg = k.matrix.sum() * k.grid.weight ** 2 / a ** 2
    assert avg == pytest.approx(np.exp(-BC), rel=0.05)


def test_resolvent_errors(table):
    with pytest.raises(DomainError):
        build_resolvent(table(0.1, 8, 64), -1.0)


def test_scalar_case(model):
    T = transfer_kernel(model, 0.1, Grid(0.1, 1), 64)
    k = build_resolvent(T, 0.2)
    sp = leading_eigen(k)
    assert sp.delta == pytest.approx(k.matrix[0, 0] * k.grid.weight, rel=1e-12)


def test_critical_point_bounds(table):
    g = {}
    for a in (0.4, 0.2, 0.1, 0.05):
        g[a] = critical_beta_strip(table(a, 32, 4096))
    gaps = {a: np.log(a) + b - BC for a, b in g.items()}
    assert all(v > 0 for v in gaps.values())
    C = max(v / a for a, v in gaps.items())
    assert gaps[0.1] <= C * 0.1 * (1 + 1e-12)
    dev = [abs(a * np.exp(g[a]) - np.exp(BC)) for a in (0.4, 0.2, 0.1, 0.05)]
    assert np.all(np.diff(dev) < 0)
    assert abs(g[0.05] - (-np.log(0.05) + BC)) <= 0.05 * C


def test_refinement_stability(table):
    a = 0.1
    b = critical_beta_strip(table(a, 32, 2048))
    assert abs(critical_beta_strip(table(a, 64, 2048)) - b) < 1e-4
    assert abs(critical_beta_strip(table(a, 32, 4096)) - b) < 5e-4


def test_free_energy(table):
    T = table(0.1, 32, 1024)
    bca = critical_beta_strip(T)
    assert free_energy(T, bca) == 0.0
    assert free_energy(T, bca - 0.3) == 0.0
    F = free_energy(T, bca + 0.5)
    assert F > 0
    assert abs(delta_of_lambda(T, F) - np.exp(-(bca + 0.5))) <= 1e-10
    betas = bca + np.array([0.1, 0.2, 0.4, 0.8])
    Fs = [free_energy(T, b) for b in betas]
    assert np.all(np.diff(Fs) > 0)


def test_delta_decreasing(table):
    T = table(0.2, 16, 512)
    d = [delta_of_lambda(T, lam) for lam in (0.0, 0.01, 0.1, 1.0)]
    assert np.all(np.diff(d) < 0)


def test_hilbert_schmidt(table):
    for a in (0.05, 0.2):
        for lam in (0.0, 0.1):
            hs, bound = hilbert_schmidt_check(build_resolvent(table(a, 32, 4096 if a == 0.05 else 1024), lam))
            assert hs <= bound


def test_invariance_and_eigen(table):
    T = table(0.2, 16, 512)
    sp = leading_eigen(build_resolvent(T, 0.05))
    assert sp.residual <= 1e-10
    assert np.all(sp.eigenfunction > 0)
    assert T.grid.weight * np.sum(sp.eigenfunction ** 2) == pytest.approx(1.0, rel=1e-12)
    assert invariance_defect(T, sp) < 1e-8
    q = markov_kernel_rows(T, sp)
    assert np.all(q >= 0)
