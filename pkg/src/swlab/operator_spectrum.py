"""Resolvent kernel b_lambda^a, its Perron pair, the strip critical point
beta_c(a) and the free energy F^a(beta)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NumericalError
from .excursion_kernels import KernelTable
from .rw_core import SQRT2PI, Grid, tilted_tail


@dataclass(frozen=True, eq=False)
class ResolventKernel:
    a: float
    lam: float
    grid: Grid
    full: np.ndarray      # over the points [0, grid..., a]
    tail_weight: float     # T_lambda(n_max)
    n_max: int

    @property
    def matrix(self):
        return self.full[1:-1, 1:-1]

    def nystrom(self):
        return self.matrix * self.grid.weight


@dataclass(frozen=True, eq=False)
class SpectralResult:
    a: float
    lam: float
    delta: float
    eigenfunction: np.ndarray
    iterations: int
    residual: float
    v_origin: float = np.nan
    v_end: float = np.nan

    @property
    def beta(self):
        """The pinning level e^{-beta} = delta."""
        return -np.log(self.delta)


def _series_weights(n_max, lam):
    n = np.arange(n_max + 1, dtype=float)
    w = np.exp(-lam * n)
    w[0] = 0.0
    return w


def build_resolvent(table: KernelTable, lam: float) -> ResolventKernel:
    """sum_{n <= n_max} e^{-lam n} f_n^a + C(x, y) sum_{n > n_max} e^{-lam n} n^{-3/2}."""
    if lam < 0 or not np.isfinite(lam):
        raise DomainError("lambda must be finite and >= 0")
    w = _series_weights(table.n_max, lam)
    T = tilted_tail(lam, table.n_max)
    full = np.tensordot(w, table.full, axes=(0, 0)) + table.tail_full * T
    full = 0.5 * (full + full.T)
    return ResolventKernel(table.a, float(lam), table.grid, full, float(T), table.n_max)


def leading_eigen(k: ResolventKernel, tol: float = 1e-10, max_iter: int = 100000) -> SpectralResult:
    """Power iteration on the Nystrom matrix from the constant vector.

    V is normalised so that the grid quadrature of V^2 equals 1 and extended
    to the points 0 and a through the eigen-equation.
    """
    A = k.nystrom()
    w = k.grid.weight
    v = np.ones(A.shape[0])
    v /= np.sqrt(w * v @ v)
    delta = 0.0
    res = np.inf
    for it in range(1, max_iter + 1):
        u = A @ v
        delta = np.sqrt(w * u @ u)
        if not np.isfinite(delta) or delta <= 0:
            raise NumericalError("power iteration broke down")
        u /= delta
        res = np.sqrt(w * np.sum((A @ u - delta * u) ** 2)) / delta
        v = u
        if res <= tol:
            break
    else:
        raise NumericalError(f"power iteration did not converge, residual {res:.3e}")
    ext = (k.full[[0, -1], 1:-1] @ v) * w / delta
    return SpectralResult(k.a, k.lam, float(delta), v, it, float(res), float(ext[0]), float(ext[1]))


def delta_of_lambda(table: KernelTable, lam: float) -> float:
    return leading_eigen(build_resolvent(table, lam)).delta


def critical_beta_strip(table: KernelTable) -> float:
    return float(-np.log(leading_eigen(build_resolvent(table, 0.0)).delta))


def free_energy(table: KernelTable, beta: float, xtol: float = 1e-12) -> float:
    """F^a(beta) = the lambda >= 0 with delta_a(lambda) = e^{-beta}; 0 below beta_c(a)."""
    target = np.exp(-beta)
    d0 = delta_of_lambda(table, 0.0)
    if target >= d0:
        return 0.0
    lo, hi = 0.0, 0.25
    while delta_of_lambda(table, hi) > target:
        lo, hi = hi, 2 * hi
        if hi > 1e3:
            raise NumericalError("free-energy bracket failed")
    g = lambda lam: np.log(delta_of_lambda(table, lam)) + beta
    return float(brentq(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200))


def hilbert_schmidt_check(k: ResolventKernel, c: float = 1.0 / SQRT2PI):
    """Grid quadrature of int int b^2 against (c a sum e^{-lam n} n^{-3/2})^2."""
    w = k.grid.weight
    hs = float(w * w * np.sum(k.matrix ** 2))
    n = np.arange(1, k.n_max + 1, dtype=float)
    s = np.sum(np.exp(-k.lam * n) * n ** -1.5) + tilted_tail(k.lam, k.n_max)
    return hs, float((c * k.a * s) ** 2)


def invariance_defect(table: KernelTable, spec: SpectralResult) -> float:
    """max_y |sum_x w V(x)^2 Q(x, y) - V(y)^2| for the one-step kernel
    Q(x, y) = e^{beta} b_lambda(x, y) V(y)/V(x) w of the Markov renewal chain."""
    k = build_resolvent(table, spec.lam)
    V = spec.eigenfunction
    w = table.grid.weight
    Q = (k.matrix * w / spec.delta) * V[None, :] / V[:, None]
    lhs = (w * V ** 2) @ Q
    return float(np.max(np.abs(lhs - w * V ** 2)) / np.max(w * V ** 2))


def markov_kernel_rows(table: KernelTable, spec: SpectralResult, n_max=None):
    """q_n(x_i, x_j) w for n = 1..n_max as an array (n, i, j), plus the mass
    of the tail beyond n_max per row."""
    n_max = table.n_max if n_max is None else n_max
    V = spec.eigenfunction
    w = table.grid.weight
    n = np.arange(n_max + 1, dtype=float)
    disc = np.exp(-spec.lam * n) / spec.delta
    disc[0] = 0.0
    q = table.values[: n_max + 1] * disc[:, None, None] * (V[None, None, :] / V[None, :, None]) * w
    return q
