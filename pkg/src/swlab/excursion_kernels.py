"""Excursion kernels f_n^a(x, y), survival probabilities P^a_x(n) and the
ladder-height constant C^a(x).

The kernels are obtained by iterating the one-step operator on the half-line
[a, inf) sampled on a uniform auxiliary grid.  The left end of that grid is a
hard boundary but the integrands are smooth up to it, so the trapezoid rule
with Euler-Maclaurin end corrections keeps high order.  Convolutions with the
increment density are done by FFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import fft
from scipy.optimize import linprog

from .errors import ConfigurationError, DomainError, PrecisionError, UnsupportedModelError
from .rw_core import (SQRT2PI, Grid, IncrementModel, as_generator, endpoint_weights,
                      free_survival, make_gaussian_model)

DEFAULT_H = 0.1
DEFAULT_ORDER = 8


def closed_form_fn(n, model: IncrementModel | None = None):
    """f_n = n^{-3/2}/sqrt(2 pi) for the Gaussian walk."""
    model = model or make_gaussian_model()
    if not model.closed_form:
        raise UnsupportedModelError("no closed form for this model")
    arr = np.asarray(n)
    if np.any(arr < 1):
        raise DomainError("n must be >= 1")
    out = np.asarray(arr, dtype=float) ** -1.5 / SQRT2PI
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class SurvivalTable:
    """P^a_x(n) for n = 0..n_max on the strip grid, plus the start points 0 and a."""

    a: float
    grid: Grid
    n_max: int
    values: np.ndarray
    origin: np.ndarray
    end: np.ndarray

    def at(self, n, i=None):
        return self.origin[n] if i is None else self.values[n, i]


@dataclass(frozen=True, eq=False)
class KernelTable:
    """f_n^a(x, y) for n = 1..n_max at the points [0, grid..., a].

    ``full[n, p, q]`` is indexed by the step count directly (row 0 is zero).
    ``tail`` holds C(x, y) with f_n^a ~ C n^{-3/2} beyond n_max.
    """

    a: float
    grid: Grid
    n_max: int
    points: np.ndarray
    full: np.ndarray
    tail_full: np.ndarray
    surv_full: np.ndarray
    h: float
    order: int
    model: IncrementModel = field(default_factory=make_gaussian_model)
    asymmetry: float = 0.0

    @property
    def M(self):
        return self.grid.size

    @property
    def values(self):
        """Grid block, shape (n_max + 1, M, M)."""
        return self.full[:, 1:-1, 1:-1]

    @property
    def from_origin(self):
        """f_n^a(0, x_j), shape (n_max + 1, M)."""
        return self.full[:, 0, 1:-1]

    @property
    def origin_origin(self):
        return self.full[:, 0, 0]

    @property
    def corner(self):
        """f_n^a(a, a), which equals f_n."""
        return self.full[:, -1, -1]

    @property
    def tail(self):
        return self.tail_full[1:-1, 1:-1]

    def log_values(self):
        with np.errstate(divide="ignore"):
            return np.log(self.values)

    def survival_table(self) -> SurvivalTable:
        return SurvivalTable(self.a, self.grid, self.n_max, self.surv_full[:, 1:-1],
                             self.surv_full[:, 0], self.surv_full[:, -1])

    def ratio_origin(self):
        """f_n^a(0, 0) / f_n for n = 1..n_max (Gaussian only)."""
        n = np.arange(1, self.n_max + 1)
        return self.origin_origin[1:] / closed_form_fn(n, self.model)


def _halfline_dp(model, a, pts, n_max, h, order, want_kernel=True, tol=1e-10):
    """Iterate G_{m+1}(x, s) = int_a^inf G_m(x, u) rho(s - u) du on s = a + h k.

    Returns f[n, p, q] for n = 0..n_max (row 0 unused) and surv[n, p].
    """
    rho = model.density
    P = len(pts)
    span = model.support_halfwidth
    Lfull = int(np.ceil((8.0 * np.sqrt(n_max) + span + 3.0) / h))
    s = a + h * np.arange(Lfull)
    wts = np.full(Lfull, h)
    wts[:order + 1] = endpoint_weights(order, h)
    B = int(np.ceil(span / h))
    kern = rho(h * np.arange(-B, B + 1))
    # end factor w(s) rho(y - s); only s within the kernel support of [0, a] matters
    nb = min(B + 1, Lfull)
    R = wts[:nb, None] * rho(pts[None, :] - s[:nb, None])
    f = np.zeros((n_max + 1, P, P)) if want_kernel else None
    surv = np.empty((n_max + 1, P))
    surv[0] = 1.0
    if want_kernel:
        f[1] = rho(pts[:, None] - pts[None, :])
    cache = {}
    L0 = min(Lfull, 512 * int(np.ceil((8.0 + span + 3.0) / h / 512)))
    G = rho(s[None, :L0] - pts[:, None])
    for m in range(1, n_max + 1):
        L = G.shape[1]
        surv[m] = G @ wts[:L]
        if want_kernel and m < n_max:
            f[m + 1] = G[:, :nb] @ R
        if m == n_max:
            break
        # far-end truncation check: the density must have decayed at the window edge
        edge = np.max(G[:, -1]) * h
        if L == Lfull and edge > tol:
            raise PrecisionError(f"half-line truncation error {edge:.2e} exceeds {tol:.0e}")
        Lnew = min(Lfull, 512 * int(np.ceil((8.0 * np.sqrt(m + 1) + span + 3.0) / h / 512)))
        nfft = fft.next_fast_len(Lnew + 2 * B)
        if nfft not in cache:
            cache[nfft] = fft.rfft(kern, nfft)
        X = fft.rfft(G * wts[:L], nfft, axis=1)
        G = fft.irfft(X * cache[nfft], nfft, axis=1)[:, B:B + Lnew]
    return f, surv


def _points(a, grid):
    return np.concatenate(([0.0], grid.points, [a]))


def _check_args(a, grid, n_max):
    if grid is None or grid.size == 0:
        raise ConfigurationError("grid is empty")
    if a < 0:
        raise DomainError("a must be >= 0")
    if abs(grid.a - a) > 1e-15:
        raise ConfigurationError("grid does not match strip width")
    if n_max < 1:
        raise DomainError("n_max must be >= 1")


def _self_check(model, surv_end, n_max, tol=1e-7):
    # the start point a sees the half-line from its own boundary: Sparre-Andersen
    ref = free_survival(n_max)
    err = np.max(np.abs(surv_end - ref) / ref)
    if err > tol:
        raise PrecisionError(f"survival self-check failed, relative error {err:.2e}")


def transfer_kernel(model: IncrementModel, a: float, grid: Grid, n_max: int,
                    h: Optional[float] = None, order: int = DEFAULT_ORDER) -> KernelTable:
    """Tabulate f_n^a on the strip grid for n <= n_max, with tail coefficients."""
    _check_args(a, grid, n_max)
    h = DEFAULT_H if h is None else float(h)
    pts = _points(a, grid)
    f, surv = _halfline_dp(model, a, pts, n_max, h, order)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.abs(f - f.transpose(0, 2, 1))[1:] / f[1:]
    asym = float(np.nanmax(rel))
    f = 0.5 * (f + f.transpose(0, 2, 1))
    _self_check(model, surv[:, -1], n_max)
    lo = max(1, (3 * n_max) // 4)
    n = np.arange(lo, n_max + 1, dtype=float)
    tail = np.mean(f[lo:] * n[:, None, None] ** 1.5, axis=0)
    return KernelTable(float(a), grid, int(n_max), pts, f, tail, surv, h, int(order), model, asym)


def survival(model: IncrementModel, a: float, grid: Grid, n_max: int,
             h: Optional[float] = None, order: int = DEFAULT_ORDER) -> SurvivalTable:
    """P^a_x(n) = P_x(S_1 > a, ..., S_n > a) on the strip grid."""
    _check_args(a, grid, n_max)
    h = DEFAULT_H if h is None else float(h)
    pts = _points(a, grid)
    _, surv = _halfline_dp(model, a, pts, n_max, h, order, want_kernel=False)
    _self_check(model, surv[:, -1], n_max)
    return SurvivalTable(float(a), grid, int(n_max), surv[:, 1:-1], surv[:, 0], surv[:, -1])


def oracle_fn_bruteforce(model: IncrementModel, a: float, x: float, y: float, n: int,
                         nodes: int = 24, span: float = 10.0) -> float:
    """Direct (n-1)-dimensional tensor Gauss-Legendre quadrature of the
    iterated kernel integral over [a, a + span]^{n-1}."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > 4:
        raise UnsupportedModelError("brute-force oracle limited to n <= 4")
    rho = model.density
    if n == 1:
        return float(rho(x - y))
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    panels = int(np.ceil(span))
    edges = a + np.linspace(0.0, span, panels + 1)
    s = np.concatenate([0.5 * (r - l) * gx + 0.5 * (r + l) for l, r in zip(edges[:-1], edges[1:])])
    w = np.concatenate([0.5 * (r - l) * gw for l, r in zip(edges[:-1], edges[1:])])
    v = w * rho(s - x)
    T = rho(s[None, :] - s[:, None]) * w[None, :]
    for _ in range(n - 2):
        v = v @ T
    return float(v @ rho(y - s))


@dataclass(frozen=True)
class LadderEstimate:
    value: float
    stderr: float
    truncated_fraction: float
    samples: int

    @property
    def bias_bound(self):
        return 0.5 * self.truncated_fraction

    @property
    def uncertainty(self):
        return self.stderr + self.bias_bound

    def __float__(self):
        return self.value


def ladder_constant(model: IncrementModel, a: float, x: float, rng, samples: int,
                    max_steps: int = 1 << 16) -> LadderEstimate:
    """Monte Carlo P(H_1 >= a - x) for the first strict ascending ladder height.

    Walks are cut after ``max_steps``; a cut walk counts as 1/2 and the
    resulting bias is bounded by half the cut fraction.
    """
    if samples <= 0:
        raise DomainError("samples must be positive")
    if not 0.0 <= x <= a:
        raise DomainError("need 0 <= x <= a")
    if model.sampler is None:
        raise UnsupportedModelError(f"model '{model.variant}' has no sampler")
    thr = a - x
    if thr == 0.0:
        return LadderEstimate(1.0, 0.0, 0.0, int(samples))
    gen = as_generator(rng)
    pos = np.zeros(samples)
    alive = np.arange(samples)
    hits = 0
    steps = 0
    while alive.size and steps < max_steps:
        pos[alive] += model.sampler(gen, alive.size)
        up = pos[alive] > 0
        hits += int(np.count_nonzero(pos[alive[up]] >= thr))
        alive = alive[~up]
        steps += 1
    cut = alive.size
    p = (hits + 0.5 * cut) / samples
    se = np.sqrt(max(p * (1 - p), 0.0) / samples)
    return LadderEstimate(float(p), float(se), cut / samples, int(samples))


@dataclass(frozen=True)
class RatioBoundFit:
    """Constants with exp(-c0 a - c0t a^2) <= f_n^a/f_n <= exp(-c1 a + c1t a^2)."""

    c0: float
    c0t: float
    c1: float
    c1t: float
    slack_lower: float
    slack_upper: float

    def lower(self, a):
        return np.exp(-self.c0 * a - self.c0t * a * a)

    def upper(self, a):
        return np.exp(-self.c1 * a + self.c1t * a * a)

    def as_tuple(self):
        return (self.c0, self.c0t, self.c1, self.c1t)


def ratio_bound_fit(tables) -> RatioBoundFit:
    """Fit the ratio-bound constants uniformly over the given tables.

    With L(a, n) = -log(f_n^a(0,0)/f_n), the lower envelope needs
    L/a <= c0 + c0t a for every (a, n) and the upper one L/a >= c1 - c1t a.
    Each pair is the tightest linear envelope in a (LP).  The n = 1 ratio is
    identically 1, which only constrains c1t >= c1 / a; that is enforced
    after fitting the upper pair on n >= 2.
    """
    tables = list(tables)
    if not tables:
        raise DomainError("need at least one table")
    avals = np.array([t.a for t in tables])
    if np.any(avals <= 0):
        raise DomainError("ratio fit needs a > 0")
    upp, low = [], []
    for t in tables:
        L = -np.log(t.ratio_origin())
        upp.append((t.a, np.max(L) / t.a))
        low.append((t.a, np.min(L[1:]) / t.a if len(L) > 1 else 0.0))
    # c0 + c0t a >= s for all points, minimise sum over a, both >= 0
    A = np.array([[-1.0, -a] for a, _ in upp])
    b = np.array([-s for _, s in upp])
    cost = np.array([len(upp), avals.sum()])
    r0 = linprog(cost, A_ub=A, b_ub=b, bounds=[(0, None), (0, None)], method="highs")
    # c1 - c1t a <= s, maximise sum over a
    A = np.array([[1.0, -a] for a, _ in low])
    b = np.array([s for _, s in low])
    r1 = linprog(np.array([-cost[0], cost[1]]), A_ub=A, b_ub=b, bounds=[(0, None), (0, None)], method="highs")
    if not (r0.success and r1.success):
        raise DomainError(f"ratio-bound LP failed: {r0.message} / {r1.message}")
    c0, c0t = r0.x
    c1, c1t = r1.x
    c1t = max(c1t, c1 / avals.min())
    sl = min(c0 + c0t * a - s for a, s in upp)
    su = min(s - (c1 - c1t * a) for a, s in low)
    return RatioBoundFit(float(c0), float(c0t), float(c1), float(c1t), float(sl), float(su))
