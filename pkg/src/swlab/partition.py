"""Partition functions: renewal recursions for standard wetting and the
contact-time dynamic programme for the strip model."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, SizeError
from .excursion_kernels import KernelTable, closed_form_fn
from .pinning import PinningFunction
from .rw_core import Grid, critical_beta, free_survival, hurwitz_tail, SQRT2PI

WORK_BUDGET = 1.2e11


@dataclass(frozen=True, eq=False)
class RenewalTables:
    """Standard wetting tables: q(n) = e^{beta_c} f_n and the renewal sums."""

    beta: float
    N: int
    q: np.ndarray
    Q: np.ndarray
    log_Zc: np.ndarray
    log_Zf: np.ndarray
    log_P: np.ndarray
    beta_c: float

    @property
    def Zc(self):
        return np.exp(self.log_Zc)

    @property
    def Zf(self):
        return np.exp(self.log_Zf)

    @property
    def log_gap_weights(self):
        """log(e^{beta - beta_c} q(t)), t = 0..N (entry 0 is -inf)."""
        with np.errstate(divide="ignore"):
            return self.beta - self.beta_c + np.log(self.q)


def _gaussian_q(N, beta_c):
    n = np.arange(1, N + 1)
    q = np.zeros(N + 1)
    q[1:] = np.exp(beta_c) * closed_form_fn(n)
    Q = np.empty(N + 1)
    c = np.exp(beta_c) / SQRT2PI
    for k in range(N + 1):
        Q[k] = c * hurwitz_tail(1.5, k)
    return q, Q


def renewal_tables(beta: float, N: int, survival: Optional[np.ndarray] = None,
                   q: Optional[np.ndarray] = None, beta_c: Optional[float] = None) -> RenewalTables:
    """Z~^c_{beta,m} = sum_t e^{beta - beta_c} q(t) Z~^c_{beta,m-t} and
    Z~^f_{beta,m} = sum_{t=0}^m Z~^c_{beta,t} P(m - t), accumulated in logs.

    ``q`` overrides the Gaussian gap law (array indexed 0..N, q[0] ignored);
    ``survival`` overrides the Sparre-Andersen P(n).
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    bc = critical_beta() if beta_c is None else float(beta_c)
    if q is None:
        q, Q = _gaussian_q(N, bc)
    else:
        q = np.asarray(q, dtype=float).copy()
        if len(q) < N + 1:
            raise DomainError("gap weights must cover 0..N")
        q = q[: N + 1]
        q[0] = 0.0
        Q = np.concatenate([np.cumsum(q[::-1])[::-1][1:], [0.0]])
    P = free_survival(N) if survival is None else np.asarray(survival, dtype=float)[: N + 1]
    if len(P) < N + 1:
        raise DomainError("survival table must cover 0..N")
    with np.errstate(divide="ignore"):
        lq = beta - bc + np.log(q)
        lP = np.log(P)
    lZ = np.empty(N + 1)
    lZ[0] = 0.0
    for m in range(1, N + 1):
        lZ[m] = logsumexp(lq[1:m + 1] + lZ[m - 1::-1])
    lZf = np.empty(N + 1)
    for m in range(N + 1):
        lZf[m] = logsumexp(lZ[: m + 1] + lP[m::-1])
    return RenewalTables(float(beta), int(N), q, Q, lZ, lZf, lP, bc)


def enumerate_renewal(beta: float, N: int, alpha: str = "c", q: Optional[np.ndarray] = None,
                      survival: Optional[np.ndarray] = None, beta_c: Optional[float] = None):
    """Weights of all contact sets {0} u A, A subset of {1..N}, by explicit
    products.  Constrained sets must contain N.  Returns dict A -> weight."""
    if N > 20:
        raise SizeError("enumeration limited to N <= 20")
    bc = critical_beta() if beta_c is None else beta_c
    if q is None:
        q = np.zeros(N + 1)
        q[1:] = np.exp(bc) * closed_form_fn(np.arange(1, N + 1))
    P = free_survival(N) if survival is None else survival
    e = np.exp(beta - bc)
    out = {}
    inner = range(1, N) if alpha == "c" else range(1, N + 1)
    for k in range(0, len(inner) + 1):
        for A in combinations(inner, k):
            T = A + (N,) if alpha == "c" else A
            wgt = 1.0
            prev = 0
            for t in T:
                wgt *= e * q[t - prev]
                prev = t
            if alpha != "c":
                wgt *= P[N - prev]
            out[T] = wgt
    return out


def _extend_table(table: KernelTable, N: int):
    """Kernel and survival arrays over points [0, grid, a] for n <= N,
    extended past n_max with the tail fit and the free survival ratio."""
    if N <= table.n_max:
        return table.full[: N + 1], table.surv_full[: N + 1]
    n = np.arange(table.n_max + 1, N + 1, dtype=float)
    ext = table.tail_full[None] * n[:, None, None] ** -1.5
    P = free_survival(N)
    sext = table.surv_full[-1][None] * (P[table.n_max + 1:] / P[table.n_max])[:, None]
    return np.concatenate([table.full, ext]), np.concatenate([table.surv_full, sext])


@dataclass(frozen=True, eq=False)
class StripPartitionTable:
    """Tilted contact-time weights of the strip model.

    ``Wc[t, j]`` is e^{-tilt t} times the density of paths from 0 whose t-th
    step is a contact at x_j, with the pinning reward of every contact.
    ``K[n, i, j] = w f_n^a(x_i, x_j) e^{phi(x_j)} e^{-tilt n}`` and
    ``K0[n, j] = f_n^a(0, x_j) e^{phi(x_j)} e^{-tilt n}``.
    """

    pinning: PinningFunction
    N: int
    grid: Grid
    tilt: float
    Wc: np.ndarray
    K: np.ndarray
    K0: np.ndarray
    surv_grid: np.ndarray
    surv_origin: np.ndarray
    log_Zc: np.ndarray
    log_Zf: np.ndarray

    @property
    def Zc_total(self):
        return float(np.exp(self.log_Zc[self.N]))

    @property
    def Zf_total(self):
        return float(np.exp(self.log_Zf[self.N]))

    def free_last_weights(self, N=None):
        """Tilted weights of the last contact (t, j) for the free model at N;
        column 0 of row 0 carries the no-contact term."""
        N = self.N if N is None else N
        w = self.grid.weight
        t = np.arange(N + 1)
        disc = np.exp(-self.tilt * (N - t))
        W = w * self.Wc[: N + 1] * self.surv_grid[N - t] * disc[:, None]
        W[0] = 0.0
        W[0, 0] = np.exp(-self.tilt * N) * self.surv_origin[N]
        return W


def strip_partition(pinning: PinningFunction, table: KernelTable, N: int,
                    tilt: float = 0.0) -> StripPartitionTable:
    """Dynamic programme over contact times.

    Wc(t, y) = e^{phi(y)} [f_t(0, y) + sum_{s<t} int Wc(s, x) f_{t-s}(x, y) dx]
    (all tilted by e^{-tilt t}).  Z^c_N = int Wc(N, y) dy and
    Z^f_N = P^a_0(N) + sum_t int Wc(t, x) P^a_x(N - t) dx.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    if abs(pinning.a - table.a) > 1e-15:
        raise DomainError("pinning and kernel table use different strip widths")
    grid = table.grid
    M = grid.size
    work = 0.5 * float(N) ** 2 * M * M
    if work > WORK_BUDGET:
        scale = np.sqrt(WORK_BUDGET / work)
        raise SizeError(f"strip DP work {work:.2e} exceeds budget {WORK_BUDGET:.1e}",
                        suggestion={"N": int(N * scale), "M": M})
    full, surv = _extend_table(table, N)
    ephi = pinning.grid_weights(grid)
    w = grid.weight
    n = np.arange(N + 1, dtype=float)
    disc = np.exp(-tilt * n)
    K = full[:, 1:-1, 1:-1] * (w * ephi)[None, None, :] * disc[:, None, None]
    K[0] = 0.0
    K0 = full[:, 0, 1:-1] * ephi[None, :] * disc[:, None]
    K0[0] = 0.0
    # reversed copy so that K[t - s] for s = 1..t-1 is one contiguous block
    Krev = np.ascontiguousarray(K[::-1]).reshape((N + 1) * M, M)
    Wc = np.zeros((N + 1, M))
    Wflat = Wc.reshape(-1)
    for t in range(1, N + 1):
        acc = K0[t].copy()
        if t > 1:
            # rows s = 1..t-1 of Wc against K[t-1], ..., K[1]
            acc += Wflat[M: t * M] @ Krev[(N - t + 1) * M:N * M]
        Wc[t] = acc
    Zc_t = w * Wc.sum(axis=1)
    with np.errstate(divide="ignore"):
        log_Zc = np.log(Zc_t) + tilt * n
    log_Zc[0] = 0.0
    sg = surv[:, 1:-1]
    so = surv[:, 0]
    log_Zf = np.empty(N + 1)
    wW = w * Wc
    for T in range(N + 1):
        s = np.arange(T + 1)
        tot = disc[T] * so[T] + np.sum(wW[1:T + 1] * sg[T - s[1:]] * disc[T - s[1:], None])
        log_Zf[T] = np.log(tot) + tilt * T
    return StripPartitionTable(pinning, int(N), grid, float(tilt), Wc, K, K0, sg, so, log_Zc, log_Zf)


def _chain_weight(K, K0, T):
    v = K0[T[0]].copy()
    for s, t in zip(T[:-1], T[1:]):
        v = v @ K[t - s]
    return v


def strip_partition_enumerated(strip: StripPartitionTable, alpha: str = "c"):
    """Explicit sum over contact configurations (positions integrated by the
    grid quadrature through matrix products).  Returns (log Z, dict A -> tilted weight)."""
    N = strip.N
    if N > 16:
        raise SizeError("enumeration limited to N <= 16")
    w = strip.grid.weight
    out = {}
    inner = range(1, N) if alpha == "c" else range(1, N + 1)
    for k in range(0, len(inner) + 1):
        for A in combinations(inner, k):
            T = A + (N,) if alpha == "c" else A
            if not T:
                out[T] = np.exp(-strip.tilt * N) * strip.surv_origin[N]
                continue
            v = _chain_weight(strip.K, strip.K0, T)
            if alpha == "c":
                out[T] = w * v.sum()
            else:
                last = T[-1]
                out[T] = w * np.sum(v * strip.surv_grid[N - last]) * np.exp(-strip.tilt * (N - last))
    Z = sum(out.values())
    return float(np.log(Z) + strip.tilt * N), out


def _normalise_set(A, N, alpha):
    A = [int(t) for t in A]
    if A and A[0] == 0:
        A = A[1:]
    if any(b <= a for a, b in zip(A[:-1], A[1:])):
        raise DomainError("contact set must be strictly increasing")
    if A and (A[0] < 1 or A[-1] > N):
        raise DomainError("contact indices out of range")
    if alpha == "c" and (not A or A[-1] != N):
        raise DomainError("constrained contact set must contain N")
    return tuple(A)


def strip_set_probability(A, strip: StripPartitionTable, alpha: str = "c") -> float:
    """p~^alpha_{phi,N}(A): strip positions integrated out."""
    N = strip.N
    T = _normalise_set(A, N, alpha)
    w = strip.grid.weight
    if alpha == "c":
        num = w * _chain_weight(strip.K, strip.K0, T).sum()
        return float(num / (w * strip.Wc[N].sum()))
    if not T:
        num = np.exp(-strip.tilt * N) * strip.surv_origin[N]
    else:
        v = _chain_weight(strip.K, strip.K0, T)
        num = w * np.sum(v * strip.surv_grid[N - T[-1]]) * np.exp(-strip.tilt * (N - T[-1]))
    return float(num / np.exp(strip.log_Zf[N] - strip.tilt * N))


def renewal_set_probability(A, tables: RenewalTables, alpha: str = "c") -> float:
    """p^alpha_{beta,N}(A) for the standard wetting measure."""
    N = tables.N
    T = _normalise_set(A, N, alpha)
    lg = tables.log_gap_weights
    prev = 0
    lw = 0.0
    for t in T:
        lw += lg[t - prev]
        prev = t
    if alpha == "c":
        return float(np.exp(lw - tables.log_Zc[N]))
    return float(np.exp(lw + tables.log_P[N - prev] - tables.log_Zf[N]))


def contact_set_density_ratio(A, strip: StripPartitionTable, tables: RenewalTables,
                              alpha: str = "c") -> float:
    """p~^alpha_{phi,N}(A) / p^alpha_{beta,N}(A)."""
    if tables.N != strip.N:
        raise DomainError("renewal and strip tables must share N")
    return strip_set_probability(A, strip, alpha) / renewal_set_probability(A, tables, alpha)


@dataclass(frozen=True, eq=False)
class Sandwich:
    """Renewal bounds around the strip partition functions for N = 0..N."""

    C_prime: float
    C_A: float
    C_0: float
    prefactor: float
    lower_c: np.ndarray
    upper_c: np.ndarray
    lower_f: np.ndarray
    upper_f: np.ndarray


def sandwich_constant(pinning: PinningFunction, table: KernelTable, beta_c: Optional[float] = None):
    """C' = |Condition (A) score| + max_n (-log(f_n^a(0,0)/f_n))/a, on the DP grid."""
    from .pinning import condition_A_score
    bc = critical_beta() if beta_c is None else beta_c
    CA = abs(condition_A_score(pinning, bc, grid=table.grid))
    C0 = float(np.max(-np.log(table.ratio_origin())) / table.a)
    return CA + C0, CA, C0


def partition_sandwich(pinning: PinningFunction, table: KernelTable, N: int, ladder=None,
                       beta_c: Optional[float] = None) -> Sandwich:
    """Z^c_{beta_c -+ C'a, N} and C'(a) Z^f_{beta_c - C'a, N}, Z^f_{beta_c + C'a, N}.

    C'(a) = C^a(0) e^{-C_A a}; with a LadderEstimate ``ladder`` the estimate
    minus three standard uncertainties is used, otherwise the prefactor is 0.
    """
    bc = critical_beta() if beta_c is None else beta_c
    Cp, CA, C0 = sandwich_constant(pinning, table, bc)
    a = table.a
    lo = renewal_tables(bc - Cp * a, N, beta_c=bc)
    hi = renewal_tables(bc + Cp * a, N, beta_c=bc)
    pref = 0.0
    if ladder is not None:
        pref = max(float(ladder.value - 3 * ladder.uncertainty), 0.0) * np.exp(-CA * a)
    return Sandwich(Cp, CA, C0, pref, lo.Zc, hi.Zc, pref * lo.Zf, hi.Zf)
