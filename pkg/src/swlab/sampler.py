"""Exact samplers for contact sets, excursions and full paths.

Contact sets are drawn from the tabulated partition functions with no
rejection.  Random draws come in fixed-size chunks, each on its own keyed
sub-stream, so results do not depend on how chunks are scheduled.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _accel
from .errors import DomainError, NumericalError, RareEventError, UnsupportedModelError
from .operator_spectrum import SpectralResult, build_resolvent
from .partition import RenewalTables, StripPartitionTable
from .rw_core import IncrementModel, RngStream, as_generator

CHUNK = 256
ALPHAS = {"c": "c", "constrained": "c", "f": "f", "free": "f"}


def _alpha(alpha):
    try:
        return ALPHAS[alpha]
    except KeyError:
        raise DomainError(f"unknown boundary condition '{alpha}'") from None


def n_threads():
    try:
        return max(1, int(os.environ.get("SWLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class ContactSet:
    N: int
    alpha: str
    indices: np.ndarray
    positions: np.ndarray
    a: float

    def __post_init__(self):
        if len(self.indices) != len(self.positions):
            raise DomainError("indices and positions differ in length")

    @property
    def last(self):
        return int(self.indices[-1])

    @property
    def size(self):
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class ContactBatch:
    """Many contact sets in flat storage.  Each set starts implicitly at
    (0, 0.0); ``idx``/``pos`` hold the later contacts."""

    N: int
    alpha: str
    a: float
    offsets: np.ndarray
    idx: np.ndarray
    pos: np.ndarray

    def __len__(self):
        return len(self.offsets) - 1

    def __getitem__(self, k):
        if not -len(self) <= k < len(self):
            raise IndexError(k)
        k %= len(self)
        lo, hi = self.offsets[k], self.offsets[k + 1]
        return ContactSet(self.N, self.alpha, np.concatenate(([0], self.idx[lo:hi])),
                          np.concatenate(([0.0], self.pos[lo:hi])), self.a)

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def sizes(self):
        """|A_N| including the start time 0."""
        return np.diff(self.offsets) + 1

    @property
    def last(self):
        cnt = np.diff(self.offsets)
        out = np.zeros(len(self), dtype=np.int64)
        nz = cnt > 0
        out[nz] = self.idx[self.offsets[1:][nz] - 1]
        return out


@dataclass(frozen=True, eq=False)
class PathSample:
    N: int
    values: np.ndarray
    alpha: str = "f"
    contacts: Optional[np.ndarray] = None

    def rescaled(self, t):
        t = np.asarray(t, dtype=float)
        return np.interp(t * self.N, np.arange(self.N + 1), self.values) / np.sqrt(self.N)


def _run_chunks(fn, n_samples, rng: RngStream):
    """Evaluate fn(stream, first, count) on fixed chunks, optionally threaded."""
    starts = list(range(0, n_samples, CHUNK))
    jobs = [(rng.child(c), s, min(CHUNK, n_samples - s)) for c, s in enumerate(starts)]
    nt = n_threads()
    if nt > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            return list(ex.map(lambda j: fn(*j), jobs))
    return [fn(*j) for j in jobs]


def _collect(parts, N, alpha_, a):
    counts = np.concatenate([p[0] for p in parts])
    idx = np.concatenate([p[1] for p in parts])
    pos = np.concatenate([p[2] for p in parts])
    offsets = np.concatenate(([0], np.cumsum(counts)))
    return ContactBatch(N, alpha_, a, offsets, idx, pos)


def _drive_forward(kern, gw, Z, stop, N, u):
    S = u.shape[0]
    cnt = np.zeros(S, dtype=np.int64)
    pieces = []
    r = 0
    cap = max(4 * N, 1024)
    while r < S:
        buf = np.empty(cap, dtype=np.int64)
        r_new, used = kern.renewal_forward_chunk(gw, Z, stop, N, u, buf, cnt, r)
        pieces.append(buf[:used])
        r = r_new
    return cnt, np.concatenate(pieces) if pieces else np.zeros(0, np.int64)


def _renewal_arrays(tables: RenewalTables, N, alpha_):
    lg = tables.log_gap_weights[: N + 1]
    lZ = tables.log_Zc[: N + 1] if alpha_ == "c" else tables.log_Zf[: N + 1]
    # remove the exponential growth so the linear weights stay in range
    lam = max(0.0, float(lZ[N]) / N) if N > 0 else 0.0
    n = np.arange(N + 1)
    Z = np.exp(lZ - lam * n)
    gw = np.exp(lg - lam * n)
    gw[0] = 0.0
    if alpha_ == "c":
        stop = np.zeros(N + 1)
    else:
        stop = np.exp(tables.log_P[: N + 1] - lam * n)
    return np.ascontiguousarray(gw), np.ascontiguousarray(Z), np.ascontiguousarray(stop)


def sample_contacts_renewal(beta: float, N: int, alpha, tables: RenewalTables, rng,
                            size: Optional[int] = None, backend: Optional[str] = None):
    """Contact set of the standard wetting model by forward sequential sampling.

    From remaining horizon m the next gap t has probability
    e^{beta-beta_c} q(t) Z_{m-t}/Z_m (constrained uses Z~^c, free uses Z~^f
    and may stop with probability P(m)/Z~^f_m).
    """
    alpha_ = _alpha(alpha)
    if N < 0:
        raise DomainError("N must be >= 0")
    if N > tables.N:
        raise DomainError("tables do not cover N")
    if abs(tables.beta - beta) > 1e-12:
        raise DomainError("tables were built for a different beta")
    if not isinstance(rng, RngStream):
        raise DomainError("samplers need an RngStream")
    _, kern = _accel.get(backend)
    if N == 0:
        batch = ContactBatch(0, alpha_, 0.0, np.zeros((size or 1) + 1, np.int64),
                             np.zeros(0, np.int64), np.zeros(0))
        return batch if size is not None else batch[0]
    gw, Z, stop = _renewal_arrays(tables, N, alpha_)

    def work(stream, first, count):
        u = stream.generator().random((count, N + 1))
        cnt, idx = _drive_forward(kern, gw, Z, stop, N, u)
        return cnt, idx, np.zeros(len(idx))

    batch = _collect(_run_chunks(work, 1 if size is None else int(size), rng), N, alpha_, 0.0)
    return batch if size is not None else batch[0]


def _drive_backward(kern, Wc, K, K0, t0, j0, u):
    S = u.shape[0]
    cnt = np.zeros(S, dtype=np.int64)
    pt, pj = [], []
    r = 0
    N = int(max(t0.max(), 1))
    cap = max(2 * N, 1024)
    while r < S:
        bt = np.empty(cap, dtype=np.int64)
        bj = np.empty(cap, dtype=np.int64)
        r_new, used = kern.markov_backward_chunk(Wc, K, K0, t0, j0, u, bt, bj, cnt, r)
        pt.append(bt[:used])
        pj.append(bj[:used])
        r = r_new
    return cnt, np.concatenate(pt), np.concatenate(pj)


def _reverse_segments(cnt, t, j):
    # each sample's contacts were written from last to first
    off = np.concatenate(([0], np.cumsum(cnt)))
    perm = np.empty(len(t), dtype=np.int64)
    for k in range(len(cnt)):
        perm[off[k]:off[k + 1]] = np.arange(off[k + 1] - 1, off[k] - 1, -1)
    return t[perm], j[perm]


def sample_contacts_markov_renewal(pinning, strip: StripPartitionTable, table, spectral: Optional[SpectralResult],
                                   N: int, alpha, rng, size: Optional[int] = None,
                                   backend: Optional[str] = None, residual_tol: float = 1e-8):
    """Contact times and strip positions of the strip model, drawn backwards
    from the last contact with the DP weights Wc as conditioning weights."""
    alpha_ = _alpha(alpha)
    if spectral is not None and not spectral.residual <= residual_tol:
        raise NumericalError(f"spectral residual {spectral.residual:.2e} above {residual_tol:.0e}; refusing to sample")
    if N < 1 or N > strip.N:
        raise DomainError("strip DP does not cover N")
    if pinning is not strip.pinning:
        raise DomainError("pinning does not match the strip table")
    if not isinstance(rng, RngStream):
        raise DomainError("samplers need an RngStream")
    _, kern = _accel.get(backend)
    M = strip.grid.size
    pts = strip.grid.points
    if alpha_ == "c":
        start_w = strip.Wc[N][None, :]
        t_of = np.full(M, N)
        j_of = np.arange(M)
    else:
        start_w = strip.free_last_weights(N)
        t_of = np.repeat(np.arange(N + 1), M)
        j_of = np.tile(np.arange(M), N + 1)
    cdf = np.cumsum(start_w.ravel())
    Wc = np.ascontiguousarray(strip.Wc[: N + 1])
    K = np.ascontiguousarray(strip.K[: N + 1])
    K0 = np.ascontiguousarray(strip.K0[: N + 1])

    def work(stream, first, count):
        u = stream.generator().random((count, N + 1))
        k = np.minimum(np.searchsorted(cdf, u[:, N] * cdf[-1], side="right"), len(cdf) - 1)
        t0 = np.ascontiguousarray(t_of[k], dtype=np.int64)
        j0 = np.ascontiguousarray(j_of[k], dtype=np.int64)
        cnt, tt, jj = _drive_backward(kern, Wc, K, K0, t0, j0, u)
        tt, jj = _reverse_segments(cnt, tt, jj)
        return cnt, tt, pts[jj]

    batch = _collect(_run_chunks(work, 1 if size is None else int(size), rng), N, alpha_, strip.grid.a)
    return batch if size is not None else batch[0]


def sample_pure_renewal(N: int, q: np.ndarray, Q_tail: np.ndarray, rng: RngStream, size: int):
    """Contact sets of the unpinned renewal with gap law q (free boundary):
    i.i.d. gaps by inverse CDF until the horizon is passed.  Returns the
    number of renewals in [0, N] (including 0) for each sample."""
    cdf = np.cumsum(q[1: N + 1])

    def work(stream, first, count):
        gen = stream.generator()
        t = np.zeros(count, dtype=np.int64)
        n = np.ones(count, dtype=np.int64)
        alive = np.arange(count)
        while alive.size:
            u = gen.random(alive.size)
            g = np.searchsorted(cdf, u, side="right") + 1
            t[alive] += g
            ok = t[alive] <= N
            n[alive[ok]] += 1
            alive = alive[ok]
        return n

    parts = _run_chunks(work, size, rng)
    return np.concatenate(parts)


def markov_renewal_positions(table, spectral: SpectralResult, steps: int, chains: int, rng):
    """Strip positions of the Markov renewal chain with kernel
    q_n(x, y) = e^{-F n} f_n^a(x, y) V(y)/V(x) e^beta summed over n.
    Returns the positions after each step, shape (steps, chains)."""
    k = build_resolvent(table, spectral.lam)
    V = spectral.eigenfunction
    P = k.matrix * table.grid.weight / spectral.delta * V[None, :] / V[:, None]
    P /= P.sum(axis=1, keepdims=True)
    cdf = np.cumsum(P, axis=1)
    gen = as_generator(rng)
    state = gen.integers(0, P.shape[0], size=chains)
    out = np.empty((steps, chains), dtype=np.int64)
    for s in range(steps):
        u = gen.random(chains)
        state = np.minimum((cdf[state] < u[:, None]).sum(axis=1), P.shape[0] - 1)
        out[s] = state
    return out


def _bridges(n, gen):
    """Gaussian bridges 0 -> 0 with lengths n (array), flat interior-less
    layout: segment k occupies positions 0..n_k-1 (value at 0 is 0)."""
    tot = int(n.sum())
    off = np.concatenate(([0], np.cumsum(n)))
    z = gen.standard_normal(tot)
    seg = np.repeat(np.arange(len(n)), n)
    c = np.cumsum(z)
    base = np.concatenate(([0.0], c))[off[:-1]]
    S = c - base[seg]                       # S_1..S_n for each segment
    Sn = S[off[1:] - 1]
    k = np.arange(tot) - off[:-1][seg] + 1  # 1..n
    B = S - k / n[seg] * Sn[seg]            # B_1..B_n, B_n = 0
    # shift to positions 0..n-1 holding B_0..B_{n-1}
    out = np.empty(tot)
    out[1:] = B[:-1]
    out[off[:-1]] = 0.0
    return out, off, seg


def _vervaat(B, off, seg, n):
    """Rotate each bridge at its minimum; returns E_0..E_{n-1} with E_0 = 0."""
    mins = np.minimum.reduceat(B, off[:-1])
    hit = np.flatnonzero(B == mins[seg])
    first = np.unique(seg[hit], return_index=True)[1]
    kappa = hit[first] - off[:-1]
    k = np.arange(len(B)) - off[:-1][seg]
    src = off[:-1][seg] + (kappa[seg] + k) % n[seg]
    return B[src] - mins[seg]


def _excursions(a, xs, ys, n, gen, max_rounds):
    """Vectorised exact excursions above a between (x_k, y_k) of length n_k.

    Proposal: Gaussian bridge 0 -> 0 conditioned positive (cyclic rotation);
    accept iff it stays above the line from a - x to a - y.
    """
    n = np.asarray(n, dtype=np.int64)
    res = [None] * len(n)
    todo = np.flatnonzero(n > 1)
    for k in np.flatnonzero(n <= 1):
        res[k] = np.zeros(0)
    tries = np.zeros(len(n), dtype=np.int64)
    while todo.size:
        nn = n[todo]
        B, off, seg = _bridges(nn, gen)
        E = _vervaat(B, off, seg, nn)
        k = np.arange(len(E)) - off[:-1][seg]
        frac = k / nn[seg]
        ell = (a - xs[todo][seg]) * (1 - frac) + (a - ys[todo][seg]) * frac
        ok_pt = (E > ell) | (k == 0)
        bad = np.bincount(seg, weights=~ok_pt, minlength=len(nn)) > 0
        tries[todo] += 1
        for q in np.flatnonzero(~bad):
            kk = todo[q]
            lo, hi = off[q] + 1, off[q + 1]
            res[kk] = E[lo:hi] - ell[lo:hi] + a
        still = todo[bad]
        over = tries[still] >= max_rounds(n[still])
        if np.any(over):
            m = int(n[still[over][0]])
            raise RareEventError(f"excursion of length {m} hit the retry cap",
                                 acceptance=float(np.mean(~bad)))
        todo = still
    return res


def sample_excursion(model: IncrementModel, a: float, x: float, y: float, n: int, rng,
                     method: str = "vervaat", cap_factor: int = 200) -> np.ndarray:
    """Interior values S_1..S_{n-1} of a walk from x to y in n steps staying
    strictly above a (Gaussian increments)."""
    if not model.closed_form:
        raise UnsupportedModelError("excursion sampling needs Gaussian increments")
    if not (0 <= x <= a and 0 <= y <= a):
        raise DomainError("endpoints must lie in [0, a]")
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1:
        return np.zeros(0)
    gen = as_generator(rng)
    if method == "vervaat":
        return _excursions(a, np.array([x]), np.array([y]), np.array([n]), gen,
                           lambda m: cap_factor * m)[0]
    if method == "bridge":
        k = np.arange(1, n)
        tries = 0
        while tries < cap_factor * n:
            tries += 1
            S = np.cumsum(gen.standard_normal(n))
            v = x + S[:-1] - k / n * S[-1] + (y - x) * k / n
            if np.all(v > a):
                return v
        raise RareEventError(f"bridge rejection exhausted {tries} tries", acceptance=0.0)
    raise DomainError(f"unknown excursion method '{method}'")


def bridge_acceptance(a, x, y, n, trials, rng):
    """Empirical acceptance rate of plain bridge rejection (diagnostic)."""
    gen = as_generator(rng)
    k = np.arange(1, n)
    acc = 0
    for lo in range(0, trials, 4096):
        m = min(4096, trials - lo)
        S = np.cumsum(gen.standard_normal((m, n)), axis=1)
        v = x + S[:, :-1] - k / n * S[:, -1:] + (y - x) * k / n
        acc += int(np.count_nonzero(np.all(v > a, axis=1)))
    return acc / trials


def sample_meander(model: IncrementModel, a: float, y: float, m: int, rng, cap_factor: int = 200):
    """S_1..S_m from S_0 = y conditioned on S_k > a for all k (rejection of
    unconstrained walks, attempts processed in blocks)."""
    if m < 1:
        return np.zeros(0)
    gen = as_generator(rng)
    cap = int(np.ceil(cap_factor * np.sqrt(m)))
    used = 0
    blk = 64
    while used < cap:
        B = min(cap - used, int(4 * np.sqrt(m)) + 8)
        used += B
        alive = np.arange(B)
        cur = np.full(B, float(y))
        store = []
        k = 0
        while k < m and alive.size:
            L = min(blk, m - k)
            steps = model.sampler(gen, (alive.size, L))
            path = cur[:, None] + np.cumsum(steps, axis=1)
            ok = np.all(path > a, axis=1)
            alive = alive[ok]
            cur = path[ok, -1]
            store.append((alive, path[ok]))
            k += L
        if alive.size:
            win = alive[0]
            return np.concatenate([blk_path[np.searchsorted(ids, win)] for ids, blk_path in store])
    raise RareEventError(f"meander of length {m} exhausted {cap} attempts", acceptance=0.0)


def assemble_path(contacts: ContactSet, model: IncrementModel, rng) -> PathSample:
    """Full path through the given contacts: independent excursions above a
    between consecutive contacts, plus a surviving final stretch if free."""
    gen = as_generator(rng)
    N = contacts.N
    a = contacts.a
    vals = np.empty(N + 1)
    t = contacts.indices.astype(np.int64)
    x = contacts.positions
    vals[t] = x
    if len(t) > 1:
        ex = _excursions(a, x[:-1], x[1:], np.diff(t), gen, lambda m: 200 * m)
        for k in range(len(t) - 1):
            vals[t[k] + 1:t[k + 1]] = ex[k]
    last = int(t[-1])
    if last < N:
        if contacts.alpha == "c":
            raise DomainError("constrained contact set must end at N")
        vals[last + 1:] = sample_meander(model, a, float(x[-1]), N - last, gen)
    return PathSample(N, vals, contacts.alpha, t)


def sample_paths(batch: ContactBatch, model: IncrementModel, rng: RngStream, functional=None):
    """Assemble one path per contact set on sub-stream k of ``rng``.

    With ``functional`` only functional(path) is kept per sample."""
    def one(k):
        p = assemble_path(batch[k], model, rng.child(k))
        return p if functional is None else functional(p)

    nt = n_threads()
    if nt > 1:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            return list(ex.map(one, range(len(batch))))
    return [one(k) for k in range(len(batch))]
