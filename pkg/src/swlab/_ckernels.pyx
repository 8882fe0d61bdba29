# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scan loops for the contact samplers.

Both routines consume one uniform per drawn contact (plus one for the
initial stop decision in the free case) and accumulate candidate weights
sequentially, so the numpy fallback reproduces them bit for bit.
"""

import numpy as np
cimport numpy as cnp

ctypedef cnp.int64_t i64


def renewal_forward_chunk(const double[::1] gw, const double[::1] Z, const double[::1] stop,
                          long N, const double[:, ::1] u, i64[::1] out_idx, i64[::1] out_cnt,
                          long first):
    """Forward renewal sampling for rows first.. of u.

    From horizon m the walk stops with weight stop[m]/Z[m] or makes a gap t
    with weight gw[t]*Z[m-t]/Z[m].  Returns (rows done, entries written).
    """
    cdef long S = u.shape[0]
    cdef long cap = out_idx.shape[0]
    cdef long r, m, t, k, cur, pos = 0, cnt, chosen
    cdef double U, acc, zm
    r = first
    with nogil:
        while r < S:
            if pos + N > cap:
                break
            m = N
            cur = 0
            k = 0
            cnt = 0
            while m > 0:
                U = u[r, k]
                k += 1
                zm = Z[m]
                acc = stop[m] / zm
                if U < acc:
                    break
                chosen = m
                for t in range(1, m + 1):
                    acc += gw[t] * Z[m - t] / zm
                    if U < acc:
                        chosen = t
                        break
                cur += chosen
                out_idx[pos] = cur
                pos += 1
                cnt += 1
                m -= chosen
            out_cnt[r] = cnt
            r += 1
    return r, pos


def markov_backward_chunk(const double[:, ::1] Wc, const double[:, :, ::1] K,
                          const double[:, ::1] K0, const i64[::1] t0, const i64[::1] j0,
                          const double[:, ::1] u, i64[::1] out_t, i64[::1] out_j,
                          i64[::1] out_cnt, long first):
    """Backward sampling of the contact chain from (t0[r], j0[r]).

    The predecessor of contact (t, j) is (s, i) with weight Wc[s,i]*K[t-s,i,j]
    scanned from s = t-1 downwards, or the start point with weight K0[t, j].
    Contacts are written in decreasing time.  Returns (rows done, entries written).
    """
    cdef long S = u.shape[0]
    cdef long M = Wc.shape[1]
    cdef long cap = out_t.shape[0]
    cdef long r, t, j, s, i, k, pos = 0, cnt, ns, ni
    cdef double U, acc
    r = first
    with nogil:
        while r < S:
            t = t0[r]
            j = j0[r]
            if pos + t > cap:
                break
            k = 0
            cnt = 0
            while t > 0:
                out_t[pos] = t
                out_j[pos] = j
                pos += 1
                cnt += 1
                U = u[r, k] * Wc[t, j]
                k += 1
                acc = 0.0
                ns = 0
                ni = 0
                s = t - 1
                while s >= 1:
                    for i in range(M):
                        acc += Wc[s, i] * K[t - s, i, j]
                        if U < acc:
                            ns = s
                            ni = i
                            break
                    if ns:
                        break
                    s -= 1
                t = ns
                j = ni
            out_cnt[r] = cnt
            r += 1
    return r, pos
