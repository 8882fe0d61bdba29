"""Pure numpy versions of the compiled scan loops.

Candidate weights are evaluated in blocks but accumulated with a sequential
``np.add.accumulate`` seeded by the running total, which performs the same
floating point operations in the same order as the compiled loops.
"""

import numpy as np

BLOCK = 256


def renewal_forward_chunk(gw, Z, stop, N, u, out_idx, out_cnt, first):
    S = u.shape[0]
    cap = out_idx.shape[0]
    pos = 0
    r = first
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
            t_lo = 1
            while t_lo <= m:
                tt = np.arange(t_lo, min(t_lo + BLOCK - 1, m) + 1)
                wv = gw[tt] * Z[m - tt] / zm
                cum = np.add.accumulate(np.concatenate(([acc], wv)))[1:]
                hit = np.flatnonzero(U < cum)
                if hit.size:
                    chosen = int(tt[hit[0]])
                    break
                acc = cum[-1]
                t_lo = tt[-1] + 1
            cur += chosen
            out_idx[pos] = cur
            pos += 1
            cnt += 1
            m -= chosen
        out_cnt[r] = cnt
        r += 1
    return r, pos


def markov_backward_chunk(Wc, K, K0, t0, j0, u, out_t, out_j, out_cnt, first):
    S = u.shape[0]
    M = Wc.shape[1]
    cap = out_t.shape[0]
    pos = 0
    r = first
    blk = max(1, BLOCK // M)
    while r < S:
        t = int(t0[r])
        j = int(j0[r])
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
            ns, ni = 0, 0
            s_hi = t - 1
            while s_hi >= 1:
                ss = np.arange(s_hi, max(s_hi - blk, 0), -1)
                prod = (Wc[ss, :] * K[t - ss, :, j]).ravel()
                cum = np.add.accumulate(np.concatenate(([acc], prod)))[1:]
                hit = np.flatnonzero(U < cum)
                if hit.size:
                    h = int(hit[0])
                    ns, ni = int(ss[h // M]), h % M
                    break
                acc = cum[-1]
                s_hi = int(ss[-1]) - 1
            t, j = ns, ni
        out_cnt[r] = cnt
        r += 1
    return r, pos
