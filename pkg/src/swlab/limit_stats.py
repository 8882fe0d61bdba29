"""Sample summaries and their comparison with Brownian limit laws."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats
from scipy.ndimage import maximum_filter1d, minimum_filter1d
from scipy.special import ndtr

from .errors import DomainError
from .rw_core import critical_beta, SQRT2PI

MIN_SAMPLES = 100


def local_time_scale(beta_c: Optional[float] = None) -> float:
    """b = 2 sqrt(pi) C_K with C_K = e^{beta_c}/sqrt(2 pi), i.e. sqrt(2) e^{beta_c}."""
    bc = critical_beta() if beta_c is None else beta_c
    return float(2.0 * np.sqrt(np.pi) * np.exp(bc) / SQRT2PI)


def standard_local_time_scale(beta_c: Optional[float] = None) -> float:
    """Scale c with c |A_N|/sqrt(N) -> |N(0, 1)| for the renewal q = e^{beta_c} f_n."""
    bc = critical_beta() if beta_c is None else beta_c
    return float(np.exp(bc))


@dataclass(frozen=True)
class StatReport:
    test: str
    n: int
    statistic: float
    law: str
    threshold: float
    passed: bool
    pvalue: float = np.nan
    N: int = 0
    detail: str = ""

    def row(self):
        return {"test": self.test, "N": self.N, "M": self.n, "statistic": self.statistic,
                "threshold": self.threshold, "pass": bool(self.passed)}


@dataclass(frozen=True, eq=False)
class ZeroSetSummary:
    last_zero: np.ndarray
    count: np.ndarray
    scaled_count: np.ndarray
    largest_gap: np.ndarray
    N: int
    probes: np.ndarray = field(default_factory=lambda: np.linspace(0.05, 0.95, 19))
    _sets: Optional[list] = field(default=None, repr=False)

    def cover_indicator(self, t: float, eps: float) -> np.ndarray:
        """Whether the rescaled zero set meets [t - eps, t + eps], per sample."""
        lo, hi = (t - eps) * self.N, (t + eps) * self.N
        return np.array([np.any((s >= lo) & (s <= hi)) for s in self._sets])


def _cdf(law: str, sigma: float = 1.0):
    if law == "arcsine":
        return lambda t: np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, 2 / np.pi * np.arcsin(np.sqrt(np.clip(t, 0, 1)))))
    if law in ("half_normal", "folded_normal"):
        return lambda x: np.where(x <= 0, 0.0, 2 * ndtr(np.maximum(x, 0) / sigma) - 1)
    if law == "uniform":
        return lambda x: np.clip(x, 0.0, 1.0)
    raise DomainError(f"unknown law '{law}'")


def law_cdf(law: str, x, sigma: float = 1.0):
    return _cdf(law, sigma)(np.asarray(x, dtype=float))


def sample_law(law: str, size: int, rng, sigma: float = 1.0):
    """Draws from the reference laws (for self-tests)."""
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    if law == "arcsine":
        return np.sin(0.5 * np.pi * gen.random(size)) ** 2
    if law in ("half_normal", "folded_normal"):
        return np.abs(sigma * gen.standard_normal(size))
    if law == "uniform":
        return gen.random(size)
    raise DomainError(f"unknown law '{law}'")


def ks_against(samples, law: str, sigma: float = 1.0, threshold: Optional[float] = None,
               name: str = "ks", N: int = 0) -> StatReport:
    """Two-sided KS distance of the samples against a closed-form law."""
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    cdf = _cdf(law, sigma)
    res = stats.kstest(x, cdf)
    thr = 1.36 / np.sqrt(x.size) if threshold is None else float(threshold)
    tag = law if law in ("arcsine", "uniform") else f"{law}({sigma:.6g})"
    return StatReport(name, int(x.size), float(res.statistic), tag, thr,
                      bool(res.statistic < thr), float(res.pvalue), N)


def zero_set_summary(batch, beta_c: Optional[float] = None) -> ZeroSetSummary:
    b = local_time_scale(beta_c)
    N = batch.N
    counts = batch.sizes
    last = batch.last / N
    sets = [batch[k].indices for k in range(len(batch))]
    if batch.alpha == "c":
        last = np.ones(len(batch))
    gaps = np.array([np.max(np.diff(np.concatenate((s, [N])))) / N if len(s) else 1.0 for s in sets])
    return ZeroSetSummary(last, counts, b * counts / np.sqrt(N), gaps, N, _sets=sets)


def local_time_mgf(batch, eps: float, scale: Optional[float] = None) -> float:
    """Mean of exp(eps * scale * |A_N| / sqrt(N)) over free-boundary samples.

    ``scale`` defaults to the scale b of ``local_time_scale``.

    ``batch`` is a ContactBatch, a list of ContactSets or an integer array
    of counts (then N must be attached as ``batch.N``)."""
    if eps == 0:
        return 1.0
    counts, N = _counts(batch)
    c = local_time_scale() if scale is None else scale
    return float(np.mean(np.exp(eps * c * counts / np.sqrt(N))))


def _counts(batch):
    if hasattr(batch, "sizes"):
        if batch.alpha != "f":
            raise DomainError("local-time MGF needs free-boundary samples")
        return batch.sizes, batch.N
    if isinstance(batch, tuple):
        return np.asarray(batch[0]), int(batch[1])
    sets = list(batch)
    if not sets:
        raise DomainError("empty sample")
    if len({s.alpha for s in sets}) != 1 or sets[0].alpha != "f":
        raise DomainError("local-time MGF needs free-boundary samples only")
    return np.array([s.size for s in sets]), sets[0].N


def mgf_target(eps: float) -> float:
    """E exp(eps |Z|) = 2 e^{eps^2/2} Phi(eps)."""
    return float(2 * np.exp(0.5 * eps * eps) * ndtr(eps))


def last_zero_cdf_ratio(last_zero, probes=None) -> float:
    """max over probes t in [0.1, 0.9] of |F_emp(t) / F_arcsine(t) - 1|."""
    t = np.linspace(0.1, 0.9, 17) if probes is None else np.asarray(probes, dtype=float)
    x = np.sort(np.asarray(last_zero, dtype=float))
    if x.size < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    emp = np.searchsorted(x, t, side="right") / x.size
    return float(np.max(np.abs(emp / _cdf("arcsine")(t) - 1)))


def path_marginal_report(paths, t: float, alpha: str, threshold: float = 0.05) -> StatReport:
    a_ = {"f": "f", "free": "f", "c": "c", "constrained": "c"}[alpha]
    if a_ == "f" and not 0 < t <= 1:
        raise DomainError("free marginal needs t in (0, 1]")
    if a_ == "c" and not 0 < t < 1:
        raise DomainError("constrained marginal needs t in (0, 1)")
    Ns = {p.N for p in paths}
    if len(Ns) != 1 or any(p.alpha != a_ for p in paths):
        raise DomainError("paths must share N and boundary condition")
    x = np.abs([p.rescaled(t) for p in paths])
    if a_ == "f":
        return ks_against(x, "half_normal", np.sqrt(t), threshold, f"marginal_free_t{t:g}", Ns.pop())
    return ks_against(x, "folded_normal", np.sqrt(t * (1 - t)), threshold, f"marginal_bridge_t{t:g}", Ns.pop())


def _forward_osc(v, w):
    """max over i of (max - min) of v[i..i+w]."""
    n = v.size
    if n < 2 or w <= 0:
        return 0.0
    size = min(w, n - 1) + 1
    mx = maximum_filter1d(v, size)
    mn = minimum_filter1d(v, size)
    c = size // 2
    # keep the centred windows lying wholly inside the path
    return float(np.max(mx[c: n - (size - 1 - c)] - mn[c: n - (size - 1 - c)]))


def oscillation_stat(paths, delta: float, a: float, check: bool = True):
    """Gamma(delta) and the excursion-restricted Gamma~^a(delta) of each
    rescaled path on its N-grid.

    Grid indices i ~ j iff every index strictly between them is a non-contact
    (value > a).  Always Gamma~ <= Gamma, and splitting a pair at the first
    and last contact in between gives Gamma <= 2 Gamma~ + a/sqrt(N); both are
    asserted when ``check`` is set.
    """
    if not 0 < delta <= 1:
        raise DomainError("delta must be in (0, 1]")
    g, gt = [], []
    for p in paths:
        N = p.N
        v = p.values / np.sqrt(N)
        w = int(np.floor(delta * N + 1e-9))
        G = _forward_osc(v, w)
        contact = np.flatnonzero(p.values <= a)
        cuts = np.unique(np.concatenate(([0], contact, [N])))
        Gt = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi > lo:
                Gt = max(Gt, _forward_osc(v[lo:hi + 1], w))
        if check:
            tol = 1e-12
            if Gt > G + tol or G > 2 * Gt + a / np.sqrt(N) + tol:
                raise AssertionError("oscillation sandwich violated")
        g.append(G)
        gt.append(Gt)
    return np.array(g), np.array(gt)


def mgf_lemma_property_test(rng=None, rate: float = 2.0, Ns=(10, 100, 10**4, 10**6, 10**8),
                            tol: float = 1e-3) -> StatReport:
    """Closed-form check that E exp(eps_N R_N) -> 1 when eps_N -> 0 and the
    family has a uniform exponential moment; R_N ~ Exp(rate), eps_N = +-N^-1/2.
    ``rng`` is unused (no sampling needed)."""
    rows = []
    for sign in (1.0, -1.0):
        vals = []
        for N in Ns:
            e = sign / np.sqrt(N)
            vals.append(rate / (rate - e))
        vals = np.array(vals)
        dev = np.abs(vals - 1.0)
        rows.append((bool(np.all(np.diff(dev) < 0)), float(dev[-1])))
    zero_ok = all(np.exp(e * 0.0) == 1.0 for e in (0.5, -0.5))
    worst = max(r[1] for r in rows)
    passed = zero_ok and all(r[0] for r in rows) and worst < tol
    return StatReport("mgf_lemma_exponential", len(Ns), worst, f"exp({rate:g})", tol, passed)
