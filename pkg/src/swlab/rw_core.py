"""Increment models, strip grids, reproducible random streams and shared
quadrature helpers for the random walk above a hard wall."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import bernoulli, erfc, gammaln, zeta

from .errors import ConfigurationError, DomainError, UnsupportedModelError

SQRT2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class IncrementModel:
    """Symmetric increment law rho(x) = exp(-V(x)) / kappa.

    ``sampler(gen, size)`` draws increments from a numpy Generator.  Only the
    Gaussian variant ships with a sampler and closed forms.  ``convexity`` is
    the constant c with V'' in [1/c, c], kept as metadata.
    """

    variant: str
    potential: Callable[[np.ndarray], np.ndarray]
    normalizer: float
    sampler: Optional[Callable] = None
    support_halfwidth: float = 9.0
    convexity: float = 1.0

    @property
    def closed_form(self):
        return self.variant == "gaussian"

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.potential(x)) / self.normalizer


def _gauss_potential(x):
    return 0.5 * x * x


def _gauss_sampler(gen, size=None):
    return gen.standard_normal(size)


_GAUSSIAN = IncrementModel("gaussian", _gauss_potential, float(SQRT2PI), _gauss_sampler, 9.0, 1.0)


def make_gaussian_model() -> IncrementModel:
    return _GAUSSIAN


def make_custom_model(potential: Callable, normalizer: float, halfwidth: float = 12.0,
                      sampler: Optional[Callable] = None, convexity: float = np.nan) -> IncrementModel:
    """Wrap a user supplied potential V with its normalising constant kappa.

    Symmetry (1e-12) and unit mass (1e-8) are verified before returning.
    """
    if not normalizer > 0:
        raise DomainError("normalizer must be positive")
    m = IncrementModel("custom", potential, float(normalizer), sampler, float(halfwidth), convexity)
    xs = np.linspace(0.0, halfwidth, 2001)
    if np.max(np.abs(m.density(xs) - m.density(-xs))) > 1e-12:
        raise DomainError("increment density must be symmetric")
    mass = 2.0 * quad(m.density, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    if abs(mass - 1.0) > 1e-8:
        raise DomainError(f"density integrates to {mass:.10g}, expected 1")
    return m


def critical_beta(model: IncrementModel | None = None) -> float:
    """beta_c = -log sum_n f_n with f_n the local-time density of the free walk.

    For the Gaussian f_n = n^{-3/2}/sqrt(2 pi), so the sum is zeta(3/2)/sqrt(2pi).
    """
    model = model or _GAUSSIAN
    if not model.closed_form:
        raise UnsupportedModelError("critical_beta needs a closed-form model")
    return float(np.log(SQRT2PI / zeta(1.5)))


def free_survival(n_max: int) -> np.ndarray:
    """P(S_1>0,...,S_n>0) for n = 0..n_max; C(2n,n) 4^-n for any symmetric
    continuous law."""
    n = np.arange(n_max + 1, dtype=float)
    return np.exp(gammaln(2 * n + 1) - 2 * gammaln(n + 1) - 2 * n * np.log(2.0))


def hurwitz_tail(s: float, n: int) -> float:
    """sum_{k>n} k^{-s}."""
    return float(zeta(s, n + 1))


def tilted_tail(lam: float, n: int, s: float = 1.5, direct: int = 2048) -> float:
    """sum_{k>n} k^{-s} e^{-lam k} for lam >= 0.

    Direct summation over ``direct`` terms then an Euler-Maclaurin tail.
    """
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    if lam == 0.0:
        return hurwitz_tail(s, n)
    k = np.arange(n + 1, n + direct + 1, dtype=float)
    out = float(np.sum(k ** -s * np.exp(-lam * k)))
    m = float(n + direct)
    g = lambda x: x ** -s * np.exp(-lam * x)
    # integral_m^inf x^{-3/2} e^{-lam x} dx via the incomplete gamma identity
    if s == 1.5:
        u = lam * m
        integral = np.sqrt(lam) * 2.0 * (np.exp(-u) / np.sqrt(u) - np.sqrt(np.pi) * erfc(np.sqrt(u)))
    else:
        integral = quad(g, m, np.inf)[0]
    return out + integral - 0.5 * g(m)


def endpoint_weights(order: int, h: float) -> np.ndarray:
    """Left-end correction of the trapezoid rule on points 0..order.

    Euler-Maclaurin terms B_{2j}/(2j)! h^{2j} f^{(2j-1)}(0) with the odd
    derivatives replaced by one-sided finite differences; the rule is exact
    for polynomials of degree <= order on the left boundary layer.
    """
    q = int(order)
    k = np.arange(q + 1)
    w = np.full(q + 1, h)
    w[0] = h / 2
    B = bernoulli(2 * (q // 2 + 1))
    V = np.vander(k * h, increasing=True).T
    for j in range(1, q // 2 + 1):
        d = 2 * j - 1
        if d > q:
            break
        rhs = np.zeros(q + 1)
        rhs[d] = factorial(d)
        D = np.linalg.solve(V, rhs)
        w += B[2 * j] / factorial(2 * j) * h ** (2 * j) * D
    return w


@dataclass(frozen=True)
class Grid:
    """Midpoint grid on [0, a] with M cells and uniform weight a/M.

    For a = 0 the grid collapses to the single point 0 with weight 0.
    """

    a: float
    M: int
    points: np.ndarray = field(init=False, repr=False, compare=False)
    weight: float = field(init=False)

    def __post_init__(self):
        if self.a < 0 or not np.isfinite(self.a):
            raise DomainError("strip width a must be finite and >= 0")
        if self.M < 1:
            raise ConfigurationError("grid needs M >= 1")
        if self.a == 0:
            pts, w = np.zeros(1), 0.0
        else:
            pts = (np.arange(self.M) + 0.5) * (self.a / self.M)
            w = self.a / self.M
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weight", float(w))

    @property
    def size(self):
        return len(self.points)

    def integrate(self, values):
        return self.weight * np.sum(values, axis=-1)


def make_grid(a: float, M: int) -> Grid:
    return Grid(float(a), int(M))


class RngStream:
    """Counter-based stream keyed by (seed, stream_id).

    Two streams with the same key and counter produce identical draws.
    ``generator()`` hands out a fresh numpy Generator positioned at the
    stored counter; ``child(k)`` derives an independent keyed sub-stream.
    """

    __slots__ = ("seed", "stream_id", "counter")

    def __init__(self, seed: int, stream_id: int = 0, counter: int = 0):
        if seed < 0 or stream_id < 0:
            raise DomainError("seed and stream id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.counter = int(counter)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    def __eq__(self, other):
        return isinstance(other, RngStream) and (self.seed, self.stream_id, self.counter) == (
            other.seed, other.stream_id, other.counter)

    def __hash__(self):
        return hash((self.seed, self.stream_id, self.counter))

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF],
                       dtype=np.uint64)
        bg = np.random.Philox(key=key, counter=self.counter)
        return np.random.Generator(bg)

    def child(self, k: int) -> "RngStream":
        ss = np.random.SeedSequence([self.seed, self.stream_id, int(k)])
        sid = int(ss.generate_state(1, np.uint64)[0])
        return RngStream(self.seed, sid, 0)

    def advance(self, blocks: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.counter + int(blocks))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise DomainError(f"cannot build a generator from {type(rng).__name__}")


def sample_increments(model: IncrementModel, rng, size=None):
    if model.sampler is None:
        raise UnsupportedModelError(f"model '{model.variant}' has no sampler")
    return model.sampler(as_generator(rng), size)


def sample_increment(model: IncrementModel, rng) -> float:
    return float(sample_increments(model, rng, None))
