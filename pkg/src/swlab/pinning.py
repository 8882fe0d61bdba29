"""Pinning functions phi_a on the strip [0, a] and the Condition (A) score."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import DomainError
from .rw_core import Grid, critical_beta

KINDS = ("constant", "smooth", "zero")


def _bump_f(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_bump_g(a: float, x, eps: Optional[float] = None):
    """g_a(x) = eps + (1/a) f(t) / (f(1 - t) + f(t)),  t = (a - x)/eps."""
    eps = a * a if eps is None else float(eps)
    x = np.asarray(x, dtype=float)
    t = (a - x) / eps
    num = _bump_f(t)
    return eps + num / (a * (_bump_f(1.0 - t) + num))


def eval_smooth_bump(a: float, x, eps: Optional[float] = None, beta_c: Optional[float] = None):
    """phi_a(x) = beta_c + log g_a(x) on [0, a]."""
    if a <= 0:
        raise DomainError("smooth bump needs a > 0")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa > a):
        raise DomainError("x must lie in [0, a]")
    bc = critical_beta() if beta_c is None else beta_c
    out = bc + np.log(smooth_bump_g(a, xa, eps))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class PinningFunction:
    """phi_a on [0, a].  ``beta`` is the constant level for kind 'constant'."""

    a: float
    kind: str
    beta: float = 0.0
    eps: Optional[float] = None
    beta_c: float = field(default_factory=critical_beta)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown pinning kind '{self.kind}'")
        if not self.a > 0:
            raise DomainError("pinning needs a > 0")
        if self.kind == "smooth" and self.eps is None:
            object.__setattr__(self, "eps", self.a * self.a)

    def evaluate(self, x):
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0) or np.any(xa > self.a):
            raise DomainError("x must lie in [0, a]")
        if self.kind == "constant":
            out = np.full(xa.shape, float(self.beta))
        elif self.kind == "zero":
            out = np.zeros(xa.shape)
        else:
            out = self.beta_c + np.log(smooth_bump_g(self.a, xa, self.eps))
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    @property
    def exp_integral(self) -> float:
        """int_0^a exp(phi_a)."""
        if "exp_int" not in self._cache:
            if self.kind == "constant":
                v = self.a * np.exp(self.beta)
            elif self.kind == "zero":
                v = self.a
            else:
                brk = [self.a - self.eps] if self.eps < self.a else None
                g = quad(lambda x: float(smooth_bump_g(self.a, x, self.eps)), 0.0, self.a,
                         points=brk, epsabs=0.0, epsrel=1e-13, limit=200)[0]
                v = np.exp(self.beta_c) * g
            self._cache["exp_int"] = float(v)
        return self._cache["exp_int"]

    def grid_weights(self, grid: Grid) -> np.ndarray:
        """exp(phi_a(x_j)) at the grid points."""
        return np.exp(self.evaluate(grid.points))

    def grid_exp_integral(self, grid: Grid) -> float:
        return grid.integrate(self.grid_weights(grid))

    def describe(self):
        if self.kind == "constant":
            return f"constant(beta={self.beta:.12g})"
        if self.kind == "smooth":
            return f"smooth(eps={self.eps:.12g})"
        return "zero"


def constant_pinning(a: float, beta: float) -> PinningFunction:
    return PinningFunction(float(a), "constant", float(beta))


def smooth_bump(a: float, eps: Optional[float] = None) -> PinningFunction:
    return PinningFunction(float(a), "smooth", 0.0, eps)


def zero_pinning(a: float) -> PinningFunction:
    return PinningFunction(float(a), "zero")


def condition_A_score(p: PinningFunction, beta_c: Optional[float] = None,
                      grid: Optional[Grid] = None) -> float:
    """(1/a)(log int_0^a e^{phi_a} - beta_c).

    With ``grid`` the integral is the midpoint quadrature used by the DP.
    """
    if p.a <= 0:
        raise DomainError("score undefined at a = 0")
    bc = p.beta_c if beta_c is None else beta_c
    val = p.exp_integral if grid is None else p.grid_exp_integral(grid)
    return float((np.log(val) - bc) / p.a)
