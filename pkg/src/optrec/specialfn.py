"""Special functions and monotone scalar solvers used by the closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError

# Lanczos approximation, g = 7, 9 terms.  Relative accuracy ~1e-15 on the
# positive axis, which the closed forms need through log-beta differences.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0.

    Lanczos rational approximation with reflection below 1/2.
    """
    if not x > 0.0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(acc)


def log_beta(a: float, b: float) -> float:
    """log B(a, b) for a, b > 0."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"log_beta requires positive arguments, got ({a}, {b})")
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def beta(a: float, b: float) -> float:
    """Euler beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)."""
    return math.exp(log_beta(a, b))


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError("bracket requires lo < hi")
        if self.tol <= 0:
            raise DomainError("tol must be positive")


def bracketed_root(f: Callable[[float], float], bracket: RootBracket) -> float:
    """Root of f inside the bracket, with geometric expansion if needed.

    Bisection only: every target here is monotone, so this cannot fail once
    a sign change is located.
    """
    lo, hi = bracket.lo, bracket.hi
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    expand = 0
    while flo * fhi > 0.0:
        width = hi - lo
        lo, hi = lo - width, hi + width
        flo, fhi = f(lo), f(hi)
        expand += 1
        if expand > 60 or not (math.isfinite(flo) and math.isfinite(fhi)):
            raise ConvergenceError("no sign change found by bracket expansion")
    for _ in range(bracket.max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < bracket.tol or (hi - lo) < bracket.tol * max(1.0, abs(mid)):
            return mid
        if flo * fm <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _check_balance_exponents(p: float, q: float, r: float) -> None:
    if not (1.0 <= q < p and q < r):
        raise DomainError(f"need 1 <= q < p and q < r, got p={p}, q={q}, r={r}")
    if math.isinf(p) or math.isinf(r):
        raise DomainError("p and r must be finite")


def power_balance_root_vec(a: np.ndarray, b: np.ndarray, p: float, q: float, r: float,
                           n_iter: int = 80) -> np.ndarray:
    """Vectorized positive root of -q + p*a*u^(p-q) + r*b*u^(r-q) = 0.

    The left side is strictly increasing in u, so the root is unique; each
    single-term and p == r case is closed form, the rest is bisection on
    [0, u0] where u0 makes one term alone reach q.
    """
    _check_balance_exponents(p, q, r)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    if np.any(a < 0) or np.any(b < 0):
        raise DomainError("coefficients must be nonnegative")
    if np.any((a == 0) & (b == 0)):
        raise DomainError("a + b must be positive")

    if p == r:
        return (q / (p * a + r * b)) ** (1.0 / (p - q))

    out = np.empty_like(a)
    only_a = b == 0
    only_b = a == 0
    both = ~(only_a | only_b)
    if np.any(only_a):
        out[only_a] = (q / (p * a[only_a])) ** (1.0 / (p - q))
    if np.any(only_b):
        out[only_b] = (q / (r * b[only_b])) ** (1.0 / (r - q))
    if np.any(both):
        aa, bb = a[both], b[both]
        u_a = (q / (p * aa)) ** (1.0 / (p - q))
        u_b = (q / (r * bb)) ** (1.0 / (r - q))
        hi = np.minimum(u_a, u_b)
        lo = np.zeros_like(hi)
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            f = -q + p * aa * mid ** (p - q) + r * bb * mid ** (r - q)
            take_hi = f > 0
            hi = np.where(take_hi, mid, hi)
            lo = np.where(take_hi, lo, mid)
        out[both] = 0.5 * (lo + hi)
    return out


def power_balance_root(a: float, b: float, p: float, q: float, r: float) -> float:
    """Scalar positive root of -q + p*a*u^(p-q) + r*b*u^(r-q) = 0."""
    return float(power_balance_root_vec(np.array([a]), np.array([b]), p, q, r)[0])


def solve_shrinkage_vec(rhs: np.ndarray, p: float, q: float, r: float,
                        n_iter: int = 90) -> np.ndarray:
    """Vectorized solve of k^(1/(p-q)) / (1-k)^(1/(r-q)) = rhs for k in [0, 1).

    The left side increases from 0 to infinity on [0, 1), so the solution
    is unique and monotone nondecreasing in rhs.
    """
    _check_balance_exponents(p, q, r)
    rhs = np.asarray(rhs, dtype=float)
    if np.any(rhs < 0):
        raise DomainError("rhs must be nonnegative")
    if p == r:
        v = rhs ** (p - q)
        return v / (1.0 + v)
    out = np.zeros_like(rhs)
    pos = rhs > 0
    if np.any(pos):
        target = np.log(rhs[pos])
        lo = np.zeros(target.shape)
        hi = np.ones(target.shape)
        cp, cr = 1.0 / (p - q), 1.0 / (r - q)
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            g = cp * np.log(mid) - cr * np.log1p(-mid) - target
            take_hi = g > 0
            hi = np.where(take_hi, mid, hi)
            lo = np.where(take_hi, lo, mid)
        out[pos] = 0.5 * (lo + hi)
    return out


def solve_shrinkage(rhs: float, p: float, q: float, r: float) -> float:
    """Scalar shrinkage fraction k in [0, 1) for the homogeneous filter."""
    return float(solve_shrinkage_vec(np.array([rhs]), p, q, r)[0])
