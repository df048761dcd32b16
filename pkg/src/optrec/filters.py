"""Optimal recovery methods as frequency multipliers t -> alpha(t) in [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constants import LaplacianParams, RecoveryReport
from .errors import AAViolation, DomainError
from .extremal import ExtremalProfile, MultiplierSolution
from .model import (HomogeneousWeight, Normalization, ProblemSpec, Regime,
                    classify_regime, inv)
from .specialfn import solve_shrinkage_vec

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FilterSpec:
    """A frequency multiplier; the method returns alpha(t) psi(t) y(t)."""

    multiplier: Callable[[np.ndarray], np.ndarray]
    psi: HomogeneousWeight
    apply_psi: bool = True
    metadata: dict = field(default_factory=dict)

    def alpha(self, points: np.ndarray) -> np.ndarray:
        return np.clip(self.multiplier(np.atleast_2d(points)), 0.0, 1.0)


def _sum_power(weights, points: np.ndarray, power: float) -> np.ndarray:
    s = np.zeros(np.atleast_2d(points).shape[0])
    for w in weights:
        s = s + w.value(points) ** power
    return s


def multiplier_regime_P(spec: ProblemSpec, sol: MultiplierSolution,
                        route: str = "shrinkage") -> FilterSpec:
    """The strict-regime filter alpha(t) = k(xi t).

    route="shrinkage" solves the implicit fraction equation at the scaled
    point; route="profile" evaluates p lambda0 x^(p-q) |psi|^(-q) / q from
    the extremal profile.  The two must agree pointwise.
    """
    plain, _ = spec.reduced()
    e = plain.exponents
    if classify_regime(e) is not Regime.P:
        raise DomainError("regime filter mismatch")
    p, q, r = e.p, e.q, e.r
    if route == "profile":
        prof = ExtremalProfile(plain, sol)

        def alpha_prof(points: np.ndarray) -> np.ndarray:
            points = np.atleast_2d(points)
            psi = plain.psi.value(points)
            x = prof.values(points)
            out = np.zeros(points.shape[0])
            pos = psi > 0
            out[pos] = (p * sol.lambda0 / q) * x[pos] ** (p - q) / psi[pos] ** q
            return np.clip(out, 0.0, 1.0)

        return FilterSpec(alpha_prof, spec.psi,
                          metadata={"family": "homogeneous-strict", "route": route,
                                    "scale": sol.xi})

    if sol.xi is None:
        raise DomainError("solution carries no scale")

    def alpha(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        z = sol.xi * points
        psi_z = plain.psi.value(z)
        s_z = _sum_power(plain.phis, z, r)
        out = np.zeros(points.shape[0])
        pos = (psi_z > 0) & (s_z > 0)
        rhs = s_z[pos] ** (-1.0 / (r - q)) * psi_z[pos] ** (
            q * (p - r) / ((p - q) * (r - q)))
        out[pos] = solve_shrinkage_vec(rhs, p, q, r)
        return out

    return FilterSpec(alpha, spec.psi,
                      metadata={"family": "homogeneous-strict", "route": route,
                                "scale": sol.xi})


def multiplier_regime_P1(spec: ProblemSpec, sol: MultiplierSolution,
                         route: str = "direct") -> FilterSpec:
    """Threshold filter alpha = (1 - lambda s_q / |psi|^q)_+ for q = r < p.

    route="scaled" evaluates the dimensionless profile at xi t instead;
    both constructions agree for the closed-form multipliers.
    """
    plain, _ = spec.reduced()
    e = plain.exponents
    if classify_regime(e) is not Regime.P1:
        raise DomainError("regime filter mismatch")
    q = e.q

    if route == "scaled":
        if sol.xi is None:
            raise DomainError("solution carries no scale")

        def alpha_scaled(points: np.ndarray) -> np.ndarray:
            z = sol.xi * np.atleast_2d(points)
            psi_z = plain.psi.value(z)
            s_z = _sum_power(plain.phis, z, q)
            out = np.zeros(z.shape[0])
            pos = psi_z > 0
            out[pos] = np.maximum(1.0 - s_z[pos] / psi_z[pos] ** q, 0.0)
            return out

        return FilterSpec(alpha_scaled, spec.psi,
                          metadata={"family": "threshold", "route": route,
                                    "scale": sol.xi})

    lam = sol.lambda_

    def alpha(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        psi = plain.psi.value(points)
        s_q = _sum_power(plain.phis, points, q)
        out = np.zeros(points.shape[0])
        pos = psi > 0
        out[pos] = np.maximum(1.0 - lam * s_q[pos] / psi[pos] ** q, 0.0)
        return out

    return FilterSpec(alpha, spec.psi,
                      metadata={"family": "threshold", "route": route,
                                "threshold": lam})


def multiplier_regime_P2(spec: ProblemSpec, sol: MultiplierSolution) -> FilterSpec:
    """Clip filter alpha = min(1, lambda0 / |psi|^p) for q = p < r."""
    plain, _ = spec.reduced()
    e = plain.exponents
    if classify_regime(e) is not Regime.P2:
        raise DomainError("regime filter mismatch")
    p = e.p
    l0 = sol.lambda0

    def alpha(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        psi = plain.psi.value(points)
        out = np.zeros(points.shape[0])
        pos = psi > 0
        out[pos] = np.minimum(1.0, l0 / psi[pos] ** p)
        return out

    return FilterSpec(alpha, spec.psi,
                      metadata={"family": "clip", "threshold": l0})


def fourier_L2_filter(spec: ProblemSpec, report: RecoveryReport) -> FilterSpec:
    """Threshold filter (1 - beta s_2 / |psi|^2)_+ in the noisy-transform
    L2 problem; support is {|psi|^2 > beta s_2}."""
    if "beta" not in report.multipliers:
        raise DomainError("report carries no threshold; run the L2 error first")
    beta_val = report.multipliers["beta"]

    def alpha(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        psi = spec.psi.value(points)
        s2 = _sum_power(spec.phis, points, 2.0)
        out = np.zeros(points.shape[0])
        pos = psi > 0
        out[pos] = np.maximum(1.0 - beta_val * s2[pos] / psi[pos] ** 2, 0.0)
        return out

    return FilterSpec(alpha, spec.psi,
                      metadata={"family": "l2-threshold", "threshold": beta_val})


def _solve_fraction_power(a: np.ndarray, pm1: float, n_iter: int = 90) -> np.ndarray:
    """Solve k / (1 - k)^pm1 = a for k in [0, 1), elementwise; a >= 0."""
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    if np.any(pos):
        target = np.log(a[pos])
        lo = np.zeros(target.shape)
        hi = np.ones(target.shape)
        for _ in range(n_iter):
            mid = 0.5 * (lo + hi)
            g = np.log(mid) - pm1 * np.log1p(-mid) - target
            take_hi = g > 0
            hi = np.where(take_hi, mid, hi)
            lo = np.where(take_hi, lo, mid)
        out[pos] = 0.5 * (lo + hi)
    return out


def fourier_Linf_filter(spec: ProblemSpec, report: RecoveryReport,
                        literal_scale_exponent: bool = False) -> FilterSpec:
    """Filter for the sup-metric noisy-transform problem, all three p-branches.

    The scale exponent uses the constraint degree nu; set
    literal_scale_exponent to reproduce the n-based variant instead.
    """
    if "xi1" not in report.multipliers:
        raise DomainError("report carries no scale; run the sup-metric error first")
    p = spec.exponents.p
    d = spec.d
    denom = (spec.n if literal_scale_exponent else spec.nu) + d * (0.5 - inv(p))
    c = report.multipliers["xi1"] ** (1.0 / denom)
    factor = TWO_PI ** d

    def k_of(z: np.ndarray) -> np.ndarray:
        psi = spec.psi.value(z)
        s2 = _sum_power(spec.phis, z, 2.0)
        out = np.zeros(z.shape[0])
        pos = psi > 0
        if p == 1:
            out[pos] = np.minimum(1.0, factor / psi[pos])
        elif math.isinf(p):
            out[pos] = np.maximum(1.0 - s2[pos] / psi[pos], 0.0)
        else:
            a = factor * psi[pos] ** (p - 2.0) / s2[pos] ** (p - 1.0)
            out[pos] = _solve_fraction_power(a, p - 1.0)
        return out

    def alpha(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        out = k_of(c * points)
        out[spec.psi.value(points) == 0] = 0.0
        return out

    return FilterSpec(alpha, spec.psi,
                      metadata={"family": "sup-threshold", "scale": c,
                                "literal_scale_exponent": literal_scale_exponent})


def laplacian_aa_bound(a_fn: Callable[[np.ndarray], np.ndarray],
                       params: LaplacianParams, points: np.ndarray) -> np.ndarray:
    """The admissibility functional S at given frequencies."""
    points = np.atleast_2d(points)
    sym = np.sum(np.abs(points) ** params.theta, axis=1) ** (
        2.0 * params.eta / params.theta)
    s2nu = np.sum(np.abs(points) ** (2.0 * params.nu), axis=1)
    a = np.asarray(a_fn(points), dtype=float)
    l1, l2 = params.lambda1, params.lambda2
    out = np.zeros(points.shape[0])
    pos = s2nu > 0
    out[pos] = sym[pos] * (np.abs(1.0 - a[pos]) ** 2 / (l2 * s2nu[pos])
                           + np.abs(a[pos]) ** 2 / (TWO_PI ** params.d * l1))
    out[~pos] = sym[~pos] * np.abs(a[~pos]) ** 2 / (TWO_PI ** params.d * l1)
    return out


def check_aa(a_fn: Callable[[np.ndarray], np.ndarray], params: LaplacianParams,
             samples: int, rng_seed: int, raise_on_violation: bool = False,
             tol: float = 1e-12) -> float:
    """Max of the admissibility functional over random frequencies.

    Sampling covers radii log-uniform around the balance radius in random
    directions, plus the diagonal ray where the bound is tight.
    """
    rng = np.random.default_rng(rng_seed)
    d = params.d
    rho0 = params.balance_radius
    radii = rho0 * np.exp(rng.uniform(math.log(1e-3), math.log(1e3), samples))
    dirs = rng.standard_normal((samples, d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    pts = radii[:, None] * dirs
    diag = np.linspace(0.2, 5.0, 64)[:, None] * (rho0 / math.sqrt(d)) * np.ones(d)
    pts = np.vstack([pts, diag, np.zeros((1, d))])
    s_max = float(np.max(laplacian_aa_bound(a_fn, params, pts)))
    if raise_on_violation and s_max > 1.0 + tol:
        raise AAViolation(f"spectral factor violates the bound: max S = {s_max:.6g}")
    return s_max


def laplacian_filter(params: LaplacianParams) -> FilterSpec:
    """Canonical optimal factor a = c1 / (c1 + lambda2 sum |t_j|^(2 nu))."""
    params.validate()
    c1 = TWO_PI ** params.d * params.lambda1
    l2 = params.lambda2
    two_nu = 2.0 * params.nu

    def a_fn(points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return c1 / (c1 + l2 * np.sum(np.abs(points) ** two_nu, axis=1))

    psi = HomogeneousWeight.theta_norm_power(params.theta, params.eta)
    return FilterSpec(a_fn, psi,
                      metadata={"family": "laplace-power",
                                "balance_radius": params.balance_radius})


def constant_filter(value: float, psi: HomogeneousWeight) -> FilterSpec:
    """alpha identically equal to a constant in [0, 1] (e.g. the naive 1)."""
    if not 0.0 <= value <= 1.0:
        raise DomainError("constant multiplier must lie in [0, 1]")

    def alpha(points: np.ndarray) -> np.ndarray:
        return np.full(np.atleast_2d(points).shape[0], value)

    return FilterSpec(alpha, psi, metadata={"family": "constant", "value": value})


def optimal_filter(spec: ProblemSpec, report: RecoveryReport) -> FilterSpec:
    """Dispatch to the optimal filter family for a spec and its report."""
    if spec.normalization is Normalization.FOURIER and spec.sup_target:
        return fourier_Linf_filter(spec, report)
    if spec.normalization is Normalization.FOURIER and "beta" in report.multipliers:
        return fourier_L2_filter(spec, report)
    plain, _ = spec.reduced()
    regime = classify_regime(plain.exponents)
    sol = MultiplierSolution(report.multipliers.get("lambda0", 0.0),
                             report.multipliers.get("lambda", 0.0),
                             report.multipliers.get("xi"), regime)
    if regime is Regime.P:
        return multiplier_regime_P(spec, sol)
    if regime is Regime.P1:
        return multiplier_regime_P1(spec, sol)
    return multiplier_regime_P2(spec, sol)
