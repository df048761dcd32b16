"""Lagrange multipliers, extremal profiles, and admissibility verification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .constants import (closed_form_multiplier_values, gamma_exponent, q_star)
from .errors import (AsymmetryError, ConvergenceError, DomainError)
from .model import (DiscreteInstance, ProblemSpec, Regime, classify_regime,
                    effective_triple, inv)
from .quadrature import QuadratureConfig, cone_integral
from .specialfn import power_balance_root_vec, solve_shrinkage_vec


@dataclass(frozen=True)
class MultiplierSolution:
    """Multipliers making the constructed profile satisfy every constraint
    with equality (or slackness when a multiplier is zero)."""

    lambda0: float
    lambda_: float
    xi: Optional[float]
    regime: Regime

    def __post_init__(self):
        if self.lambda0 < 0 or self.lambda_ < 0:
            raise DomainError("multipliers must be nonnegative")
        if self.lambda0 + self.lambda_ <= 0:
            raise DomainError("lambda0 + lambda must be positive")


def closed_form_multipliers(spec: ProblemSpec, i1: float, i2: float) -> MultiplierSolution:
    """Multipliers of the homogeneous problem from its reduced integrals."""
    plain, _ = spec.reduced()
    e = plain.exponents
    regime = classify_regime(e)
    if math.isinf(e.p) or math.isinf(e.r):
        raise DomainError("closed-form multipliers require finite exponents")
    if not (i1 > 0 and i2 > 0 and math.isfinite(i1) and math.isfinite(i2)):
        raise DomainError("I1, I2 must be finite and positive")
    g = gamma_exponent(plain.nu, plain.eta, plain.d, e)
    if not (0.0 < g < 1.0):
        raise DomainError(f"gamma={g:.6g} outside (0, 1)")
    vals = closed_form_multiplier_values(plain, g, i1, i2)
    return MultiplierSolution(vals.get("lambda0", 0.0), vals.get("lambda", 0.0),
                              vals.get("xi"), regime)


@dataclass(frozen=True)
class ExtremalProfile:
    """The worst-case profile, evaluable anywhere on the cone."""

    spec: ProblemSpec            # reduced plain spec
    solution: MultiplierSolution

    @property
    def regime(self) -> Regime:
        return self.solution.regime

    def _weights_at(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        e = self.spec.exponents
        r_c = e.q if self.regime is Regime.P1 else e.r
        psi = self.spec.psi.value(points)
        s = np.zeros(points.shape[0])
        for w in self.spec.phis:
            s = s + w.value(points) ** r_c
        return psi, s

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        e = self.spec.exponents
        p, q, r = e.p, e.q, e.r
        l0, lam = self.solution.lambda0, self.solution.lambda_
        psi, s = self._weights_at(points)
        x = np.zeros(points.shape[0])
        pos = psi > 0
        if self.regime is Regime.P:
            if l0 <= 0:
                raise DomainError("regime requires lambda0 > 0 for a finite profile")
            a = l0 / psi[pos] ** q
            b = lam * s[pos] / psi[pos] ** q
            x[pos] = power_balance_root_vec(a, b, p, q, r)
        elif self.regime is Regime.P1:
            if l0 <= 0:
                raise DomainError("regime requires lambda0 > 0 for a finite profile")
            gap = np.maximum(psi[pos] ** q - lam * s[pos], 0.0)
            x[pos] = (q / (p * l0) * gap) ** (1.0 / (p - q))
        else:
            ok = pos & (s > 0)
            gap = np.maximum(psi[ok] ** p - l0, 0.0)
            x[ok] = (p / (r * lam) * gap / s[ok]) ** (1.0 / (r - p))
        return x

    def shrinkage_values(self, points: np.ndarray) -> np.ndarray:
        """The profile through the scaled shrinkage fraction (regime P only).

        Must agree pointwise with values(); the two routes solve different
        scalar equations.
        """
        if self.regime is not Regime.P:
            raise DomainError("shrinkage route applies to the strict regime only")
        if self.solution.xi is None:
            raise DomainError("solution carries no scale")
        points = np.atleast_2d(points)
        e = self.spec.exponents
        p, q, r = e.p, e.q, e.r
        l0 = self.solution.lambda0
        psi, s = self._weights_at(points)
        scaled = points * self.solution.xi
        psi_s, s_s = self._weights_at(scaled)
        x = np.zeros(points.shape[0])
        pos = (psi > 0) & (s_s > 0)
        rhs = s_s[pos] ** (-1.0 / (r - q)) * psi_s[pos] ** (
            q * (p - r) / ((p - q) * (r - q)))
        k = solve_shrinkage_vec(rhs, p, q, r)
        x[pos] = (q * psi[pos] ** q / (p * l0) * k) ** (1.0 / (p - q))
        return x

    def stationarity_residual(self, points: np.ndarray) -> float:
        """Max relative residual of the pointwise optimality equation."""
        points = np.atleast_2d(points)
        e = self.spec.exponents
        p, q, r = e.p, e.q, e.r
        l0, lam = self.solution.lambda0, self.solution.lambda_
        psi, s = self._weights_at(points)
        x = self.values(points)
        pos = psi > 0
        if self.regime is Regime.P:
            res = (-q * psi[pos] ** q + p * l0 * x[pos] ** (p - q)
                   + r * lam * s[pos] * x[pos] ** (r - q))
            return float(np.max(np.abs(res) / (q * psi[pos] ** q)))
        if self.regime is Regime.P1:
            ref = (q / (p * l0) * np.maximum(psi[pos] ** q - lam * s[pos], 0.0)) ** (
                1.0 / (p - q))
            scale = np.maximum(np.abs(ref), 1e-30)
            return float(np.max(np.abs(x[pos] - ref) / scale))
        ok = pos & (s > 0)
        ref = (p / (r * lam) * np.maximum(psi[ok] ** p - l0, 0.0) / s[ok]) ** (
            1.0 / (r - p))
        scale = np.maximum(np.abs(ref), 1e-30)
        return float(np.max(np.abs(x[ok] - ref) / scale))

    def kink_radius(self, dirs: np.ndarray) -> Optional[np.ndarray]:
        """Per-direction radius of the profile's positive-part kink.

        None when the profile is smooth (strict regime) or the kink is
        direction independent and absent.
        """
        e = self.spec.exponents
        q = e.q
        eta, nu = self.spec.eta, self.spec.nu
        l0, lam = self.solution.lambda0, self.solution.lambda_
        dirs = np.atleast_2d(dirs)
        if self.regime is Regime.P1:
            if lam <= 0 or eta == nu:
                return None
            psi_t = self.spec.psi.profile(dirs)
            s_t = np.zeros(dirs.shape[0])
            for w in self.spec.phis:
                s_t = s_t + w.profile(dirs) ** q
            base = lam * s_t / psi_t ** q
            return base ** (1.0 / (q * (eta - nu)))
        if self.regime is Regime.P2:
            if eta == 0 or l0 <= 0:
                return None
            psi_t = self.spec.psi.profile(dirs)
            return (l0 / psi_t ** e.p) ** (1.0 / (eta * e.p))
        return None

    def radial_scale(self, dirs: np.ndarray) -> np.ndarray:
        """Characteristic radius per direction for radial quadrature."""
        k = self.kink_radius(dirs)
        if k is not None:
            return k
        xi = self.solution.xi
        scale = 1.0 / xi if xi else 1.0
        return np.full(np.atleast_2d(dirs).shape[0], scale)


def build_profile(spec: ProblemSpec, sol: MultiplierSolution) -> ExtremalProfile:
    plain, _ = spec.reduced()
    return ExtremalProfile(plain, sol)


def _polar_points(dirs: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return (rho[:, :, None] * dirs[:, None, :]).reshape(-1, dirs.shape[1])


def extremal_value(profile: ExtremalProfile, spec: ProblemSpec,
                   cfg: QuadratureConfig) -> float:
    """The objective norm of the profile by radial-angular quadrature."""
    plain, outer = spec.reduced()
    q = plain.exponents.q

    def f_polar(dirs, rho):
        pts = _polar_points(dirs, rho)
        vals = plain.psi.value(pts) ** q * profile.values(pts) ** q
        return vals.reshape(rho.shape)

    total = cone_integral(f_polar, plain.cone, cfg,
                          radial_scale_fn=profile.radial_scale).value
    return outer * total ** (1.0 / q)


def constraint_norms(profile: ExtremalProfile, spec: ProblemSpec,
                     cfg: QuadratureConfig) -> tuple[float, list[float]]:
    """Noise-side norm and per-constraint norms of the profile.

    For an exact multiplier solution these equal delta and 1.
    """
    plain, _ = spec.reduced()
    e = plain.exponents
    r_c = e.q if profile.regime is Regime.P1 else e.r

    def f_noise(dirs, rho):
        pts = _polar_points(dirs, rho)
        return (profile.values(pts) ** e.p).reshape(rho.shape)

    noise = cone_integral(f_noise, plain.cone, cfg,
                          radial_scale_fn=profile.radial_scale).value ** (1.0 / e.p)
    classes = []
    for w in plain.phis:
        def f_cls(dirs, rho, w=w):
            pts = _polar_points(dirs, rho)
            return (w.value(pts) ** r_c * profile.values(pts) ** r_c).reshape(rho.shape)

        val = cone_integral(f_cls, plain.cone, cfg,
                            radial_scale_fn=profile.radial_scale).value
        classes.append(val ** (1.0 / r_c))
    return noise, classes


# ---------------------------------------------------------------------------
# discrete (atomic) multiplier solve


def discrete_profile(inst: DiscreteInstance, regime: Regime, l0: float,
                     lam: float) -> np.ndarray:
    """Per-atom profile for given multipliers; inf marks a degenerate branch."""
    e = inst.exponents
    p, q, r = e.p, e.q, e.r
    psi = np.abs(inst.psi_vals)
    mask = inst.mask
    r_c = q if regime is Regime.P1 else r
    s = np.sum(np.abs(inst.phi_vals) ** r_c, axis=0)
    x = np.zeros(inst.m)
    pos = psi > 0
    if regime is Regime.P:
        a = np.where(mask, l0, 0.0)[pos] / psi[pos] ** q
        b = lam * s[pos] / psi[pos] ** q
        if np.any(a + b == 0):
            raise DomainError("an atom is unbounded: no active constraint reaches it")
        x[pos] = power_balance_root_vec(a, b, p, q, r)
    elif regime is Regime.P1:
        gap = np.maximum(psi ** q - lam * s, 0.0)
        with np.errstate(divide="ignore"):
            x = np.where(mask & pos,
                         (q / (p * l0) * gap) ** (1.0 / (p - q)) if l0 > 0
                         else np.where(gap > 0, np.inf, 0.0),
                         0.0)
    else:
        if np.any(pos & (s == 0)):
            raise DomainError("an atom is unbounded: no constraint weight reaches it")
        gap = np.where(mask, np.maximum(psi ** p - l0, 0.0), psi ** p)
        with np.errstate(divide="ignore"):
            core = np.where(s > 0, gap / np.where(s > 0, s, 1.0), 0.0)
            if lam > 0:
                x = (p / (r * lam) * core) ** (1.0 / (r - p))
            else:
                x = np.where(core > 0, np.inf, 0.0)
    return x


def _grow_bracket(f, start: float, want_negative: bool, max_grow: int = 400):
    """Geometric growth from start until f changes sign; f is monotone."""
    v = f(start)
    if (v <= 0) == want_negative:
        return start, v
    x = start
    for _ in range(max_grow):
        x *= 2.0
        v = f(x)
        if (v <= 0) == want_negative:
            return x, v
    raise ConvergenceError("monotone bracket growth failed")


def discrete_multiplier_solver(inst: DiscreteInstance, tol: float = 1e-11,
                               sym_tol: float = 1e-6) -> MultiplierSolution:
    """Nested monotone root-finding for the discrete multipliers.

    Outer level targets the noise budget with lambda0, inner level the unit
    class constraints with the common lambda; both constraint functions are
    strictly decreasing in their multiplier, so a geometrically grown
    bracket plus Brent iteration is globally convergent.  Boundary branches
    lambda0 = 0 / lambda = 0 follow from complementary slackness.
    """
    e = inst.exponents
    regime = classify_regime(e)
    if any(math.isinf(v) for v in e.as_tuple()):
        raise DomainError("discrete solver requires finite exponents")
    p, q, r = e.p, e.q, e.r
    mu = inst.masses
    mask = inst.mask
    r_c = q if regime is Regime.P1 else r
    psi = np.abs(inst.psi_vals)
    if np.any((psi > 0) & ~mask & (np.sum(np.abs(inst.phi_vals) ** r_c, axis=0) == 0)):
        raise DomainError("an unmasked atom with psi != 0 has no constraint weight")

    def noise_of(x):
        return float(np.sum(mu[mask] * x[mask] ** p))

    def classes_of(x):
        return np.array([float(np.sum(mu * np.abs(fv) ** r_c * x ** r_c))
                         for fv in inst.phi_vals])

    def inner(l0: float) -> float:
        def gap(lam):
            x = discrete_profile(inst, regime, l0, lam)
            if np.any(np.isinf(x)):
                return math.inf
            return float(np.mean(classes_of(x))) - 1.0

        g0 = gap(0.0)
        if g0 <= 0.0:
            return 0.0
        hi, _ = _grow_bracket(gap, 1.0, want_negative=True)
        lo = 0.0 if math.isfinite(g0) else hi / 2.0 ** 60
        return float(brentq(gap, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=300))

    def outer_gap(l0: float) -> float:
        lam = inner(l0)
        x = discrete_profile(inst, regime, l0, lam)
        return noise_of(x) - inst.delta ** p

    # slack noise constraint: lambda0 = 0
    l0_final = None
    if regime is not Regime.P1:
        try:
            if outer_gap(0.0) <= 0.0:
                l0_final = 0.0
        except (DomainError, OverflowError):
            pass
    if l0_final is None:
        hi, _ = _grow_bracket(outer_gap, 1.0, want_negative=True)
        lo = 0.0
        if regime is Regime.P1 or not math.isfinite(outer_gap(lo)):
            lo = hi / 2.0 ** 60
        l0_final = float(brentq(outer_gap, lo, hi, xtol=1e-300, rtol=1e-15,
                                maxiter=300))
    lam_final = inner(l0_final)
    x = discrete_profile(inst, regime, l0_final, lam_final)
    classes = classes_of(x)
    if lam_final > 0 and inst.n > 1:
        dev = float(np.max(np.abs(classes - 1.0)))
        if dev > sym_tol:
            raise AsymmetryError(
                f"constraints cannot share a common multiplier: values {classes}"
            )
    slack = [l0_final * abs(noise_of(x) - inst.delta ** p),
             lam_final * float(np.max(np.abs(classes - 1.0))) if lam_final > 0 else 0.0]
    if max(slack) > 1e-7 * max(1.0, inst.delta ** p):
        raise ConvergenceError(f"complementary slackness residuals too large: {slack}")
    return MultiplierSolution(l0_final, lam_final, None, regime)


def discrete_value(inst: DiscreteInstance, sol: MultiplierSolution) -> float:
    """Closed-form optimum value from the discrete multipliers."""
    e = inst.exponents
    p, q, r = e.p, e.q, e.r
    n = inst.n
    l0, lam = sol.lambda0, sol.lambda_
    dp = inst.delta ** p
    if sol.regime is Regime.P:
        return (p * l0 * dp / q + r * n * lam / q) ** (1.0 / q)
    if sol.regime is Regime.P1:
        return (p * l0 * dp / q + n * lam) ** (1.0 / q)
    return (l0 * dp + r / p * n * lam) ** (1.0 / p)


def discrete_objective(inst: DiscreteInstance, x: np.ndarray) -> float:
    """Direct weighted objective norm of per-atom values."""
    q = inst.exponents.q
    if math.isinf(q):
        return float(np.max(np.abs(inst.psi_vals) * x))
    return float(np.sum(inst.masses * (np.abs(inst.psi_vals) * x) ** q) ** (1.0 / q))
