"""Closed-form exponents, sharp constants, and optimal-recovery errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import DegenerateError, DomainError, HypothesisError, SymmetryError
from .model import (ConeDomain, ExponentTriple, HomogeneousWeight, Normalization,
                    ProblemSpec, RecoveryReport, Regime, carlson_problem,
                    classify_regime, coordinate_powers, inv)
from .quadrature import QuadratureConfig, angular_symmetry_report
from .specialfn import beta as beta_fn
from .specialfn import log_beta

TWO_PI = 2.0 * math.pi


def gamma_exponent(nu: float, eta: float, d: int, e: ExponentTriple) -> float:
    """The interpolation exponent (nu - eta - d(1/q - 1/r)) / (nu + d(1/r - 1/p))."""
    denom = nu + d * (inv(e.r) - inv(e.p))
    if denom == 0.0:
        raise DegenerateError("nu + d(1/r - 1/p) vanishes")
    return (nu - eta - d * (inv(e.q) - inv(e.r))) / denom


def q_star(gamma: float, e: ExponentTriple) -> float:
    """Solves 1/q* = 1/q - gamma/p - (1 - gamma)/r."""
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"gamma={gamma} outside (0, 1)")
    inv_qs = inv(e.q) - gamma * inv(e.p) - (1.0 - gamma) * inv(e.r)
    if inv_qs <= 0.0:
        raise DomainError("resulting 1/q* is not positive")
    return 1.0 / inv_qs


@dataclass(frozen=True)
class ExponentBundle:
    gamma: float
    q_star: float
    nu: float
    eta: float

    @property
    def in_range(self) -> bool:
        return 0.0 < self.gamma < 1.0

    def identity_residual(self, e: ExponentTriple) -> float:
        return abs(1.0 / self.q_star
                   - (inv(e.q) - self.gamma * inv(e.p) - (1.0 - self.gamma) * inv(e.r)))


def exponent_bundle(spec: ProblemSpec) -> ExponentBundle:
    plain, _ = spec.reduced()
    g = gamma_exponent(plain.nu, plain.eta, plain.d, plain.exponents)
    return ExponentBundle(g, q_star(g, plain.exponents), plain.nu, plain.eta)


def _log_reduced_scale(gamma: float, qs: float, I: float, nu: float, d: int,
                       e: ExponentTriple) -> float:
    """log of M where I1 = gamma*M and I2 = (1-gamma)*M/n.

    Uses the shifted beta form B(a+1, b) / (gamma r |nu + d(1/r - 1/p)|),
    which stays finite as p -> inf where B(a, b) itself diverges.
    """
    a1 = qs * gamma * inv(e.p)
    b1 = qs * (1.0 - gamma) / e.r
    d_abs = abs(nu + d * (inv(e.r) - inv(e.p)))
    return log_beta(a1 + 1.0, b1) + math.log(I) - math.log(gamma * e.r * d_abs)


def sharp_constant(gamma: float, qs: float, I: float, nu: float, d: int,
                   e: ExponentTriple, n: int) -> tuple[float, float]:
    """The constant K with E = K delta^gamma, and the scale M (see above)."""
    log_m = _log_reduced_scale(gamma, qs, I, nu, d, e)
    log_k = (-gamma * inv(e.p) * math.log(gamma)
             - ((1.0 - gamma) / e.r) * math.log((1.0 - gamma) / n)
             + log_m / qs)
    return math.exp(log_k), math.exp(log_m)


def _sharp_constant_unshifted(gamma: float, qs: float, I: float, nu: float, d: int,
                              e: ExponentTriple, n: int) -> float:
    """Direct form with B(q* gamma/p, q*(1-gamma)/r); finite p only."""
    a1 = qs * gamma / e.p
    b1 = qs * (1.0 - gamma) / e.r
    d_abs = abs(nu + d * (inv(e.r) - inv(e.p)))
    log_k = (-gamma / e.p * math.log(gamma)
             - ((1.0 - gamma) / e.r) * math.log((1.0 - gamma) / n)
             + (log_beta(a1, b1) + math.log(I)
                - math.log(d_abs * (gamma * e.r + (1.0 - gamma) * e.p))) / qs)
    return math.exp(log_k)


def closed_form_scale(plain: ProblemSpec, gamma: float, i1: float, i2: float) -> float:
    """The method scale xi with the filter alpha(t) = k(xi t)."""
    e = plain.exponents
    d_exp = plain.nu + plain.d * (inv(e.r) - inv(e.p))
    log_xi_hat = (math.log(plain.delta) - inv(e.p) * math.log(i1)
                  + math.log(i2) / e.r)
    return math.exp(log_xi_hat / d_exp)


def closed_form_multiplier_values(plain: ProblemSpec, gamma: float,
                                  i1: float, i2: float) -> dict[str, float]:
    """lambda0, lambda (common), and xi for the active-constraint solution."""
    e = plain.exponents
    p, q, r = e.p, e.q, e.r
    d, nu, eta, delta = plain.d, plain.nu, plain.eta, plain.delta
    regime = classify_regime(e)
    xi = closed_form_scale(plain, gamma, i1, i2)
    log_xi, log_d = math.log(xi), math.log(delta)
    out = {"xi": xi}
    if regime is Regime.P:
        if math.isinf(p):
            return out
        log_l0 = (math.log(q / p) + ((p - q) / p) * math.log(i1)
                  + (-eta * q - d * (p - q) / p) * log_xi + (q - p) * log_d)
        l0 = math.exp(log_l0)
        log_l = (math.log(q / r) - ((r - q) / (p - q)) * (math.log(q) - math.log(p) - log_l0)
                 + (-eta * q * (p - r) / (p - q) + nu * r) * log_xi)
        out["lambda0"] = l0
        out["lambda"] = math.exp(log_l)
    elif regime is Regime.P1:
        d1 = nu + d * (inv(q) - inv(p))
        out["lambda"] = math.exp((nu - eta) * q * log_xi)
        if math.isinf(p):
            out["lambda0"] = 0.0
        else:
            log_l0 = (math.log(q / p) + math.log(i1) - math.log(i2) - p * log_d
                      + ((eta - nu) / d1)
                      * (-(q / p) * math.log(i1) + math.log(i2) + q * log_d))
            out["lambda0"] = math.exp(log_l0)
    else:  # P2
        d_exp = nu + d * (inv(r) - inv(p))
        out["lambda0"] = math.exp(-eta * p * log_xi)
        log_l = (math.log(p / r) + (r / p - 1.0) * math.log(i1) + (p - r) * log_d
                 + ((p * eta / r - d_exp) / d_exp)
                 * ((r / p) * math.log(i1) - math.log(i2) - r * log_d))
        out["lambda"] = math.exp(log_l)
    return out


def _closed_form_report(plain: ProblemSpec, cfg: QuadratureConfig, outer: float,
                        precomputed: Optional[tuple[float, list[float], float]] = None,
                        i_scale: float = 1.0, sym_tol: float = 1e-6) -> RecoveryReport:
    e = plain.exponents
    classify_regime(e)
    gamma = gamma_exponent(plain.nu, plain.eta, plain.d, e)
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"gamma={gamma:.6g} outside (0, 1); closed form does not apply")
    qs = q_star(gamma, e)
    if precomputed is None:
        I, ijs, sym = angular_symmetry_report(plain, gamma, qs, cfg)
    else:
        I, ijs, sym = precomputed
    if sym > sym_tol:
        raise SymmetryError(
            f"constraint integrals are not symmetric: I'_j = {ijs}, deviation {sym:.3g}"
        )
    n = plain.n
    I_eff = I * i_scale
    K, M = sharp_constant(gamma, qs, I_eff, plain.nu, plain.d, e, n)
    i1 = gamma * M
    i2 = (1.0 - gamma) * M / n
    E = outer * K * plain.delta ** gamma
    # independent evaluation through the (I1, I2) decomposition
    e_dec = outer * (plain.delta ** gamma * i1 ** (-gamma * inv(e.p))
                     * i2 ** (-(1.0 - gamma) / e.r) * (i1 + n * i2) ** (1.0 / e.q))
    residuals = {
        "decomposition": abs(E - e_dec) / E,
        "exponent_identity": abs(1.0 / qs - (inv(e.q) - gamma * inv(e.p)
                                             - (1.0 - gamma) / e.r)),
        "symmetry": sym,
    }
    if not math.isinf(e.p):
        k_direct = _sharp_constant_unshifted(gamma, qs, I_eff, plain.nu, plain.d, e, n)
        residuals["beta_shift"] = abs(K - k_direct) / K
    mult = closed_form_multiplier_values(plain, gamma, i1, i2)
    mult["I1"] = i1
    mult["I2"] = i2
    return RecoveryReport(E=E, gamma=gamma, q_star=qs, I=I, constant=K,
                          multipliers=mult, residuals=residuals)


def recovery_error_homogeneous(spec: ProblemSpec, cfg: QuadratureConfig,
                               sym_tol: float = 1e-6) -> RecoveryReport:
    """Optimal recovery error E = K delta^gamma for a homogeneous-weight spec."""
    plain, outer = spec.reduced()
    return _closed_form_report(plain, cfg, outer, sym_tol=sym_tol)


@dataclass(frozen=True)
class CarlsonParams:
    """Three-weight inequality family on the positive orthant.

    w = |t|^theta, w0 = |t|^theta0, w_j = |t_j|^theta1 with theta = d(1 - 1/q),
    theta0 = d - (lam + d)/p, theta1 = d + (mu - d)/r.
    """

    d: int
    exponents: ExponentTriple
    lam: float
    mu: float

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0:
            raise DomainError("lam and mu must be positive")
        if math.isinf(self.exponents.p) or math.isinf(self.exponents.r):
            raise DomainError("p and r must be finite in this family")

    @property
    def theta(self) -> float:
        return self.d * (1.0 - inv(self.exponents.q))

    @property
    def theta0(self) -> float:
        return self.d - (self.lam + self.d) / self.exponents.p

    @property
    def theta1(self) -> float:
        return self.d + (self.mu - self.d) / self.exponents.r

    @property
    def alpha(self) -> float:
        return self.mu / (self.exponents.p * self.mu + self.exponents.r * self.lam)

    @property
    def beta(self) -> float:
        return self.lam / (self.exponents.p * self.mu + self.exponents.r * self.lam)

    def to_problem(self, delta: float = 1.0) -> ProblemSpec:
        cone = ConeDomain.positive_orthant(self.d)
        w = HomogeneousWeight.radial_power(self.theta)
        w0 = HomogeneousWeight.radial_power(self.theta0)
        wjs = coordinate_powers(self.d, self.theta1)
        return carlson_problem(cone, self.exponents, delta, w, w0, wjs)


def carlson_constant(params: CarlsonParams, cfg: QuadratureConfig) -> RecoveryReport:
    """Sharp constant of the three-weight inequality, with a direct-form check.

    The returned report has E = constant = C (delta = 1); residual
    "closed_form" compares the general route with the direct formula
    d^beta / ((p a)^a (r b)^b) * (I B(a/chi, b/chi) / (lam + mu))^chi.
    """
    prob = params.to_problem(delta=1.0)
    rep = recovery_error_homogeneous(prob, cfg)
    e = params.exponents
    a, b = params.alpha, params.beta
    chi = inv(e.q) - a - b
    if chi <= 0:
        raise DomainError("1/q - alpha - beta must be positive")
    log_c = (b * math.log(params.d)
             - a * math.log(e.p * a) - b * math.log(e.r * b)
             + chi * (math.log(rep.I) - math.log(params.lam + params.mu)
                      + log_beta(a / chi, b / chi)))
    c_direct = math.exp(log_c)
    rep.residuals["closed_form"] = abs(rep.E - c_direct) / c_direct
    rep.constant = rep.E
    return rep


def c_inf_squared(nu: float, eta: float, d: int, n: int) -> float:
    """Square of the p = inf constant for the L2-metric recovery family."""
    return (1.0 / abs(2.0 * eta + d)) * (n * abs(2.0 * nu + d)) ** (
        (eta + d / 2.0) / (nu + d / 2.0))


def cp_constant(nu: float, eta: float, d: int, p: float, n: int) -> float:
    """The L2-metric constant C_p(nu, eta) for 2 < p <= inf."""
    if not p > 2:
        raise DomainError("requires p > 2")
    if math.isinf(p):
        return math.sqrt(c_inf_squared(nu, eta, d, n))
    e = ExponentTriple(p, 2.0, 2.0)
    g = gamma_exponent(nu, eta, d, e)
    if not (0.0 < g < 1.0):
        raise DomainError(f"gamma={g:.6g} outside (0, 1)")
    qb = q_star(g, e)
    log_c = (-(g / p) * math.log(g) - ((1.0 - g) / 2.0) * math.log((1.0 - g) / n)
             + (log_beta(qb * g / p + 1.0, qb * (1.0 - g) / 2.0)
                - math.log(2.0 * abs(nu - eta))) / qb)
    return math.exp(log_c)


def cp_hat_constant(nu: float, eta: float, d: int, p: float, n: int) -> float:
    """The sup-metric constant for 1 <= p <= inf."""
    e = ExponentTriple(p, 1.0, 2.0)
    g1 = gamma_exponent(nu, eta, d, e)
    if not (0.0 < g1 < 1.0):
        raise DomainError(f"gamma1={g1:.6g} outside (0, 1)")
    q1 = q_star(g1, e)
    log_c = (-g1 * inv(p) * math.log(g1)
             - ((1.0 - g1) / 2.0) * math.log((1.0 - g1) / n)
             + (log_beta(q1 * g1 * inv(p) + 1.0, q1 * (1.0 - g1) / 2.0)
                - math.log(2.0 * abs(nu - eta - d / 2.0))) / q1)
    return math.exp(log_c)


def e0_sup_value(nu: float, eta: float, d: int, n: int, I: float, delta: float) -> float:
    """Dedicated p = inf error for the sup-metric recovery problem."""
    a = (eta + d) / (2.0 * nu + d)
    log_e = (a * math.log(n * abs(nu + d / 2.0)) - math.log(eta + d)
             + ((2.0 * nu - eta) / (2.0 * nu + d))
             * (math.log((2.0 * nu - eta) * I)
                - math.log(TWO_PI ** d * (2.0 * nu - 2.0 * eta - d)))
             + ((2.0 * nu - 2.0 * eta - d) / (2.0 * nu + d)) * math.log(delta))
    return math.exp(log_e)


def fourier_L2_error(spec: ProblemSpec, cfg: QuadratureConfig,
                     sym_tol: float = 1e-6) -> RecoveryReport:
    """Recovery error in the L2 metric from a noisy transform, 2 < p <= inf."""
    if spec.normalization is not Normalization.FOURIER or spec.sup_target:
        raise DomainError("requires Fourier normalization with q = r = 2")
    e = spec.exponents
    if not (e.p > 2 and e.q == 2 and e.r == 2):
        raise DomainError("requires 2 < p <= inf and q = r = 2")
    plain, outer = spec.reduced()
    g = gamma_exponent(spec.nu, spec.eta, spec.d, e)
    if not (0.0 < g < 1.0):
        raise DomainError(f"gamma={g:.6g} outside (0, 1)")
    qb = q_star(g, e)
    # paper-form integral with the unscaled weights; the reduced one is a
    # known power of (2 pi) times it
    I, ijs, sym = angular_symmetry_report(spec, g, qb, cfg)
    i_scale = TWO_PI ** (spec.d * qb * (1.0 - g) / 2.0)
    rep = _closed_form_report(plain, cfg, outer, precomputed=(I, ijs, sym),
                              i_scale=i_scale, sym_tol=sym_tol)
    cp = cp_constant(spec.nu, spec.eta, spec.d, e.p, spec.n)
    e_direct = (TWO_PI ** (-spec.d * g / 2.0) * cp * I ** (1.0 / qb)
                * spec.delta ** g)
    rep.residuals["dedicated_form"] = abs(rep.E - e_direct) / e_direct
    beta_val = ((1.0 - g) / (spec.n * TWO_PI ** (spec.d * g)) * cp ** 2
                * (spec.delta * I ** (0.5 - inv(e.p))) ** (2.0 * g))
    # dual route for the threshold: the reduced-problem scale xi gives
    # beta = xi^(2(nu-eta)) / (2 pi)^d
    xi = rep.multipliers["xi"]
    beta_dual = xi ** (2.0 * (spec.nu - spec.eta)) / TWO_PI ** spec.d
    rep.residuals["threshold_dual"] = abs(beta_val - beta_dual) / beta_val
    rep.constant = cp
    rep.I = I
    rep.multipliers["beta"] = beta_val
    if math.isinf(e.p):
        rep.multipliers["lambda"] = math.sqrt(beta_val)
    if 2.0 * spec.nu + spec.d < 0:
        rep.flags.append("negative-degree-branch-unverified")
    return rep


def fourier_Linf_error(spec: ProblemSpec, cfg: QuadratureConfig,
                       sym_tol: float = 1e-6) -> RecoveryReport:
    """Recovery error in the sup metric from a noisy transform, 1 <= p <= inf."""
    if spec.normalization is not Normalization.FOURIER or not spec.sup_target:
        raise DomainError("requires Fourier normalization with a sup-norm target")
    plain, _ = spec.reduced()
    e = plain.exponents  # (p, 1, 2)
    g1 = gamma_exponent(spec.nu, spec.eta, spec.d, e)
    if not (0.0 < g1 < 1.0):
        raise DomainError(f"gamma1={g1:.6g} outside (0, 1)")
    q1 = q_star(g1, e)
    I, ijs, sym = angular_symmetry_report(spec, g1, q1, cfg)
    i_scale = TWO_PI ** (-spec.d * q1 * (1.0 + g1) / 2.0)
    rep = _closed_form_report(plain, cfg, 1.0, precomputed=(I, ijs, sym),
                              i_scale=i_scale, sym_tol=sym_tol)
    chat = cp_hat_constant(spec.nu, spec.eta, spec.d, e.p, spec.n)
    e_direct = (TWO_PI ** (-spec.d * (1.0 + g1) / 2.0) * chat * I ** (1.0 / q1)
                * spec.delta ** g1)
    rep.residuals["dedicated_form"] = abs(rep.E - e_direct) / e_direct
    log_xi1 = (math.log(spec.delta) - (q1 * inv(e.p) / 2.0) * math.log(g1)
               + q1 * (0.5 - inv(e.p))
               * (math.log(1.0 - g1) + math.log(chat) + math.log(I) / q1
                  - math.log(spec.n) - (spec.d * (1.0 + g1) / 2.0) * math.log(TWO_PI)))
    xi1 = math.exp(log_xi1)
    # the theorem scale must agree with the reduced problem's delta*I1^(-1/p)*I2^(1/2)
    i1, i2 = rep.multipliers["I1"], rep.multipliers["I2"]
    xi_hat = spec.delta * i1 ** (-inv(e.p)) * math.sqrt(i2)
    rep.residuals["scale_dual"] = abs(xi1 - xi_hat) / xi1
    rep.constant = chat
    rep.I = I
    rep.multipliers["xi1"] = xi1
    if math.isinf(e.p):
        e0 = e0_sup_value(spec.nu, spec.eta, spec.d, spec.n, I, spec.delta)
        rep.residuals["sup_dedicated"] = abs(rep.E - e0) / e0
        # support threshold of the p = inf two-piece worst case
        rep.multipliers["lambda"] = xi1 ** ((2.0 * spec.nu - spec.eta)
                                            / (spec.nu + spec.d / 2.0))
    if spec.nu + spec.d * (0.5 - inv(e.p)) < 0:
        rep.flags.append("negative-degree-branch-unverified")
    return rep


@dataclass(frozen=True)
class LaplacianParams:
    """Recovery of a generalized Laplace power from a noisy transform.

    The operator has symbol (|t_1|^theta + ... + |t_d|^theta)^(eta/theta)
    and the data constraints are the order-nu coordinate derivatives.
    """

    d: int
    theta: float
    eta: float
    nu: float
    delta: float

    def validate(self) -> None:
        if not (self.nu > self.eta > 0.0):
            raise HypothesisError("requires nu > eta > 0")
        if self.nu < 1.0:
            raise HypothesisError("requires nu >= 1")
        if not (0.0 < self.theta <= 2.0 * self.nu):
            raise HypothesisError("requires 0 < theta <= 2 nu")
        if self.delta <= 0:
            raise DomainError("delta must be positive")

    @property
    def lambda1(self) -> float:
        return (self.d ** (2.0 * self.eta / self.theta) / TWO_PI ** self.d
                * (1.0 - self.eta / self.nu)
                * (TWO_PI ** self.d / self.delta ** 2) ** (self.eta / self.nu))

    @property
    def lambda2(self) -> float:
        return (self.eta / self.nu * self.d ** (2.0 * self.eta / self.theta - 1.0)
                * (TWO_PI ** self.d / self.delta ** 2) ** (self.eta / self.nu - 1.0))

    @property
    def error(self) -> float:
        return (self.d ** (self.eta / self.theta)
                * (self.delta / TWO_PI ** (self.d / 2.0)) ** (1.0 - self.eta / self.nu))

    @property
    def balance_radius(self) -> float:
        """Radius where the canonical factor's bound is met with equality."""
        return (self.d ** (1.0 / self.theta)
                * (TWO_PI ** self.d / self.delta ** 2) ** (1.0 / (2.0 * self.nu)))

    def to_problem(self) -> ProblemSpec:
        psi = HomogeneousWeight.theta_norm_power(self.theta, self.eta)
        phis = tuple(coordinate_powers(self.d, self.nu))
        return ProblemSpec(ConeDomain.full_space(self.d),
                           ExponentTriple(2.0, 2.0, 2.0), self.delta, psi, phis,
                           Normalization.FOURIER)


def laplacian_error(params: LaplacianParams) -> RecoveryReport:
    """Closed-form error and multipliers for the Laplace-power recovery."""
    params.validate()
    E = params.error
    l1, l2 = params.lambda1, params.lambda2
    identity = abs(l2 * params.d + l1 * params.delta ** 2 - E ** 2) / E ** 2
    return RecoveryReport(
        E=E,
        gamma=1.0 - params.eta / params.nu,
        q_star=2.0,
        I=1.0,
        constant=params.d ** (params.eta / params.theta),
        multipliers={"lambda1": l1, "lambda2": l2},
        residuals={"multiplier_identity": identity},
        flags=["closed-form-no-angular-integral"],
    )
