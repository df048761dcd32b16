"""Domain types: exponent regimes, cones, homogeneous weights, problem specs."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, DomainError, RegimeError

INF = math.inf


def inv(x: float) -> float:
    """1/x with the convention 1/inf = 0."""
    return 0.0 if math.isinf(x) else 1.0 / x


class Regime(enum.Enum):
    """Exponent regime: which of q < p, q = r, q = p holds."""

    P = "P"    # 1 <= q < p and q < r
    P1 = "P1"  # 1 <= q = r < p
    P2 = "P2"  # 1 <= q = p < r

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class ExponentTriple:
    """Norm exponents (p, q, r), each in [1, inf]; inf is a valid value."""

    p: float
    q: float
    r: float

    def __post_init__(self):
        for name in ("p", "q", "r"):
            v = getattr(self, name)
            if not (1.0 <= v <= INF):
                raise DomainError(f"exponent {name}={v} outside [1, inf]")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p, self.q, self.r)


def classify_regime(e: ExponentTriple) -> Regime:
    """Classify (p, q, r) into one of the three supported regimes.

    Raises RegimeError when the triple lies in none of them (q > min(p, r),
    or p = q = r, or q among the larger exponents).
    """
    p, q, r = e.p, e.q, e.r
    if q < p and q < r:
        return Regime.P
    if q == r and q < p:
        return Regime.P1
    if q == p and q < r:
        return Regime.P2
    raise RegimeError(f"(p={p}, q={q}, r={r}) belongs to no regime")


class ConeKind(enum.Enum):
    FULL_SPACE = "full_space"
    POSITIVE_ORTHANT = "positive_orthant"
    ANGULAR_BOX = "angular_box"


@dataclass(frozen=True)
class ConeDomain:
    """A cone in R^d described by its angular domain.

    The angular domain is a box in the spherical angles (omega_1, ...,
    omega_{d-1}); for d = 1 it is the empty product and the cone is either
    a single ray (orthant) or the two half-lines (full space).
    """

    d: int
    kind: ConeKind
    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("dimension must be >= 1")
        if self.kind is ConeKind.ANGULAR_BOX:
            if len(self.intervals) != self.d - 1:
                raise DimensionError(
                    f"angular box needs {self.d - 1} intervals, got {len(self.intervals)}"
                )
            for lo, hi in self.intervals:
                if not lo < hi:
                    raise DomainError("angular interval must have lo < hi")

    @staticmethod
    def full_space(d: int) -> "ConeDomain":
        return ConeDomain(d, ConeKind.FULL_SPACE)

    @staticmethod
    def positive_orthant(d: int) -> "ConeDomain":
        return ConeDomain(d, ConeKind.POSITIVE_ORTHANT)

    @staticmethod
    def angular_box(d: int, intervals: Sequence[Sequence[float]]) -> "ConeDomain":
        return ConeDomain(
            d, ConeKind.ANGULAR_BOX, tuple((float(a), float(b)) for a, b in intervals)
        )

    @property
    def angular_domain(self) -> tuple[tuple[float, float], ...]:
        """The box of spherical angles covered by the cone."""
        if self.kind is ConeKind.ANGULAR_BOX:
            return self.intervals
        if self.d == 1:
            return ()
        if self.kind is ConeKind.POSITIVE_ORTHANT:
            return tuple((0.0, math.pi / 2) for _ in range(self.d - 1))
        # full space: [0, pi]^{d-2} x [0, 2*pi]
        return tuple((0.0, math.pi) for _ in range(self.d - 2)) + ((0.0, 2 * math.pi),)

    def unit_directions_1d(self) -> np.ndarray:
        """Directions for d = 1: one ray or both half-lines, shape (m, 1)."""
        if self.d != 1:
            raise DimensionError("unit_directions_1d requires d = 1")
        if self.kind is ConeKind.FULL_SPACE:
            return np.array([[1.0], [-1.0]])
        return np.array([[1.0]])

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership mask for an (n, d) array of points."""
        points = np.atleast_2d(points)
        if self.kind is ConeKind.FULL_SPACE:
            return np.ones(points.shape[0], dtype=bool)
        if self.kind is ConeKind.POSITIVE_ORTHANT:
            return np.all(points >= 0.0, axis=1)
        omega = angles_of(points)
        mask = np.ones(points.shape[0], dtype=bool)
        for i, (lo, hi) in enumerate(self.intervals):
            mask &= (omega[:, i] >= lo - 1e-12) & (omega[:, i] <= hi + 1e-12)
        return mask


def directions_of(omega: np.ndarray, d: int) -> np.ndarray:
    """Spherical angles (m, d-1) -> unit vectors (m, d).

    Uses the chain t_1 = cos w_1, t_2 = sin w_1 cos w_2, ...,
    t_d = sin w_1 ... sin w_{d-1}.
    """
    omega = np.atleast_2d(omega)
    if omega.shape[1] != d - 1:
        raise DimensionError(f"expected {d - 1} angles, got {omega.shape[1]}")
    m = omega.shape[0]
    out = np.empty((m, d))
    sin_run = np.ones(m)
    for i in range(d - 1):
        out[:, i] = sin_run * np.cos(omega[:, i])
        sin_run = sin_run * np.sin(omega[:, i])
    out[:, d - 1] = sin_run
    return out


def angles_of(points: np.ndarray) -> np.ndarray:
    """Unit directions of points (n, d) -> spherical angles (n, d-1)."""
    points = np.atleast_2d(points)
    d = points.shape[1]
    rho = np.linalg.norm(points, axis=1)
    u = points / np.where(rho > 0, rho, 1.0)[:, None]
    omega = np.empty((points.shape[0], d - 1))
    sin_run = np.ones(points.shape[0])
    for i in range(d - 1):
        c = np.clip(np.divide(u[:, i], sin_run, out=np.zeros_like(sin_run), where=sin_run > 0), -1, 1)
        if i < d - 2:
            omega[:, i] = np.arccos(c)
        else:
            omega[:, i] = np.arctan2(u[:, d - 1], u[:, i] if d >= 2 else 1.0)
            omega[:, i] = np.where(omega[:, i] < 0, omega[:, i] + 2 * math.pi, omega[:, i])
        sin_run = sin_run * np.sin(omega[:, i])
    return omega


class WeightKind(enum.Enum):
    RADIAL_POWER = "radial_power"
    COORDINATE_POWER = "coordinate_power"
    THETA_NORM_POWER = "theta_norm_power"
    CUSTOM = "custom"


@dataclass(frozen=True)
class HomogeneousWeight:
    """A weight w with |w(s t)| = s^kappa |w(t)|, given by its angular profile.

    The profile maps unit directions (m, d) to nonnegative values (m,).
    Built-in kinds evaluate w(t) directly from the defining formula, so the
    homogeneity check below exercises real arithmetic rather than the polar
    factorization.
    """

    degree: float
    kind: WeightKind
    params: tuple = ()
    custom_profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    permutation_symmetric: bool = False

    @staticmethod
    def radial_power(theta: float) -> "HomogeneousWeight":
        """w(t) = |t|^theta; profile is identically 1."""
        return HomogeneousWeight(theta, WeightKind.RADIAL_POWER, (theta,), None, True)

    @staticmethod
    def coordinate_power(axis: int, theta1: float) -> "HomogeneousWeight":
        """w(t) = |t_axis|^theta1 (axis is 1-based)."""
        if axis < 1:
            raise DomainError("axis is 1-based")
        return HomogeneousWeight(theta1, WeightKind.COORDINATE_POWER, (axis, theta1))

    @staticmethod
    def theta_norm_power(theta: float, eta: float) -> "HomogeneousWeight":
        """w(t) = (|t_1|^theta + ... + |t_d|^theta)^(eta/theta), degree eta."""
        if theta <= 0:
            raise DomainError("inner exponent must be positive")
        return HomogeneousWeight(eta, WeightKind.THETA_NORM_POWER, (theta, eta), None, True)

    @staticmethod
    def custom(profile: Callable[[np.ndarray], np.ndarray], degree: float,
               permutation_symmetric: bool = False) -> "HomogeneousWeight":
        return HomogeneousWeight(degree, WeightKind.CUSTOM, (), profile, permutation_symmetric)

    def profile(self, directions: np.ndarray) -> np.ndarray:
        """Angular profile evaluated at unit directions (m, d)."""
        directions = np.atleast_2d(directions)
        if self.kind is WeightKind.RADIAL_POWER:
            return np.ones(directions.shape[0])
        if self.kind is WeightKind.COORDINATE_POWER:
            axis, theta1 = self.params
            if axis > directions.shape[1]:
                raise DimensionError(f"axis {axis} exceeds dimension {directions.shape[1]}")
            return np.abs(directions[:, axis - 1]) ** theta1
        if self.kind is WeightKind.THETA_NORM_POWER:
            theta, eta = self.params
            return np.sum(np.abs(directions) ** theta, axis=1) ** (eta / theta)
        return np.asarray(self.custom_profile(directions), dtype=float)

    def value(self, points: np.ndarray) -> np.ndarray:
        """w evaluated at arbitrary points (n, d)."""
        points = np.atleast_2d(points)
        if self.kind is WeightKind.RADIAL_POWER:
            (theta,) = self.params
            return np.linalg.norm(points, axis=1) ** theta
        if self.kind is WeightKind.COORDINATE_POWER:
            axis, theta1 = self.params
            return np.abs(points[:, axis - 1]) ** theta1
        if self.kind is WeightKind.THETA_NORM_POWER:
            theta, eta = self.params
            return np.sum(np.abs(points) ** theta, axis=1) ** (eta / theta)
        rho = np.linalg.norm(points, axis=1)
        safe = np.where(rho > 0, rho, 1.0)
        vals = safe ** self.degree * self.profile(points / safe[:, None])
        return np.where(rho > 0, vals, 0.0 if self.degree > 0 else vals)

    def scaled(self, factor: float) -> "HomogeneousWeight":
        """The weight factor * w (same degree)."""
        base = self
        return HomogeneousWeight.custom(
            lambda u: factor * base.profile(u), self.degree, self.permutation_symmetric
        )


def coordinate_powers(d: int, theta1: float) -> list[HomogeneousWeight]:
    """The permutation-symmetric family |t_1|^theta1, ..., |t_d|^theta1."""
    ws = [HomogeneousWeight.coordinate_power(j, theta1) for j in range(1, d + 1)]
    return [HomogeneousWeight(w.degree, w.kind, w.params, None, True) for w in ws]


def homogeneity_check(w: HomogeneousWeight, d: int, samples: int, rng_seed: int,
                      cone: Optional[ConeDomain] = None) -> float:
    """Max relative error of |w(s t)| = s^kappa |w(t)| over random (t, s)."""
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    cone = cone or ConeDomain.full_space(d)
    t = rng.standard_normal((samples, d))
    if cone.kind is ConeKind.POSITIVE_ORTHANT:
        t = np.abs(t)
    s = rng.uniform(0.25, 4.0, samples)
    base = w.value(t)
    scaled = w.value(t * s[:, None])
    ref = s ** w.degree * base
    ok = ref != 0
    rel = np.abs(scaled[ok] - ref[ok]) / np.abs(ref[ok])
    return float(rel.max()) if rel.size else 0.0


class Normalization(enum.Enum):
    PLAIN = "plain"
    FOURIER = "fourier"


@dataclass(frozen=True)
class ProblemSpec:
    """A recovery/inequality problem on a cone.

    The objective weight psi has degree eta, the n constraint weights share
    degree nu, and delta is the noise level in the L_p metric.  With Fourier
    normalization the (2*pi)^(-d/2) Plancherel factors are inserted; a
    sup-norm target (q = inf) is reduced internally to the q = 1 problem.
    """

    cone: ConeDomain
    exponents: ExponentTriple
    delta: float
    psi: HomogeneousWeight
    phis: tuple[HomogeneousWeight, ...]
    normalization: Normalization = Normalization.PLAIN

    def __post_init__(self):
        if self.delta <= 0:
            raise DomainError("delta must be positive")
        if len(self.phis) < 1:
            raise DomainError("at least one constraint weight is required")

    @property
    def d(self) -> int:
        return self.cone.d

    @property
    def n(self) -> int:
        return len(self.phis)

    @property
    def eta(self) -> float:
        return self.psi.degree

    @property
    def nu(self) -> float:
        return self.phis[0].degree

    @property
    def sup_target(self) -> bool:
        return math.isinf(self.exponents.q)

    def reduced(self) -> tuple["ProblemSpec", float]:
        """Plain-measure equivalent spec and the outer norm factor.

        Fourier mode with q = 2 keeps psi and rescales each phi_j by
        (2*pi)^(-d/2), with an outer (2*pi)^(-d/2) on the error.  Fourier
        mode with a sup target folds (2*pi)^(-d) into psi, rescales phi_j
        the same way, and targets q = 1 with no outer factor.
        """
        if self.normalization is Normalization.PLAIN:
            if self.sup_target:
                raise DomainError("sup-norm target requires Fourier normalization")
            return self, 1.0
        d = self.d
        phi_scale = (2 * math.pi) ** (-d / 2)
        phis = tuple(w.scaled(phi_scale) for w in self.phis)
        if self.sup_target:
            psi = self.psi.scaled((2 * math.pi) ** (-d))
            exps = ExponentTriple(self.exponents.p, 1.0, self.exponents.r)
            plain = ProblemSpec(self.cone, exps, self.delta, psi, phis, Normalization.PLAIN)
            return plain, 1.0
        if self.exponents.q != 2 or self.exponents.r != 2:
            raise DomainError("Fourier normalization supports q = r = 2 or a sup target")
        plain = ProblemSpec(self.cone, self.exponents, self.delta, self.psi, phis,
                            Normalization.PLAIN)
        return plain, (2 * math.pi) ** (-d / 2)

    def with_delta(self, delta: float) -> "ProblemSpec":
        return ProblemSpec(self.cone, self.exponents, delta, self.psi, self.phis,
                           self.normalization)


def carlson_problem(cone: ConeDomain, exponents: ExponentTriple, delta: float,
                    w: HomogeneousWeight, w0: HomogeneousWeight,
                    wjs: Sequence[HomogeneousWeight]) -> ProblemSpec:
    """Three-weight inequality problem as a recovery spec with ratio weights.

    psi = w / w0 (degree theta - theta0) and phi_j = w_j / w0 (degrees
    theta1 - theta0); the sharp constant of the three-weight inequality is
    then the recovery constant of this spec at delta = 1.
    """
    eta = w.degree - w0.degree
    nu = wjs[0].degree - w0.degree

    def ratio(a: HomogeneousWeight, b: HomogeneousWeight):
        return lambda u: a.profile(u) / b.profile(u)

    psi = HomogeneousWeight.custom(ratio(w, w0), eta,
                                   w.permutation_symmetric and w0.permutation_symmetric)
    phis = tuple(
        HomogeneousWeight.custom(ratio(wj, w0), nu, wj.permutation_symmetric)
        for wj in wjs
    )
    return ProblemSpec(cone, exponents, delta, psi, phis, Normalization.PLAIN)


@dataclass
class ValidationReport:
    valid: bool
    failures: list[str] = field(default_factory=list)


def validate_spec(s: ProblemSpec, angular_samples: int = 512, rng_seed: int = 0) -> ValidationReport:
    """Check spec invariants by dense angular sampling; never raises."""
    failures: list[str] = []
    if s.delta <= 0:
        failures.append("delta not positive")
    degrees = {w.degree for w in s.phis}
    if len(degrees) > 1:
        failures.append(f"mixed constraint degrees {sorted(degrees)}")
    rng = np.random.default_rng(rng_seed)
    if s.d == 1:
        dirs = s.cone.unit_directions_1d()
    else:
        box = s.cone.angular_domain
        omega = np.column_stack([rng.uniform(lo, hi, angular_samples) for lo, hi in box])
        dirs = directions_of(omega, s.d)
    psi_vals = s.psi.profile(dirs)
    if not np.any(psi_vals > 0):
        failures.append("psi vanishes on the angular domain")
    phi_sum = np.zeros(dirs.shape[0])
    for w in s.phis:
        phi_sum += w.profile(dirs)
    if not np.all(phi_sum > 0):
        frac = float(np.mean(phi_sum <= 0))
        # isolated zeros (coordinate hyperplanes) are measure-zero and fine
        if frac > 0.01:
            failures.append("constraint weights vanish on a positive-measure set")
    try:
        from .constants import gamma_exponent
        g = gamma_exponent(s.nu, s.eta, s.d, effective_triple(s))
        if not (0.0 < g < 1.0):
            failures.append(f"derived exponent gamma={g:.6g} outside (0, 1)")
    except Exception as exc:  # degenerate denominator etc.
        failures.append(f"gamma undefined: {exc}")
    return ValidationReport(valid=not failures, failures=failures)


def effective_triple(s: ProblemSpec) -> ExponentTriple:
    """The exponent triple after the sup-target reduction, if any."""
    if s.sup_target:
        return ExponentTriple(s.exponents.p, 1.0, s.exponents.r)
    return s.exponents


@dataclass
class RecoveryReport:
    """Computed error and every constant that enters it."""

    E: float
    gamma: float
    q_star: float
    I: float
    constant: float
    multipliers: dict[str, float] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "E": self.E,
            "gamma": self.gamma,
            "q_star": self.q_star,
            "I": self.I,
            "constant": self.constant,
            "multipliers": dict(self.multipliers),
            "residuals": dict(self.residuals),
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class DiscreteInstance:
    """Finite atom set for brute-force and discrete multiplier runs.

    Atoms outside t0_mask carry no noise-constraint term; closed-form
    comparisons are only meaningful when the mask is all-true.
    """

    points: np.ndarray          # (m, d) atom locations (informational)
    masses: np.ndarray          # (m,) positive masses
    psi_vals: np.ndarray        # (m,)
    phi_vals: np.ndarray        # (n, m)
    exponents: ExponentTriple
    delta: float
    t0_mask: Optional[np.ndarray] = None   # (m,) bool; None means all True

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)))
        object.__setattr__(self, "masses", np.asarray(self.masses, dtype=float))
        object.__setattr__(self, "psi_vals", np.asarray(self.psi_vals, dtype=float))
        object.__setattr__(self, "phi_vals", np.atleast_2d(np.asarray(self.phi_vals, dtype=float)))
        if self.t0_mask is not None:
            object.__setattr__(self, "t0_mask", np.asarray(self.t0_mask, dtype=bool))
        if self.masses.size < 1:
            raise DomainError("at least one atom required")
        if np.any(self.masses <= 0):
            raise DomainError("masses must be positive")
        if not np.any(self.psi_vals != 0):
            raise DomainError("psi vanishes at every atom")
        if self.delta <= 0:
            raise DomainError("delta must be positive")

    @property
    def m(self) -> int:
        return self.masses.size

    @property
    def n(self) -> int:
        return self.phi_vals.shape[0]

    @property
    def mask(self) -> np.ndarray:
        if self.t0_mask is None:
            return np.ones(self.m, dtype=bool)
        return self.t0_mask
