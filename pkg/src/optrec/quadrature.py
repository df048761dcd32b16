"""Integration over angular domains with the spherical Jacobian, and radial
integrals over (0, inf) for cross-checks."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import roots_legendre

from .errors import ConvergenceError, DimensionError, DomainError
from .model import ConeDomain, ProblemSpec, directions_of, effective_triple


@dataclass(frozen=True)
class QuadratureConfig:
    """Controls for the adaptive tensor-product Gauss-Legendre scheme."""

    base_order: int = 16
    max_refinements: int = 400
    rel_tol: float = 1e-10
    panel_split: int = 2

    def __post_init__(self):
        if self.base_order < 4:
            raise DomainError("base_order must be >= 4")
        if self.rel_tol <= 0:
            raise DomainError("rel_tol must be positive")
        if self.panel_split < 2:
            raise DomainError("panel_split must be >= 2")


class QuadResult(NamedTuple):
    value: float
    error_estimate: float


_TINY = 1e-300


@lru_cache(maxsize=64)
def _gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(order)
    return x, w


def _tensor_nodes(box: tuple[tuple[float, float], ...], order: int):
    """Tensor Gauss-Legendre nodes and weights on a box, flattened."""
    axes_x, axes_w = [], []
    for lo, hi in box:
        x, w = _gl_rule(order)
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        axes_x.append(mid + half * x)
        axes_w.append(half * w)
    grids = np.meshgrid(*axes_x, indexing="ij")
    nodes = np.column_stack([g.ravel() for g in grids])
    wgrid = axes_w[0]
    for w in axes_w[1:]:
        wgrid = np.multiply.outer(wgrid, w)
    return nodes, wgrid.ravel()


def jacobian_J(omega: np.ndarray, d: int) -> np.ndarray:
    """Spherical Jacobian sin^(d-2) w_1 * sin^(d-3) w_2 * ... * sin w_{d-2}.

    Empty product (equal to 1) for d <= 2.
    """
    omega = np.atleast_2d(omega)
    if omega.shape[1] != d - 1:
        raise DimensionError(f"expected {d - 1} angles, got {omega.shape[1]}")
    out = np.ones(omega.shape[0])
    for i in range(d - 2):
        out = out * np.sin(omega[:, i]) ** (d - 2 - i)
    return out


def _panel_eval(f, box, d, order) -> tuple[float, float]:
    """Panel value at order+6 together with an embedded error estimate."""
    omega_lo, w_lo = _tensor_nodes(box, order)
    omega_hi, w_hi = _tensor_nodes(box, order + 6)
    v_lo = float(np.sum(w_lo * jacobian_J(omega_lo, d) * f(directions_of(omega_lo, d))))
    v_hi = float(np.sum(w_hi * jacobian_J(omega_hi, d) * f(directions_of(omega_hi, d))))
    return v_hi, abs(v_hi - v_lo)


def sphere_integral(f: Callable[[np.ndarray], np.ndarray], cone: ConeDomain,
                    cfg: QuadratureConfig) -> QuadResult:
    """Integral of f(direction) * J(omega) over the cone's angular domain.

    f maps an (m, d) array of unit directions to (m,) values.  For d = 1
    this is the sum of f over the cone's directions (empty angular product).
    """
    d = cone.d
    if d == 1:
        dirs = cone.unit_directions_1d()
        return QuadResult(float(math.fsum(f(dirs).tolist())), 0.0)

    box0 = cone.angular_domain
    heap: list = []
    panels: dict[int, tuple] = {}
    next_id = 0

    def push(box):
        nonlocal next_id
        val, err = _panel_eval(f, box, d, cfg.base_order)
        panels[next_id] = (box, val, err)
        heapq.heappush(heap, (-err, next_id))
        next_id += 1

    push(box0)
    splits = 0
    while True:
        total = math.fsum(v for _, v, _ in panels.values())
        total_err = math.fsum(e for _, _, e in panels.values())
        if total_err <= cfg.rel_tol * max(abs(total), _TINY):
            return QuadResult(total, total_err)
        if splits >= cfg.max_refinements:
            raise ConvergenceError(
                f"angular refinement budget exhausted (err={total_err:.3g}, value={total:.6g})"
            )
        _, pid = heapq.heappop(heap)
        box, _, _ = panels.pop(pid)
        # split the longest axis
        lengths = [hi - lo for lo, hi in box]
        axis = int(np.argmax(lengths))
        lo, hi = box[axis]
        cuts = np.linspace(lo, hi, cfg.panel_split + 1)
        for i in range(cfg.panel_split):
            child = tuple(
                (cuts[i], cuts[i + 1]) if k == axis else b for k, b in enumerate(box)
            )
            push(child)
        splits += 1


def radial_integral(g: Callable[[np.ndarray], np.ndarray], cfg: QuadratureConfig,
                    scale: float = 1.0) -> QuadResult:
    """Integral of g over (0, inf) via rho = scale * u / (1 - u).

    Adaptive panels on (0, 1); ConvergenceError when the budget runs out,
    which is how non-integrable inputs surface.
    """
    if scale <= 0:
        raise DomainError("scale must be positive")

    def h(u: np.ndarray) -> np.ndarray:
        rho = scale * u / (1.0 - u)
        return g(rho) * scale / (1.0 - u) ** 2

    heap: list = []
    panels: dict[int, tuple] = {}
    next_id = 0

    def panel_val(a, b):
        x, w = _gl_rule(cfg.base_order)
        x2, w2 = _gl_rule(cfg.base_order + 6)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        v1 = float(np.sum(half * w * h(mid + half * x)))
        v2 = float(np.sum(half * w2 * h(mid + half * x2)))
        return v2, abs(v2 - v1)

    def push(a, b):
        nonlocal next_id
        val, err = panel_val(a, b)
        panels[next_id] = (a, b, val, err)
        heapq.heappush(heap, (-err, next_id))
        next_id += 1

    push(0.0, 0.5)
    push(0.5, 1.0)
    splits = 0
    while True:
        total = math.fsum(v for _, _, v, _ in panels.values())
        total_err = math.fsum(e for _, _, _, e in panels.values())
        if not math.isfinite(total):
            raise ConvergenceError("radial integrand is not integrable")
        if total_err <= cfg.rel_tol * max(abs(total), _TINY):
            return QuadResult(total, total_err)
        if splits >= cfg.max_refinements:
            raise ConvergenceError(
                f"radial refinement budget exhausted (err={total_err:.3g}, value={total:.6g})"
            )
        _, pid = heapq.heappop(heap)
        a, b, _, _ = panels.pop(pid)
        cuts = np.linspace(a, b, cfg.panel_split + 1)
        for i in range(cfg.panel_split):
            push(cuts[i], cuts[i + 1])
        splits += 1


def cone_integral(f_polar: Callable[[np.ndarray, np.ndarray], np.ndarray],
                  cone: ConeDomain, cfg: QuadratureConfig,
                  radial_scale_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  max_doublings: int = 7) -> QuadResult:
    """Integral over the cone of f(t) dt in polar form.

    f_polar(dirs (m, d), rho (m, R)) returns the integrand values (m, R)
    without the rho^(d-1) J(omega) measure factors, which are supplied here.
    The radial rule is a composite Gauss-Legendre ladder on the mapped
    coordinate u with rho = s(dir) * u / (1 - u); a per-direction scale
    aligns panel boundaries with profile kinks or support radii at u = 1/2.
    """
    d = cone.d

    def radial_of_dirs(dirs: np.ndarray) -> np.ndarray:
        m = dirs.shape[0]
        scales = (np.asarray(radial_scale_fn(dirs), dtype=float)
                  if radial_scale_fn is not None else np.ones(m))
        scales = np.where(np.isfinite(scales) & (scales > 0), scales, 1.0)
        prev = None
        panels = 8
        for _ in range(max_doublings):
            u, wu = _composite_unit_rule(panels, cfg.base_order)
            rho = scales[:, None] * u[None, :] / (1.0 - u[None, :])
            jac = scales[:, None] / (1.0 - u[None, :]) ** 2
            vals = f_polar(dirs, rho) * rho ** (d - 1) * jac * wu[None, :]
            cur = vals.sum(axis=1)
            if prev is not None:
                diff = np.abs(cur - prev)
                ok = diff <= 0.25 * cfg.rel_tol * (np.abs(cur) + _TINY)
                if np.all(ok):
                    return cur
            prev = cur
            panels *= 2
        return prev

    return sphere_integral(radial_of_dirs, cone, cfg)


@lru_cache(maxsize=32)
def _composite_unit_rule(panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with uniform panels on (0, 1)."""
    x, w = _gl_rule(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes, weights = [], []
    for i in range(panels):
        mid, half = 0.5 * (edges[i] + edges[i + 1]), 0.5 * (edges[i + 1] - edges[i])
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _angular_integrand(spec: ProblemSpec, gamma: float, q_star: float,
                       j: Optional[int]) -> Callable[[np.ndarray], np.ndarray]:
    e = effective_triple(spec)
    r = e.r
    expo = q_star * (1.0 - gamma) / r

    def f(dirs: np.ndarray) -> np.ndarray:
        psi = spec.psi.profile(dirs)
        s_r = np.zeros(dirs.shape[0])
        for w in spec.phis:
            s_r = s_r + w.profile(dirs) ** r
        if j is None:
            return psi ** q_star / s_r ** expo
        return psi ** q_star * spec.phis[j].profile(dirs) ** r / s_r ** (expo + 1.0)

    return f


def angular_I(spec: ProblemSpec, gamma: float, q_star: float,
              cfg: QuadratureConfig) -> float:
    """The angular integral of psi^q* / s_r^(q*(1-gamma)/r) against J."""
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"gamma={gamma} outside (0, 1)")
    return sphere_integral(_angular_integrand(spec, gamma, q_star, None),
                           spec.cone, cfg).value


def angular_Ij(spec: ProblemSpec, j: int, gamma: float, q_star: float,
               cfg: QuadratureConfig) -> float:
    """The j-th constraint-weighted angular integral (j is 0-based)."""
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"gamma={gamma} outside (0, 1)")
    if not 0 <= j < spec.n:
        raise DomainError(f"constraint index {j} out of range")
    return sphere_integral(_angular_integrand(spec, gamma, q_star, j),
                           spec.cone, cfg).value


def angular_symmetry_report(spec: ProblemSpec, gamma: float, q_star: float,
                            cfg: QuadratureConfig) -> tuple[float, list[float], float]:
    """I, the list of I'_j, and max_j |I'_j - I/n| / (I/n)."""
    I = angular_I(spec, gamma, q_star, cfg)
    ijs = [angular_Ij(spec, j, gamma, q_star, cfg) for j in range(spec.n)]
    mean = I / spec.n
    sym = max(abs(v - mean) / abs(mean) for v in ijs)
    return I, ijs, sym
