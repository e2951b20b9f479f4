"""Weighted norms, the energy functional and boundary diagnostics for density fields.

All space integrals use the midpoint rule on the field's cells and all time
integrals the trapezoid rule on its output times.  The weighted bracket adds
Dirac masses at ``u = 0`` and ``u = 1`` with weights ``P_m^gamma(trace)/kappa``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .pde import SpaceTimeField, trapezoid
from .testfunctions import GridFunction, TestFunction

QUAD_TOL = 1e-8


@dataclass(frozen=True)
class EnergyParams:
    c: float
    kappa: float
    m: int
    alpha: float
    beta: float
    M0: float | None = None

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValidationError(f"c={self.c!r} must be a positive finite number")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValidationError(f"kappa={self.kappa!r} must be a positive finite number")
        if int(self.m) != self.m or self.m < 1:
            raise ValidationError(f"m={self.m!r} must be a positive integer")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValidationError(f"{name}={v!r} is outside the open interval (0, 1)")

    @staticmethod
    def default_c(m: int) -> float:
        return float(m + m * m + 1)

    @classmethod
    def for_field(cls, field: SpaceTimeField, c: float | None = None, kappa: float | None = None,
                  M0: float | None = None) -> "EnergyParams":
        """Parameters matching ``field`` (kappa from its boundary kind unless given)."""
        kappa = field.kappa if kappa is None else kappa
        if not kappa:
            raise ValidationError("field has no kappa; pass one explicitly")
        c = cls.default_c(field.m) if c is None else c
        return cls(float(c), float(kappa), int(field.m), float(field.alpha), float(field.beta), M0)


@dataclass(frozen=True)
class EnergyReport:
    dual_value: float
    sup_value: float
    left_bc_residual: float
    right_bc_residual: float
    holder_modulus: float
    dictionary_size: int

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# helpers

def p_poly_array(gamma: float, rho, m: int) -> np.ndarray:
    """Vectorized ``P_m^gamma(rho) = sum_{i<m} gamma^(m-1-i) rho^i``."""
    rho = np.asarray(rho, dtype=float)
    return sum(gamma ** (m - 1 - i) * rho**i for i in range(m))


def discrete_derivative(values: np.ndarray, du: float) -> GridFunction:
    """Derivative of cell data: centered at cells, second-order one-sided at ``u = 0, 1``.

    ``values`` has shape ``(K, N)``.  The boundary stencil is the derivative at
    the face of the parabola through the three nearest cell centers, exact for
    quadratics.
    """
    f = np.asarray(values, dtype=float)
    if f.ndim != 2 or f.shape[1] < 3:
        raise ValidationError("need a (K, N) array with N >= 3")
    inner = np.gradient(f, du, axis=1, edge_order=2)
    left = (-2.0 * f[:, 0] + 3.0 * f[:, 1] - f[:, 2]) / du
    right = (2.0 * f[:, -1] - 3.0 * f[:, -2] + f[:, -3]) / du
    return GridFunction(values=inner, left=left, right=right)


def power_gradient(xi: SpaceTimeField) -> GridFunction:
    """Discrete ``d_u (xi^m)``; its own discrete derivative is attached as ``du``."""
    d = discrete_derivative(xi.values**xi.m, xi.du)
    d.du = np.gradient(d.values, xi.du, axis=1, edge_order=2)
    return d


def _as_grid(H, xi: SpaceTimeField) -> GridFunction:
    if isinstance(H, TestFunction):
        return H.on_grid(xi.times, xi.centers)
    if isinstance(H, SpaceTimeField):
        if not H.same_grid(xi):
            raise ValidationError("H and xi live on different grids")
        d = discrete_derivative(H.values, H.du)
        return GridFunction(H.values, H.left, H.right, d.values)
    if isinstance(H, GridFunction):
        if H.values.shape != xi.values.shape or H.left.shape != xi.times.shape:
            raise ValidationError(
                f"grid function shape {H.values.shape} does not match field {xi.values.shape}"
            )
        return H
    raise ValidationError(f"cannot evaluate {type(H).__name__} on a field grid")


def _check_traces(xi: SpaceTimeField) -> None:
    for name, tr in (("left", xi.left), ("right", xi.right)):
        if np.any(tr < -1e-12) or np.any(tr > 1 + 1e-12):
            raise ValidationError(f"{name} trace leaves [0, 1]")


def _space_inner(a: np.ndarray, b: np.ndarray, du: float) -> np.ndarray:
    return (a * b).sum(axis=1) * du


# ---------------------------------------------------------------------------
# norms and functionals

def plain_bracket(H, xi: SpaceTimeField) -> float:
    """``<<H, H>>`` over ``[0, T] x [0, 1]``."""
    h = _as_grid(H, xi)
    return trapezoid(_space_inner(h.values, h.values, xi.du), xi.times)


def weighted_bracket(H, xi: SpaceTimeField, ep: EnergyParams) -> float:
    """``<<H, H>>`` plus the boundary masses ``P_m^alpha(xi(0)) H(0)^2 / kappa`` and the mirror term."""
    _check_traces(xi)
    h = _as_grid(H, xi)
    m = ep.m
    bulk = _space_inner(h.values, h.values, xi.du)
    w0 = p_poly_array(ep.alpha, np.clip(xi.left, 0.0, 1.0), m)
    w1 = p_poly_array(ep.beta, np.clip(xi.right, 0.0, 1.0), m)
    edge = (w0 * h.left**2 + w1 * h.right**2) / ep.kappa
    return trapezoid(bulk + edge, xi.times)


def t_functional(H, xi: SpaceTimeField, m: int | None = None,
                 alpha: float | None = None, beta: float | None = None) -> float:
    """``<<xi^m, d_u H>> + int (alpha^m H(0) - beta^m H(1)) ds``."""
    m = xi.m if m is None else m
    alpha = xi.alpha if alpha is None else alpha
    beta = xi.beta if beta is None else beta
    h = _as_grid(H, xi)
    if h.du is None:
        raise ValidationError("test function has no d/du on the grid")
    bulk = _space_inner(xi.values**m, h.du, xi.du)
    edge = alpha**m * h.left - beta**m * h.right
    return trapezoid(bulk + edge, xi.times)


def energy_dual(xi: SpaceTimeField, ep: EnergyParams) -> float:
    """``(1/4c) <<d_u xi^m, d_u xi^m>>_{kappa, xi}``."""
    return weighted_bracket(power_gradient(xi), xi, ep) / (4.0 * ep.c)


def dual_maximizer(xi: SpaceTimeField) -> GridFunction:
    """The direction ``-d_u xi^m`` that attains the supremum for Robin fields."""
    return -power_gradient(xi)


def energy_sup_estimate(xi: SpaceTimeField, ep: EnergyParams, dictionary) -> float:
    """Largest ``T(H)^2 / (4c <<H,H>>_{kappa,xi})`` over the dictionary.

    This is the exact maximum of ``lambda T(H) - c lambda^2 <<H,H>>`` along the
    ray through each ``H``.  Directions of zero norm are skipped.
    """
    dictionary = list(dictionary)
    if not dictionary:
        raise ValidationError("dictionary must contain at least one test function")
    best = 0.0
    for H in dictionary:
        norm = weighted_bracket(H, xi, ep)
        if norm <= 1e-300:
            continue
        t = t_functional(H, xi, ep.m, ep.alpha, ep.beta)
        best = max(best, t * t / (4.0 * ep.c * norm))
    return best


# ---------------------------------------------------------------------------
# boundary conditions and regularity

def robin_bc_residual(field: SpaceTimeField, side: str, kappa: float | None = None) -> float:
    """Time-L2 size of ``d_u(rho^m)(0) - kappa(rho(0) - alpha)`` (or ``kappa(beta - rho(1))`` at the right).

    The derivative is the two-point difference of the two cells next to the
    boundary, so the residual is first order in the mesh size for a smooth
    solution.  Initial data that violates the boundary condition leaves an
    O(1) contribution at ``t = 0``; use a field started after a warm-up.
    """
    kappa = field.kappa if kappa is None else float(kappa)
    if not kappa > 0:
        raise ValidationError(f"kappa must be positive, got {kappa!r}")
    pm = field.values**field.m
    if side == "left":
        r = (pm[:, 1] - pm[:, 0]) / field.du - kappa * (field.left - field.alpha)
    elif side == "right":
        r = (pm[:, -1] - pm[:, -2]) / field.du - kappa * (field.beta - field.right)
    else:
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    return math.sqrt(max(trapezoid(r * r, field.times), 0.0))


def pairing_series(field: SpaceTimeField, H: TestFunction) -> np.ndarray:
    """``<rho_t, H_t>`` at every output time."""
    h = H.on_grid(field.times, field.centers)
    return _space_inner(field.values, h.values, field.du)


def holder_modulus(field: SpaceTimeField, H: TestFunction) -> float:
    """``max_{s<t} |<rho_t,H_t> - <rho_s,H_s>| / sqrt(t - s)`` over output times."""
    if field.times.size < 2:
        raise ValidationError("need at least two time samples")
    p = pairing_series(field, H)
    t = field.times
    dp = np.abs(p[:, None] - p[None, :])
    dt = np.abs(t[:, None] - t[None, :])
    mask = dt > 0
    return float((dp[mask] / np.sqrt(dt[mask])).max())


def holder_bound(H: TestFunction, T: float, energy_plain_max: float) -> float:
    """Constant valid for every ``kappa <= 1``.

    ``energy_plain_max`` bounds ``<<d_u rho^m, d_u rho^m>>`` uniformly in kappa.
    """
    s = H.sup_norms(T)
    return s["du"] * math.sqrt(energy_plain_max) + (s["dt"] + 4.0 * s["H"]) * math.sqrt(2.0 * T)


def window_average(field: SpaceTimeField, a: float, b: float) -> np.ndarray:
    """Exact ``(1/(b-a)) int_a^b rho`` for the piecewise-constant cell data."""
    edges = np.arange(field.N + 1) * field.du
    overlap = np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)
    return field.values @ overlap / (b - a)


def boundary_average_bound(field: SpaceTimeField, eps: float) -> np.ndarray:
    """Right-hand side of the boundary averaging estimate at every output time."""
    m = field.m
    d = power_gradient(field)
    grad_l2 = np.sqrt(_space_inner(d.values, d.values, field.du))
    return eps ** (1.0 / (2 * (m + 1))) + eps ** (1.0 / (m + 1)) * (2.0**m / 3.0) * m**1.5 * grad_l2


def boundary_average_defect(field: SpaceTimeField, j: int, eps: float, side: str = "left") -> float:
    """``max_s |rho_s(0) - avg_{[j eps, j eps + eps]} rho_s| - bound(s)``; nonpositive when the estimate holds."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if not 0 <= j <= field.m - 1:
        raise ValidationError(f"j={j} must lie in 0..m-1={field.m - 1}")
    if eps * (j + 1) > 1.0 + 1e-12:
        raise ValidationError(f"window [{j * eps}, {(j + 1) * eps}] leaves [0, 1]")
    if field.du > eps / 4.0 + 1e-15:
        raise ValidationError(f"grid spacing {field.du:g} does not resolve eps={eps:g} (need du <= eps/4)")
    if side == "left":
        trace = field.left
        avg = window_average(field, j * eps, (j + 1) * eps)
    elif side == "right":
        trace = field.right
        avg = window_average(field, 1.0 - (j + 1) * eps, 1.0 - j * eps)
    else:
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    return float((np.abs(trace - avg) - boundary_average_bound(field, eps)).max())


def integration_by_parts_check(zeta: SpaceTimeField, G: TestFunction) -> float:
    """``|int <d_u zeta, G> + int <zeta, d_u G> - int (zeta(1)G(1) - zeta(0)G(0))|``."""
    g = G.on_grid(zeta.times, zeta.centers)
    dz = discrete_derivative(zeta.values, zeta.du)
    integrand = (
        _space_inner(dz.values, g.values, zeta.du)
        + _space_inner(zeta.values, g.du, zeta.du)
        - (zeta.right * g.right - zeta.left * g.left)
    )
    return abs(trapezoid(integrand, zeta.times))


def energy_report(field: SpaceTimeField, ep: EnergyParams, dictionary, holder_H: TestFunction) -> EnergyReport:
    dictionary = list(dictionary)
    return EnergyReport(
        dual_value=energy_dual(field, ep),
        sup_value=energy_sup_estimate(field, ep, dictionary),
        left_bc_residual=robin_bc_residual(field, "left", ep.kappa),
        right_bc_residual=robin_bc_residual(field, "right", ep.kappa),
        holder_modulus=holder_modulus(field, holder_H),
        dictionary_size=len(dictionary),
    )
