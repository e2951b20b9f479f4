"""Finite-volume solver for ``d_t rho = d_uu (rho^m)`` on [0, 1] and weak-form certification.

Cells are uniform with centers ``u_i = (i - 1/2)/N``.  Fluxes are stored as
``F = d_u(rho^m)`` at faces, so the update reads
``rho_i += dt/du * (F_{i+1/2} - F_{i-1/2})``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import StabilityError, ValidationError
from .lattice import ModelParams
from .testfunctions import TestFunction

ROBIN, NEUMANN, DIRICHLET, PERIODIC = 0, 1, 2, 3
_KIND_CODES = {"robin": ROBIN, "neumann": NEUMANN, "dirichlet": DIRICHLET, "periodic": PERIODIC}
BOUND_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryKind:
    kind: str
    kappa: float | None = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValidationError(f"unknown boundary kind {self.kind!r}")
        if self.kind in ("robin", "periodic"):
            if self.kappa is None or not self.kappa > 0 or not math.isfinite(self.kappa):
                raise ValidationError(f"{self.kind} boundary needs kappa > 0, got {self.kappa!r}")
        elif self.kappa is not None:
            raise ValidationError(f"{self.kind} boundary takes no kappa")

    @classmethod
    def robin(cls, kappa: float) -> "BoundaryKind":
        return cls("robin", float(kappa))

    @classmethod
    def neumann(cls) -> "BoundaryKind":
        return cls("neumann")

    @classmethod
    def dirichlet(cls) -> "BoundaryKind":
        return cls("dirichlet")

    @classmethod
    def periodic_slow_bond(cls, kappa: float) -> "BoundaryKind":
        return cls("periodic", float(kappa))

    @classmethod
    def parse(cls, text: str, kappa: float | None = None) -> "BoundaryKind":
        text = text.lower()
        if text in ("robin", "periodic", "periodicslowbond", "slowbond"):
            return cls("periodic" if text != "robin" else "robin", kappa)
        return cls(text)

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def kappa_value(self) -> float:
        return 0.0 if self.kappa is None else self.kappa

    def __str__(self) -> str:
        return self.kind if self.kappa is None else f"{self.kind}(kappa={self.kappa:g})"


@dataclass
class SpaceTimeField:
    """Cell values of a density on a uniform space-time grid plus boundary traces.

    ``inflow[k]`` holds the time-integrated inward boundary fluxes (left,
    right) up to ``times[k]`` exactly as the scheme accumulated them.
    """

    times: np.ndarray
    centers: np.ndarray
    values: np.ndarray
    left: np.ndarray
    right: np.ndarray
    bc: BoundaryKind
    m: int
    alpha: float
    beta: float
    inflow: np.ndarray | None = None
    dt: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.centers.size

    @property
    def du(self) -> float:
        return 1.0 / self.N

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def kappa(self) -> float:
        return self.bc.kappa_value

    def mass(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.du

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.values).tobytes()).hexdigest()

    def same_grid(self, other: "SpaceTimeField") -> bool:
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.centers, other.centers)
        )

    def time_index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, self.T):
            raise ValidationError(f"t={t} is not on the field's time grid")
        return k

    @classmethod
    def from_function(
        cls,
        f,
        N: int,
        times,
        m: int = 1,
        alpha: float = 0.5,
        beta: float = 0.5,
        bc: BoundaryKind | None = None,
    ) -> "SpaceTimeField":
        """Sample ``f(t, u)`` at cell centers; traces are the exact boundary values."""
        times = np.asarray(times, dtype=float)
        centers = (np.arange(N) + 0.5) / N
        vals = np.broadcast_to(f(times[:, None], centers[None, :]), (times.size, N)).astype(float)
        left = np.broadcast_to(f(times, 0.0), times.shape).astype(float)
        right = np.broadcast_to(f(times, 1.0), times.shape).astype(float)
        return cls(times, centers, vals, left, right, bc or BoundaryKind.neumann(), m, alpha, beta)


def cell_centers(N: int) -> np.ndarray:
    return (np.arange(N) + 0.5) / N


def _initial_values(g, N: int) -> np.ndarray:
    u = cell_centers(N)
    if callable(g):
        vals = np.asarray(g(u), dtype=float)
    else:
        vals = np.asarray(g, dtype=float)
    vals = np.broadcast_to(vals, u.shape).astype(float).copy()
    if np.any(vals < 0) or np.any(vals > 1) or not np.all(np.isfinite(vals)):
        raise ValidationError("initial profile must take values in [0, 1]")
    return vals


def stable_dt(N: int, m: int, bc: BoundaryKind, cfl: float) -> float:
    """Largest step keeping the explicit update monotone (hence inside [0, 1])."""
    du = 1.0 / N
    dt = cfl * du * du / (2.0 * m)
    if bc.kind == "dirichlet":
        dt *= 2.0 / 3.0  # half-cell boundary stencil has weight 3 instead of 2
    elif bc.kind == "robin":
        dt = min(dt, cfl * du / (2.0 * bc.kappa))
    elif bc.kind == "periodic":
        dt = min(dt, cfl * du / (2.0 * bc.kappa * m))
    return dt


@njit(cache=True)
def _advance(rho, m, alpha, beta, code, kappa, dt, du, n_steps, inflow):
    N = rho.shape[0]
    p = np.empty(N)
    F = np.empty(N + 1)
    lam = dt / du
    am = alpha**m
    bm = beta**m
    for _ in range(n_steps):
        for i in range(N):
            p[i] = rho[i] ** m
        for i in range(1, N):
            F[i] = (p[i] - p[i - 1]) / du
        if code == 0:
            F[0] = kappa * (rho[0] - alpha)
            F[N] = kappa * (beta - rho[N - 1])
        elif code == 1:
            F[0] = 0.0
            F[N] = 0.0
        elif code == 2:
            F[0] = (p[0] - am) / (0.5 * du)
            F[N] = (bm - p[N - 1]) / (0.5 * du)
        else:
            F[0] = kappa * (p[0] - p[N - 1])
            F[N] = F[0]
        inflow[0] -= F[0] * dt
        inflow[1] += F[N] * dt
        bad = False
        for i in range(N):
            rho[i] += lam * (F[i + 1] - F[i])
            if rho[i] < -1e-12 or rho[i] > 1.0 + 1e-12:
                bad = True
        if bad:
            return 1
    return 0


def solve(
    g,
    params: ModelParams,
    bc: BoundaryKind,
    N: int = 200,
    cfl: float = 0.4,
    n_out: int = 100,
    T: float | None = None,
    warmup: float = 0.0,
) -> SpaceTimeField:
    """Explicit conservative finite-volume solve up to ``T`` (default ``params.T``).

    Output is recorded at ``n_out + 1`` uniform times; the internal step divides
    the output interval evenly and never exceeds :func:`stable_dt`.  With
    ``warmup > 0`` the profile is first evolved for that long and the returned
    field starts (at time 0) from the evolved state, which removes the initial
    boundary layer from boundary diagnostics.
    """
    if warmup < 0:
        raise ValidationError(f"warmup must be nonnegative, got {warmup}")
    if warmup > 0:
        pre = solve(g, params, bc, N=N, cfl=cfl, n_out=1, T=warmup)
        field = solve(pre.values[-1], params, bc, N=N, cfl=cfl, n_out=n_out, T=T)
        field.meta["warmup"] = warmup
        return field
    if N < 8:
        raise ValidationError(f"N must be >= 8, got {N}")
    if not 0 < cfl < 1:
        raise StabilityError(f"cfl={cfl:g} violates the explicit stability bound 0 < cfl < 1")
    if n_out < 1:
        raise ValidationError("n_out must be >= 1")
    T = params.T if T is None else float(T)
    m = params.m
    rho = _initial_values(g, N)
    du = 1.0 / N
    dt_max = stable_dt(N, m, bc, cfl)
    steps_per_out = max(1, math.ceil((T / n_out) / dt_max))
    dt = T / (n_out * steps_per_out)
    times = np.linspace(0.0, T, n_out + 1)
    values = np.empty((n_out + 1, N))
    inflow_hist = np.zeros((n_out + 1, 2))
    values[0] = rho
    inflow = np.zeros(2)
    for k in range(1, n_out + 1):
        status = _advance(rho, m, params.alpha, params.beta, bc.code, bc.kappa_value, dt, du, steps_per_out, inflow)
        if status:
            raise StabilityError(
                f"state left [0, 1] before t={times[k]:.6g} (dt={dt:.3g}, cfl={cfl:g}); reduce cfl"
            )
        values[k] = rho
        inflow_hist[k] = inflow
    if bc.kind == "dirichlet":
        left = np.full(n_out + 1, params.alpha)
        right = np.full(n_out + 1, params.beta)
    else:
        left = values[:, 0].copy()
        right = values[:, -1].copy()
    return SpaceTimeField(
        times,
        cell_centers(N),
        values,
        left,
        right,
        bc,
        m,
        params.alpha,
        params.beta,
        inflow=inflow_hist,
        dt=dt,
        meta={"N": N, "cfl": cfl, "steps": n_out * steps_per_out, "T": T},
    )


def trapezoid(y: np.ndarray, times: np.ndarray, upto: int | None = None) -> float:
    """Trapezoid rule over ``times[:upto+1]`` (whole grid by default)."""
    if upto is None:
        upto = times.size - 1
    if upto == 0:
        return 0.0
    return float(np.trapezoid(y[: upto + 1], times[: upto + 1]))


def weak_form_residual(field: SpaceTimeField, G: TestFunction, t: float | None = None) -> float:
    """Absolute value of the weak-formulation left-hand side at time ``t``.

    The boundary terms follow ``field.bc``: Robin/Neumann use the traces and the
    ``kappa`` reservoir term, Dirichlet replaces traces by ``alpha``/``beta``
    and requires a test function vanishing at both ends, periodic slow bond
    uses the interface exchange ``kappa (rho(0)^m - rho(1)^m)(G(0) - G(1))``.
    """
    bc = field.bc
    if bc.kind == "dirichlet" and not G.vanishes_at_boundary:
        raise ValidationError("Dirichlet weak form requires a test function vanishing at u=0 and u=1")
    k = field.time_index(field.T if t is None else t)
    m, du = field.m, field.du
    ts = field.times[: k + 1]
    u = field.centers
    rho = field.values[: k + 1]
    Gv = G.evaluate(ts[:, None], u[None, :])
    lhs = float(np.dot(rho[k], Gv[k]) * du - np.dot(rho[0], Gv[0]) * du)
    bulk = (rho * (G.dt(ts[:, None], u[None, :]) + rho ** (m - 1) * G.duu(ts[:, None], u[None, :]))).sum(axis=1) * du
    dG0, dG1 = G.du(ts, 0.0), G.du(ts, 1.0)
    G0, G1 = G.evaluate(ts, 0.0), G.evaluate(ts, 1.0)
    r0, r1 = field.left[: k + 1], field.right[: k + 1]
    if bc.kind == "dirichlet":
        edge = field.beta**m * dG1 - field.alpha**m * dG0
    else:
        edge = r1**m * dG1 - r0**m * dG0
        if bc.kind == "robin":
            edge = edge - bc.kappa * (G0 * (field.alpha - r0) + G1 * (field.beta - r1))
        elif bc.kind == "periodic":
            edge = edge + bc.kappa * (r0**m - r1**m) * (G0 - G1)
    res = lhs - trapezoid(bulk, ts) + trapezoid(edge, ts)
    return abs(res)


def mass_balance_defect(field: SpaceTimeField) -> float:
    """Max over output times of ``|mass(t) - mass(0) - integrated boundary inflow|``."""
    if field.inflow is None:
        raise ValidationError("field carries no boundary flux record")
    mass = field.mass()
    net = field.inflow.sum(axis=1)
    return float(np.abs(mass - mass[0] - net).max())


def l2_spacetime_distance(f1: SpaceTimeField, f2: SpaceTimeField) -> float:
    """``<<f1 - f2, f1 - f2>>^(1/2)``: midpoint in space, trapezoid in time."""
    if not f1.same_grid(f2):
        raise ValidationError("fields live on different grids")
    sq = ((f1.values - f2.values) ** 2).sum(axis=1) * f1.du
    return math.sqrt(max(trapezoid(sq, f1.times), 0.0))


def dirichlet_trace_defect(field: SpaceTimeField, alpha: float | None = None, beta: float | None = None,
                           source: str = "cells") -> float:
    """Time-L2 distance of the boundary values from ``(alpha, beta)``.

    ``source='cells'`` uses the nearest-cell values, ``'traces'`` the stored traces.
    """
    alpha = field.alpha if alpha is None else alpha
    beta = field.beta if beta is None else beta
    if source == "cells":
        a, b = field.values[:, 0], field.values[:, -1]
    elif source == "traces":
        a, b = field.left, field.right
    else:
        raise ValidationError(f"source must be 'cells' or 'traces', got {source!r}")
    return math.sqrt(max(trapezoid((a - alpha) ** 2 + (b - beta) ** 2, field.times), 0.0))


def dirichlet_steady_state(u, m: int, alpha: float, beta: float) -> np.ndarray:
    """Stationary profile with ``rho^m`` linear between ``alpha^m`` and ``beta^m``."""
    return (alpha**m + (beta**m - alpha**m) * np.asarray(u, dtype=float)) ** (1.0 / m)


def heat_neumann_cosine(t, u, mean: float = 0.5, amp: float = 0.4) -> np.ndarray:
    """Closed-form heat solution from ``mean + amp cos(pi u)`` with no-flux ends."""
    return mean + amp * np.exp(-np.pi**2 * np.asarray(t)) * np.cos(np.pi * np.asarray(u))
