"""Configurations and microscopic rate formulas of the porous medium model.

Sites of the interval lattice are ``1..n-1``.  Reads outside that range
follow the reservoir convention: ``eta(x) = alpha`` for ``x <= 0`` and
``eta(x) = beta`` for ``x >= n``.  On the torus variant the lattice is
``0..n-1`` with periodic indexing and no reservoirs.

All functions here are pure and return Python floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ModelParams:
    """Fixed scalars of the model.

    ``T`` is the macroscopic time horizon; ``a`` the exponent of the vanishing
    SSEP perturbation ``n**(a-2)``.
    """

    m: int = 2
    n: int = 100
    kappa: float = 1.0
    theta: float = 1.0
    a: float = 1.5
    alpha: float = 0.2
    beta: float = 0.8
    T: float = 0.1

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ValidationError(f"m must be a positive integer, got {self.m!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 3:
            raise ValidationError(f"n must be an integer >= 3, got {self.n!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        _check_open("kappa", self.kappa, 0.0, math.inf)
        if not (self.theta >= 0 and math.isfinite(self.theta)):
            raise ValidationError(f"theta must be a finite real >= 0, got {self.theta!r}")
        _check_open("a", self.a, 1.0, 2.0)
        _check_open("alpha", self.alpha, 0.0, 1.0)
        _check_open("beta", self.beta, 0.0, 1.0)
        _check_open("T", self.T, 0.0, math.inf)

    @property
    def ssep_weight(self) -> float:
        """Weight ``n**(a-2)`` of the SSEP perturbation."""
        return float(self.n) ** (self.a - 2.0)

    @property
    def boundary_intensity(self) -> float:
        """Reservoir clock intensity ``kappa / n**theta`` (before the n^2 speed-up)."""
        return self.kappa / float(self.n) ** self.theta

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("m", "n", "kappa", "theta", "a", "alpha", "beta", "T")}


def _check_open(name: str, value: float, lo: float, hi: float) -> None:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a real number, got {value!r}") from None
    if not (lo < v < hi):
        hi_s = "inf" if math.isinf(hi) else f"{hi:g}"
        raise ValidationError(f"{name}={v:g} is outside the open interval ({lo:g}, {hi_s})")


@dataclass(frozen=True)
class Configuration:
    """Occupation vector together with the parameters that fix its conventions.

    For the interval lattice ``occupancy[i]`` holds ``eta(i + 1)``; for the torus
    ``occupancy[i]`` holds ``eta(i)``.
    """

    occupancy: np.ndarray
    params: ModelParams
    torus: bool = False
    _occ: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=np.uint8).copy()
        expected = self.params.n if self.torus else self.params.n - 1
        if occ.ndim != 1 or occ.size != expected:
            raise ValidationError(f"occupancy must have length {expected}, got shape {occ.shape}")
        if np.any(occ > 1):
            raise ValidationError("occupancy entries must be 0 or 1")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "_occ", tuple(int(v) for v in occ))

    @classmethod
    def from_sites(cls, params: ModelParams, sites: Sequence[int], torus: bool = False) -> "Configuration":
        return cls(np.asarray(sites, dtype=np.uint8), params, torus)

    @classmethod
    def empty(cls, params: ModelParams, torus: bool = False) -> "Configuration":
        return cls(np.zeros(params.n if torus else params.n - 1, np.uint8), params, torus)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def sites(self) -> range:
        return range(0, self.n) if self.torus else range(1, self.n)

    def __call__(self, x: int) -> float:
        """Site accessor with the reservoir (or periodic) convention."""
        if self.torus:
            return float(self._occ[x % self.n])
        if x <= 0:
            return self.params.alpha
        if x >= self.n:
            return self.params.beta
        return float(self._occ[x - 1])

    def exchange(self, x: int, y: int) -> "Configuration":
        """``eta^{x,y}``: swap the occupations of sites x and y."""
        occ = self.occupancy.copy()
        i, j = self._index(x), self._index(y)
        occ[i], occ[j] = occ[j], occ[i]
        return Configuration(occ, self.params, self.torus)

    def flip(self, x: int) -> "Configuration":
        """``eta^x``: flip the occupation of site x."""
        occ = self.occupancy.copy()
        i = self._index(x)
        occ[i] = 1 - occ[i]
        return Configuration(occ, self.params, self.torus)

    def particle_count(self) -> int:
        return int(self.occupancy.sum())

    def _index(self, x: int) -> int:
        if self.torus:
            return x % self.n
        if not 1 <= x <= self.n - 1:
            raise ValidationError(f"site {x} outside 1..{self.n - 1}")
        return x - 1


def p_poly(gamma: float, rho: float, m: int) -> float:
    """``sum_{i<m} gamma**(m-1-i) * rho**i``; satisfies ``(gamma-rho)*P = gamma**m - rho**m``."""
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma!r}")
    if rho < 0:
        raise ValidationError(f"rho must be nonnegative, got {rho!r}")
    if m < 1:
        raise ValidationError(f"m must be a positive integer, got {m!r}")
    return float(sum(gamma ** (m - 1 - i) * rho**i for i in range(m)))


def _check_bond(eta: Configuration, x: int) -> None:
    if eta.torus:
        return
    if not 1 <= x <= eta.n - 2:
        raise ValidationError(f"bond left endpoint {x} outside 1..{eta.n - 2}")


def pmm_rate(eta: Configuration, x: int) -> float:
    """Constraint rate ``c^m_{x,x+1}``: number of satisfied occupation windows.

    The k-th window is ``{x-(m-k), ..., x+k} \\ {x, x+1}``; each contributes the
    product of its occupations (reservoir values outside the lattice).
    """
    _check_bond(eta, x)
    m = eta.params.m
    total = 0.0
    for k in range(1, m + 1):
        prod = 1.0
        for j in range(-(m - k), k + 1):
            if j == 0 or j == 1:
                continue
            prod *= eta(x + j)
        total += prod
    return total


def ssep_rate(eta: Configuration, x: int, y: int) -> float:
    """``a_{x,y} = eta(x) (1 - eta(y))``; bulk sites only."""
    i, j = eta._index(x), eta._index(y)
    return float(eta.occupancy[i] * (1 - eta.occupancy[j]))


def boundary_rate(eta: Configuration, z: int, gamma: float) -> float:
    """Glauber weight ``gamma`` to fill an empty end site, ``1 - gamma`` to empty it."""
    if eta.torus or z not in (1, eta.n - 1):
        raise ValidationError(f"site {z} is not a boundary site (1 or {eta.n - 1})")
    occ = eta(z)
    return gamma * (1.0 - occ) + (1.0 - gamma) * occ


def tau_h(eta: Configuration, x: int, include_ssep: bool = False) -> float:
    """Translated local function ``tau_x h^m`` whose gradient is the bond current."""
    if not eta.torus and not 1 <= x <= eta.n - 1:
        raise ValidationError(f"site {x} outside 1..{eta.n - 1}")
    m = eta.params.m
    value = 0.0
    for k in range(1, m + 1):
        prod = 1.0
        for j in range(-(m - k), k):
            prod *= eta(x + j)
        value += prod
    for k in range(1, m):
        prod = 1.0
        for j in range(-(m - k), k + 1):
            if j != 0:
                prod *= eta(x + j)
        value -= prod
    if include_ssep:
        value += eta.params.ssep_weight * eta(x)
    return value


def tau_h_boundary(eta: Configuration, side: str, include_ssep: bool = False) -> float:
    """Closed form of ``tau_h`` at site 1 (``side='left'``) or n-1 (``'right'``).

    Expanded with the reservoir value substituted; kept separate from
    :func:`tau_h` so the two can be checked against each other.
    """
    m, n = eta.params.m, eta.n
    if side == "left":
        gamma, site, x0 = eta.params.alpha, (lambda j: eta(j)), 1
    elif side == "right":
        gamma, site, x0 = eta.params.beta, (lambda j: eta(n - j)), n - 1
    else:
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    value = 0.0
    for k in range(0, m):
        value += gamma**k * math.prod(site(j) for j in range(1, m - k + 1))
    for k in range(1, m):
        value -= gamma**k * math.prod(site(j) for j in range(2, m + 2 - k))
    if include_ssep:
        value += eta.params.ssep_weight * eta(x0)
    return value


def current(eta: Configuration, x: int, include_ssep: bool = False) -> float:
    """Instantaneous current across bond ``(x, x+1)``."""
    _check_bond(eta, x)
    return tau_h(eta, x, include_ssep) - tau_h(eta, x + 1, include_ssep)
