"""Symbolic test functions ``H(t, u)`` with exact derivatives.

A test function is a finite sum of terms ``coef * p(t) * b(u)`` where ``p`` is
a polynomial in time and ``b`` one of ``cos(j pi u)``, ``sin(j pi u)`` or
``u**p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ValidationError

_KINDS = ("cos", "sin", "pow")


@dataclass(frozen=True)
class Term:
    kind: str
    index: int
    time_poly: tuple

    def space(self, u, order: int = 0):
        u = np.asarray(u, dtype=float)
        j = self.index
        if self.kind == "cos":
            w = j * np.pi
            return [np.cos(w * u), -w * np.sin(w * u), -(w**2) * np.cos(w * u)][order]
        if self.kind == "sin":
            w = j * np.pi
            return [np.sin(w * u), w * np.cos(w * u), -(w**2) * np.sin(w * u)][order]
        p = j
        if order == 0:
            return u**p
        if order == 1:
            return p * u ** (p - 1) if p >= 1 else np.zeros_like(u)
        return p * (p - 1) * u ** (p - 2) if p >= 2 else np.zeros_like(u)

    def time(self, t, order: int = 0):
        c = np.asarray(self.time_poly, dtype=float)
        if order:
            c = P.polyder(c, order) if c.size > order else np.zeros(1)
        return P.polyval(np.asarray(t, dtype=float), c)

    def boundary_poly(self, u0: float) -> np.ndarray:
        return np.asarray(self.time_poly, dtype=float) * float(self.space(u0))


class TestFunction:
    """Linear combination of separable basis terms with exact ``d/dt``, ``d/du``, ``d2/du2``.

    Evaluation broadcasts ``t`` against ``u``: pass ``t[:, None]`` and ``u[None, :]``
    for a space-time grid.
    """

    __test__ = False  # not a pytest class

    def __init__(self, terms: Sequence[tuple[float, Term]], name: str = ""):
        self.terms = [(float(c), t) for c, t in terms if c != 0.0]
        self.name = name

    # constructors -----------------------------------------------------
    @classmethod
    def basis(cls, kind: str, index: int, time_poly: Sequence[float] = (1.0,), coef: float = 1.0):
        if kind not in _KINDS:
            raise ValidationError(f"basis kind must be one of {_KINDS}, got {kind!r}")
        if index < 0:
            raise ValidationError("basis index must be >= 0")
        return cls([(coef, Term(kind, int(index), tuple(float(c) for c in time_poly)))], name=f"{kind}{index}")

    @classmethod
    def constant(cls, value: float = 1.0):
        return cls.basis("pow", 0, coef=value)

    # algebra ------------------------------------------------------------
    def __add__(self, other: "TestFunction") -> "TestFunction":
        return TestFunction(self.terms + other.terms, name=f"{self.name}+{other.name}")

    def __mul__(self, scalar: float) -> "TestFunction":
        return TestFunction([(c * scalar, t) for c, t in self.terms], name=self.name)

    __rmul__ = __mul__

    def __neg__(self) -> "TestFunction":
        return self * -1.0

    # evaluation ---------------------------------------------------------
    def _eval(self, t, u, t_order: int, u_order: int):
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        out = np.zeros(np.broadcast(t, u).shape)
        for c, term in self.terms:
            out = out + c * term.time(t, t_order) * term.space(u, u_order)
        return out

    def evaluate(self, t, u):
        return self._eval(t, u, 0, 0)

    __call__ = evaluate

    def dt(self, t, u):
        return self._eval(t, u, 1, 0)

    def du(self, t, u):
        return self._eval(t, u, 0, 1)

    def duu(self, t, u):
        return self._eval(t, u, 0, 2)

    @property
    def vanishes_at_boundary(self) -> bool:
        """True iff ``H(t, 0) = H(t, 1) = 0`` identically in t (the C_0 class)."""
        for u0 in (0.0, 1.0):
            acc = np.zeros(1)
            for c, term in self.terms:
                acc = P.polyadd(acc, c * term.boundary_poly(u0))
            if np.max(np.abs(acc)) > 1e-12:
                return False
        return True

    def sup_norms(self, T: float, n: int = 401) -> dict:
        """Sup norms of H and its derivatives on a fine grid of ``[0,T] x [0,1]``."""
        t = np.linspace(0.0, T, n)[:, None]
        u = np.linspace(0.0, 1.0, n)[None, :]
        return {
            "H": float(np.abs(self.evaluate(t, u)).max()),
            "dt": float(np.abs(self.dt(t, u)).max()),
            "du": float(np.abs(self.du(t, u)).max()),
            "duu": float(np.abs(self.duu(t, u)).max()),
        }

    def on_grid(self, times: np.ndarray, centers: np.ndarray) -> "GridFunction":
        t = np.asarray(times, dtype=float)[:, None]
        u = np.asarray(centers, dtype=float)[None, :]
        return GridFunction(
            values=self.evaluate(t, u),
            left=self.evaluate(t[:, 0], 0.0),
            right=self.evaluate(t[:, 0], 1.0),
            du=self.du(t, u),
        )

    def __repr__(self) -> str:
        return f"TestFunction({self.name or len(self.terms)})"


@dataclass
class GridFunction:
    """A function sampled on a field's grid: cell values, boundary values, d/du at cells."""

    values: np.ndarray
    left: np.ndarray
    right: np.ndarray
    du: np.ndarray | None = None

    def __neg__(self) -> "GridFunction":
        return GridFunction(-self.values, -self.left, -self.right, None if self.du is None else -self.du)


def tensor_dictionary(J: int = 3, max_time_degree: int = 2, T: float = 1.0) -> list[TestFunction]:
    """``t**p cos(j pi u)`` and ``t**p sin(j pi u)`` for ``p <= max_time_degree``, ``j <= J``.

    Time is rescaled by ``T`` so every element is O(1) on ``[0, T]``.
    """
    out = []
    for p in range(max_time_degree + 1):
        poly = [0.0] * p + [1.0 / T**p]
        for j in range(J + 1):
            out.append(TestFunction.basis("cos", j, poly))
            if j > 0:
                out.append(TestFunction.basis("sin", j, poly))
    return out


def generic_test_functions(T: float = 1.0, vanishing: bool = False) -> list[TestFunction]:
    """Five fixed smooth test functions used for refinement and Hoelder checks.

    The general set has nonzero ``d_u H`` at both ends for some t, so every
    boundary term of the weak form is exercised.
    """
    s = 1.0 / T
    if vanishing:
        return [
            TestFunction.basis("sin", 1),
            TestFunction.basis("sin", 2, (1.0, 0.5 * s)),
            TestFunction.basis("sin", 1, (0.3, s)) + TestFunction.basis("sin", 3, (0.5,)),
            TestFunction.basis("sin", 2, (0.0, s, -0.5 * s * s)) + TestFunction.basis("sin", 1, (0.7,)),
            TestFunction.basis("pow", 1) + TestFunction.basis("pow", 2, coef=-1.0),
        ]
    return [
        TestFunction.basis("pow", 1) + TestFunction.constant(0.5),
        TestFunction.basis("pow", 2, (1.0, 0.5 * s)) + TestFunction.basis("sin", 1, (0.2,)),
        TestFunction.basis("cos", 2, (1.0, -0.5 * s)) + TestFunction.basis("pow", 1, (0.3,)),
        TestFunction.basis("pow", 3) + TestFunction.basis("sin", 1, (0.0, s)),
        TestFunction.basis("sin", 1, (1.0, s)) + TestFunction.basis("pow", 2, (0.4,)),
    ]
