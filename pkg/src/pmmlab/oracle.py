"""Brute-force ground truth on tiny lattices.

States are integers; bit ``i`` holds ``eta(i + 1)`` on the interval and
``eta(i)`` on the torus (little-endian in site order).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from .errors import ValidationError
from .kmc import Topology, build_event_table
from .lattice import Configuration, ModelParams, tau_h

MAX_N = 14


def state_to_config(s: int, params: ModelParams, torus: bool = False) -> Configuration:
    L = params.n if torus else params.n - 1
    bits = (s >> np.arange(L)) & 1
    return Configuration(bits.astype(np.uint8), params, torus)


def config_to_state(eta: Configuration) -> int:
    return int(np.dot(eta.occupancy.astype(np.int64), 1 << np.arange(eta.occupancy.size, dtype=np.int64)))


@dataclass(frozen=True)
class GeneratorMatrix:
    """Sparse generator ``Q`` of ``n^2 L_n^m``; rows sum to zero."""

    matrix: sp.csr_matrix
    params: ModelParams
    topology: Topology

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def torus(self) -> bool:
        return self.topology is Topology.TORUS_SLOW_BOND

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def inf_norm(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max())

    def row_sum_defect(self) -> float:
        return float(np.abs(np.asarray(self.matrix.sum(axis=1)).ravel()).max())

    def occupation_matrix(self) -> np.ndarray:
        """``occ[s, i]``: occupation of the i-th stored site in state s."""
        L = self.params.n if self.torus else self.params.n - 1
        s = np.arange(self.dimension)[:, None]
        return ((s >> np.arange(L)[None, :]) & 1).astype(float)


def generator_matrix(params: ModelParams, topology: Topology = Topology.INTERVAL) -> GeneratorMatrix:
    """Assemble ``Q`` state by state from the lattice rate formulas."""
    topology = Topology.parse(topology)
    if params.n > MAX_N:
        raise ValidationError(f"n={params.n} too large for the exact oracle (max {MAX_N})")
    torus = topology is Topology.TORUS_SLOW_BOND
    L = params.n if torus else params.n - 1
    dim = 1 << L
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    for s in range(dim):
        eta = state_to_config(s, params, torus)
        table = build_event_table(eta, topology)
        rates = table.as_vector()
        for idx in np.flatnonzero(rates):
            target = config_to_state(table.target(eta, int(idx)))
            rows.append(s)
            cols.append(target)
            vals.append(rates[idx])
        diag[s] = -rates.sum()
    rows.extend(range(dim))
    cols.extend(range(dim))
    vals.extend(diag)
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return GeneratorMatrix(Q, params, topology)


def bernoulli_product(profile: np.ndarray) -> np.ndarray:
    """Probability vector of the product measure with per-site marginals ``profile``."""
    profile = np.asarray(profile, dtype=float)
    L = profile.size
    s = np.arange(1 << L)[:, None]
    bits = (s >> np.arange(L)[None, :]) & 1
    return np.prod(np.where(bits == 1, profile[None, :], 1.0 - profile[None, :]), axis=1)


@dataclass(frozen=True)
class InvariantReport:
    stationarity: float
    detailed_balance: float
    q_norm: float

    @property
    def max_residual(self) -> float:
        return max(self.stationarity, self.detailed_balance)

    def relative(self) -> float:
        return self.max_residual / self.q_norm


def invariant_measure_check(params: ModelParams, topology: Topology = Topology.INTERVAL) -> InvariantReport:
    """Residuals of ``nu_rho Q = 0`` and of detailed balance for ``alpha = beta = rho``."""
    if params.alpha != params.beta:
        raise ValidationError(f"invariant measure check needs alpha == beta, got {params.alpha} != {params.beta}")
    if params.n > 12:
        raise ValidationError("invariant measure check limited to n <= 12")
    gen = generator_matrix(params, topology)
    L = params.n if gen.torus else params.n - 1
    nu = bernoulli_product(np.full(L, params.alpha))
    Q = gen.matrix
    stationarity = float(np.abs(Q.T @ nu).max())
    flux = sp.diags(nu) @ Q
    db = flux - flux.T
    db_max = float(abs(db).max()) if db.nnz else 0.0
    return InvariantReport(stationarity, db_max, gen.inf_norm())


def laplacian_identity_check(params: ModelParams, margin: int | None = None) -> float:
    """Max defect of ``L eta(x) = tau_{x-1}h + tau_{x+1}h - 2 tau_x h`` over states and bulk x.

    ``L`` is recovered from the assembled generator (divided by ``n^2``).  Sites
    within ``margin`` (default ``m``) of the end sites are skipped.
    """
    if params.n > 12:
        raise ValidationError("laplacian identity check limited to n <= 12")
    margin = params.m if margin is None else int(margin)
    xs = [x for x in range(2, params.n - 1) if x - 1 > margin and (params.n - 1) - x > margin]
    if not xs:
        raise ValidationError(f"no bulk site at distance > {margin} from the boundary for n={params.n}")
    gen = generator_matrix(params)
    occ = gen.occupation_matrix()
    n2 = float(params.n) ** 2
    drift = (gen.matrix @ occ) / n2
    defect = 0.0
    for s in range(gen.dimension):
        eta = state_to_config(s, params)
        for x in xs:
            rhs = tau_h(eta, x - 1, True) + tau_h(eta, x + 1, True) - 2.0 * tau_h(eta, x, True)
            defect = max(defect, abs(drift[s, x - 1] - rhs))
    return defect


@dataclass(frozen=True)
class DensityEvolution:
    times: np.ndarray
    means: np.ndarray
    mass: np.ndarray


def _profile(g, params: ModelParams, torus: bool) -> np.ndarray:
    xs = np.arange(0, params.n) if torus else np.arange(1, params.n)
    u = xs / params.n
    vals = np.asarray(g(u), dtype=float) if callable(g) else np.full(u.shape, float(g))
    return np.broadcast_to(vals, u.shape).astype(float)


def uniformize(Q: sp.csr_matrix, p0: np.ndarray, t: float, tol: float = 1e-15) -> np.ndarray:
    """``p0 exp(tQ)`` by Poissonized powers of ``I + Q/Lambda``."""
    if t == 0:
        return p0.copy()
    lam = float(np.abs(Q.diagonal()).max())
    if lam == 0:
        return p0.copy()
    PT = (sp.identity(Q.shape[0], format="csr") + Q / lam).T.tocsr()
    mu = lam * t
    kmax = int(poisson.isf(tol, mu)) + 2
    weights = poisson.pmf(np.arange(kmax + 1), mu)
    v = p0.copy()
    out = weights[0] * v
    for k in range(1, kmax + 1):
        v = PT @ v
        out += weights[k] * v
    return out


def exact_density_evolution(
    params: ModelParams, g, t_grid, topology: Topology = Topology.INTERVAL
) -> DensityEvolution:
    """Expected occupation of every site at each time, from the full distribution."""
    topology = Topology.parse(topology)
    if params.n > 12:
        raise ValidationError("exact density evolution limited to n <= 12")
    gen = generator_matrix(params, topology)
    occ = gen.occupation_matrix()
    times = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValidationError("t_grid must be nondecreasing and nonnegative")
    p = bernoulli_product(_profile(g, params, gen.torus))
    means, mass = [], []
    t_prev = 0.0
    for t in times:
        p = uniformize(gen.matrix, p, t - t_prev)
        t_prev = t
        means.append(p @ occ)
        mass.append(p.sum())
    return DensityEvolution(times, np.array(means), np.array(mass))


def dump_coo(gen: GeneratorMatrix, path) -> None:
    """Write ``row col value`` lines (nonzero entries, full precision)."""
    coo = gen.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for i in order:
            fh.write(f"{int(coo.row[i])} {int(coo.col[i])} {float(coo.data[i])!r}\n")
