"""Continuous-time simulation of the porous medium model with slow reservoirs.

The generator is ``n^2 L_n^m`` (bulk constrained exchanges, an ``n**(a-2)``
SSEP perturbation and Glauber reservoirs of intensity ``kappa / n**theta``),
so every time reported here is macroscopic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import AbsorbingStateError, ValidationError
from .lattice import Configuration, ModelParams, boundary_rate, pmm_rate, ssep_rate


class Topology(enum.Enum):
    INTERVAL = "interval"
    TORUS_SLOW_BOND = "torus"

    @classmethod
    def parse(cls, value) -> "Topology":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name, member.name.lower()):
                return member
        raise ValidationError(f"unknown topology {value!r}")


@dataclass(frozen=True)
class EventTable:
    """Effective (non no-op) jump rates of a configuration, ``n^2`` included.

    ``bond_rates[i]`` belongs to bond ``(x, x+1)`` with ``x = i + 1`` on the
    interval and ``x = i`` on the torus (the last torus bond is the slow one).
    ``boundary_rates`` holds the Glauber rates at sites 1 and n-1.
    """

    bond_rates: np.ndarray
    boundary_rates: np.ndarray
    topology: Topology

    @property
    def total(self) -> float:
        return float(self.bond_rates.sum() + self.boundary_rates.sum())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.bond_rates, self.boundary_rates])

    def target(self, eta: Configuration, index: int) -> Configuration:
        """Configuration reached by firing event ``index`` of :meth:`as_vector`."""
        nb = self.bond_rates.size
        if index < nb:
            x = index if self.topology is Topology.TORUS_SLOW_BOND else index + 1
            return eta.exchange(x, x + 1)
        return eta.flip(1 if index == nb else eta.n - 1)


def _slow_factor(params: ModelParams) -> float:
    return params.kappa / float(params.n) ** params.theta


def build_event_table(eta: Configuration, topology: Topology = Topology.INTERVAL) -> EventTable:
    """Evaluate every jump rate of ``eta`` from the lattice formulas."""
    topology = Topology.parse(topology)
    p = eta.params
    n2 = float(p.n) ** 2
    w = p.ssep_weight
    if topology is Topology.TORUS_SLOW_BOND:
        if not eta.torus:
            raise ValidationError("torus topology needs a torus configuration")
        rates = np.empty(p.n)
        for x in range(p.n):
            exch = ssep_rate(eta, x, x + 1) + ssep_rate(eta, x + 1, x)
            r = n2 * (pmm_rate(eta, x) + w) * exch
            rates[x] = r * _slow_factor(p) if x == p.n - 1 else r
        return EventTable(rates, np.zeros(2), topology)
    if eta.torus:
        raise ValidationError("interval topology needs an interval configuration")
    rates = np.empty(p.n - 2)
    for x in range(1, p.n - 1):
        exch = ssep_rate(eta, x, x + 1) + ssep_rate(eta, x + 1, x)
        rates[x - 1] = n2 * (pmm_rate(eta, x) + w) * exch
    bnd = n2 * p.boundary_intensity
    boundary = np.array(
        [bnd * boundary_rate(eta, 1, p.alpha), bnd * boundary_rate(eta, p.n - 1, p.beta)]
    )
    return EventTable(rates, boundary, topology)


def step(eta: Configuration, table: EventTable, rng: np.random.Generator) -> tuple[Configuration, float]:
    """One Gillespie step: exponential holding time, event chosen by rate."""
    rates = table.as_vector()
    total = rates.sum()
    if not total > 0.0:
        raise AbsorbingStateError("total jump rate is zero")
    holding = rng.exponential(1.0 / total)
    index = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
    index = min(index, rates.size - 1)
    while rates[index] == 0.0:
        index -= 1
    return table.target(eta, index), float(holding)


@dataclass
class Trajectory:
    """Snapshots of one realization at the requested macroscopic times.

    ``injections``/``removals`` are cumulative reservoir event counts at each
    sample time; ``occupation_time`` is the time integral of every site's
    occupation over ``[0, sample_times[-1]]``.
    """

    sample_times: np.ndarray
    snapshots: np.ndarray
    seed: int
    params: ModelParams
    topology: Topology
    injections: np.ndarray
    removals: np.ndarray
    occupation_time: np.ndarray
    n_events: int

    def configuration(self, k: int) -> Configuration:
        return Configuration(self.snapshots[k], self.params, self.topology is Topology.TORUS_SLOW_BOND)

    def particle_counts(self) -> np.ndarray:
        return self.snapshots.sum(axis=1, dtype=np.int64)


def _profile_values(g, params: ModelParams, torus: bool) -> np.ndarray:
    xs = np.arange(0, params.n) if torus else np.arange(1, params.n)
    u = xs / params.n
    vals = np.asarray(g(u), dtype=float) if callable(g) else np.broadcast_to(np.asarray(g, dtype=float), u.shape)
    if vals.shape != u.shape:
        vals = np.broadcast_to(vals, u.shape)
    if np.any(vals < 0) or np.any(vals > 1):
        raise ValidationError("initial profile must take values in [0, 1]")
    return vals


def sample_initial(g, params: ModelParams, rng: np.random.Generator, torus: bool = False) -> Configuration:
    """Product Bernoulli configuration with marginals ``g(x/n)``."""
    probs = _profile_values(g, params, torus)
    occ = (rng.random(probs.size) < probs).astype(np.uint8)
    return Configuration(occ, params, torus)


def trajectory_seeds(master_seed: int, index: int) -> tuple[np.random.Generator, int]:
    """Counter-based split of ``master_seed``: (numpy generator, kernel seed) for trajectory ``index``."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(index)])
    state = ss.generate_state(2, dtype=np.uint32)
    return np.random.default_rng(int(state[0])), int(state[1])


def _check_times(sample_times, T: float) -> np.ndarray:
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValidationError("sample_times must be a nonempty 1-D sequence")
    if times[0] < 0 or times[-1] > T * (1 + 1e-12) or np.any(np.diff(times) <= 0):
        raise ValidationError("sample_times must be strictly increasing inside [0, T]")
    return times


def run_from(
    eta: Configuration,
    sample_times: Sequence[float],
    seed: int,
    topology: Topology = Topology.INTERVAL,
) -> Trajectory:
    """Evolve an explicit starting configuration (used by :func:`simulate`)."""
    topology = Topology.parse(topology)
    p = eta.params
    torus = topology is Topology.TORUS_SLOW_BOND
    if torus != eta.torus:
        raise ValidationError("configuration layout does not match topology")
    times = _check_times(sample_times, p.T)
    occ = np.array(eta.occupancy, dtype=np.uint8)
    snaps, inj, rem, occ_time, n_events, status = _kernels.run(
        occ,
        times,
        np.uint32(seed & 0xFFFFFFFF),
        p.n,
        p.m,
        p.alpha,
        p.beta,
        torus,
        float(p.n) ** 2,
        p.ssep_weight,
        0.0 if torus else p.boundary_intensity,
        _slow_factor(p) if torus else 1.0,
    )
    if status != 0 and not torus:
        raise AbsorbingStateError("reached a configuration with zero total rate")
    return Trajectory(times, snaps, int(seed), p, topology, inj, rem, occ_time, int(n_events))


def simulate(
    g,
    params: ModelParams,
    topology: Topology = Topology.INTERVAL,
    sample_times: Sequence[float] | None = None,
    seed: int = 0,
) -> Trajectory:
    """Sample a Bernoulli initial state associated with ``g`` and run it.

    ``seed`` drives both the initial sampling and the jump clocks, so the same
    arguments always give a bit-identical trajectory.
    """
    topology = Topology.parse(topology)
    if sample_times is None:
        sample_times = np.linspace(0.0, params.T, 11)
    rng, kernel_seed = trajectory_seeds(seed, 0)
    eta0 = sample_initial(g, params, rng, torus=topology is Topology.TORUS_SLOW_BOND)
    traj = run_from(eta0, sample_times, kernel_seed, topology)
    traj.seed = int(seed)
    return traj


def empirical_pairing(eta: Configuration, G, t: float = 0.0) -> float:
    """``(1/n) sum_x G(x/n) eta(x)`` over the lattice sites."""
    xs = np.asarray(list(eta.sites))
    u = xs / eta.n
    if hasattr(G, "evaluate"):
        vals = np.asarray(G.evaluate(t, u), dtype=float)
    else:
        vals = np.asarray(G(u), dtype=float) * np.ones_like(u)
    return float(np.dot(vals, eta.occupancy.astype(float)) / eta.n)


def box_average(eta: Configuration, x: int, ell: int, direction: str = "right") -> float:
    """Mean occupation over ``ell`` sites starting at ``x`` toward ``direction``."""
    if ell < 1:
        raise ValidationError("box size must be >= 1")
    if direction == "right":
        lo, hi = x, x + ell - 1
    elif direction == "left":
        lo, hi = x - ell + 1, x
    else:
        raise ValidationError(f"direction must be 'left' or 'right', got {direction!r}")
    first, last = (0, eta.n - 1) if eta.torus else (1, eta.n - 1)
    if lo < first or hi > last:
        raise ValidationError(f"box [{lo}, {hi}] overflows the lattice {first}..{last}")
    return float(np.mean([eta(y) for y in range(lo, hi + 1)]))


@dataclass
class EnsembleStats:
    """Exact integer accumulators over trajectories, projected onto bins.

    ``sums[k, b]`` is the total number of particles seen in bin ``b`` at time
    ``k`` over all trajectories; ``sq_sums`` the sum of squared per-trajectory
    counts.  Integer arithmetic makes the aggregate independent of order.
    """

    sample_times: np.ndarray
    bin_sizes: np.ndarray
    sums: np.ndarray
    sq_sums: np.ndarray
    n_samples: int = 0
    seeds: list = field(default_factory=list)

    def add(self, counts: np.ndarray) -> None:
        counts = counts.astype(np.int64)
        self.sums += counts
        self.sq_sums += counts * counts
        self.n_samples += 1

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        out = EnsembleStats(
            self.sample_times,
            self.bin_sizes,
            self.sums + other.sums,
            self.sq_sums + other.sq_sums,
            self.n_samples + other.n_samples,
            self.seeds + other.seeds,
        )
        return out

    @property
    def mean(self) -> np.ndarray:
        return self.sums / (self.n_samples * self.bin_sizes)

    @property
    def stderr(self) -> np.ndarray:
        M = self.n_samples
        if M < 2:
            return np.full(self.sums.shape, np.nan)
        mean_c = self.sums / M
        var_c = (self.sq_sums - M * mean_c**2) / (M - 1)
        var_c = np.maximum(var_c, 0.0)
        return np.sqrt(var_c / M) / self.bin_sizes


def site_bins(params: ModelParams, n_bins: int | None, torus: bool = False) -> np.ndarray:
    """Bin index of every lattice site: site x goes to the cell containing x/n."""
    xs = np.arange(0, params.n) if torus else np.arange(1, params.n)
    if n_bins is None:
        return np.arange(xs.size)
    return np.minimum((xs / params.n * n_bins).astype(np.int64), n_bins - 1)


def simulate_ensemble(
    g,
    params: ModelParams,
    M: int,
    sample_times: Sequence[float],
    master_seed: int = 0,
    topology: Topology = Topology.INTERVAL,
    n_bins: int | None = None,
    on_trajectory: Callable[[Trajectory], None] | None = None,
) -> EnsembleStats:
    """Run ``M`` independent trajectories and accumulate binned occupations.

    Trajectory ``i`` uses the ``(master_seed, i)`` split, so the result does not
    depend on execution order.  ``n_bins=None`` keeps per-site resolution.
    """
    topology = Topology.parse(topology)
    torus = topology is Topology.TORUS_SLOW_BOND
    times = _check_times(sample_times, params.T)
    bins = site_bins(params, n_bins, torus)
    nb = int(bins.max()) + 1
    sizes = np.bincount(bins, minlength=nb).astype(float)
    stats = EnsembleStats(times, sizes, np.zeros((times.size, nb), np.int64), np.zeros((times.size, nb), np.int64))
    for i in range(int(M)):
        rng, kseed = trajectory_seeds(master_seed, i)
        eta0 = sample_initial(g, params, rng, torus)
        traj = run_from(eta0, times, kseed, topology)
        counts = np.zeros((times.size, nb), np.int64)
        for k in range(times.size):
            counts[k] = np.bincount(bins, weights=traj.snapshots[k], minlength=nb).astype(np.int64)
        stats.add(counts)
        stats.seeds.append(kseed)
        if on_trajectory is not None:
            on_trajectory(traj)
    return stats
