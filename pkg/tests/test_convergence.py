import numpy as np
import pytest

from pmmlab.convergence import (
    field_at_sites,
    hydro_compare,
    interface_jump,
    kappa_sweep,
    periodic_reference,
    project_to_bins,
    regime_boundary,
    slow_bond_compare,
)
from pmmlab.errors import ValidationError
from pmmlab.kmc import site_bins
from pmmlab.lattice import ModelParams
from pmmlab.pde import BoundaryKind, l2_spacetime_distance, solve

P = ModelParams(m=2, alpha=0.2, beta=0.8, T=0.1)


def test_sweep_equilibrium_is_zero():
    p = P.replace(alpha=0.4, beta=0.4)
    res = kappa_sweep(0.4, p, [1.0, 0.1], N=50, n_out=10)
    assert res.distances_to_neumann == [0.0, 0.0]
    assert res.distances_to_dirichlet == [0.0, 0.0]


def test_sweep_monotone_small_grid():
    res = kappa_sweep(0.5, P, [1.0, 0.1, 0.01], N=50, n_out=20)
    d = res.distances_to_neumann
    assert d[0] > d[1] > d[2]
    assert res.manifest["kappa_grid"] == [1.0, 0.1, 0.01]


def test_sweep_is_reproducible():
    a = kappa_sweep(0.5, P, [1.0, 3.0], N=40, n_out=10)
    b = kappa_sweep(0.5, P, [1.0, 3.0], N=40, n_out=10)
    assert a.rows() == b.rows()


def test_neumann_reference_is_small_kappa_limit():
    neu = solve(0.5, P, BoundaryKind.neumann(), N=100, n_out=20)
    rob = solve(0.5, P, BoundaryKind.robin(1e-8), N=100, n_out=20)
    assert l2_spacetime_distance(neu, rob) < 1e-6


def test_bad_kappa_grid():
    with pytest.raises(ValidationError):
        kappa_sweep(0.5, P, [1.0, -1.0])


def test_regimes():
    assert regime_boundary(0.5, 1.0).kind == "dirichlet"
    assert regime_boundary(1.0, 2.0) == BoundaryKind.robin(2.0)
    assert regime_boundary(2.0, 1.0).kind == "neumann"


def test_projection_of_constant_is_constant():
    f = solve(0.3, P.replace(alpha=0.3, beta=0.3), BoundaryKind.neumann(), N=40, n_out=4)
    p = P.replace(n=57)
    binned = project_to_bins(field_at_sites(f, p), site_bins(p, 7))
    np.testing.assert_allclose(binned, 0.3)


def test_site_projection_of_linear_profile():
    from pmmlab.pde import SpaceTimeField

    f = SpaceTimeField.from_function(lambda t, u: u + 0 * t, 50, np.array([0.0, 1.0]))
    p = P.replace(n=10)
    np.testing.assert_allclose(field_at_sites(f, p)[0], np.arange(1, 10) / 10, atol=1e-12)


def test_hydro_small_run():
    p = P.replace(T=0.02)
    g = lambda u: 0.2 + 0.6 * u  # noqa: E731
    res = hydro_compare(g, p, 1.0, [20, 40], 30, seed=3, n_bins=4, n_samples=2, N_pde=80)
    assert len(res.sup_errors) == 2 and res.ensemble_means[0].shape == (3, 4)
    assert all(e < 0.5 for e in res.sup_errors)
    again = hydro_compare(g, p, 1.0, [20, 40], 30, seed=3, n_bins=4, n_samples=2, N_pde=80)
    assert again.sup_errors == res.sup_errors


def test_hydro_rejects_small_ensembles():
    with pytest.raises(ValidationError):
        hydro_compare(0.5, P, 1.0, [20], 10)
    with pytest.raises(ValidationError):
        hydro_compare(0.5, P, 1.0, [40, 20], 30)


def test_neumann_regime_particle_drift_is_bounded():
    # the expected number of reservoir events is at most 2 kappa T n^(2 - theta)
    p = P.replace(T=0.05)
    res = hydro_compare(0.5, p, 2.0, [20, 60], 30, seed=1, n_bins=4, n_samples=2, N_pde=60)
    for n, d in zip(res.n_grid, res.count_drift):
        assert d <= 2 * p.kappa * n ** (1 - 2.0) + 1e-12


def test_periodic_reference_is_periodic():
    g = lambda u: 0.5 + 0.3 * np.cos(2 * np.pi * u)  # noqa: E731
    f = periodic_reference(g, P, 64, 10)
    mirrored = f.values[:, ::-1]
    np.testing.assert_allclose(f.values, mirrored, atol=1e-12)


def test_interface_jump_decreases_with_kappa():
    g = lambda u: 0.2 + 0.6 * u  # noqa: E731
    jumps = [interface_jump(solve(g, P, BoundaryKind.periodic_slow_bond(k), N=64, n_out=10)) for k in (0.1, 1, 10)]
    assert jumps[0] > jumps[1] > jumps[2]


def test_slow_bond_constant_profile():
    p = P.replace(T=0.02)
    sweep, hydro = slow_bond_compare(0.4, p, [1.0, 10.0], N=40, n_grid=(20,), M=30, n_out=10, n_bins=4)
    assert sweep.distances_to_neumann == [0.0, 0.0] and sweep.distances_to_dirichlet == [0.0, 0.0]
    assert sweep.manifest["grade"] == "conjecture" and hydro.manifest["grade"] == "conjecture"
    assert hydro.count_drift == [0.0]
