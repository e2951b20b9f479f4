import numpy as np
import pytest

from pmmlab.errors import StabilityError, ValidationError
from pmmlab.lattice import ModelParams
from pmmlab.pde import (
    BoundaryKind,
    SpaceTimeField,
    dirichlet_steady_state,
    dirichlet_trace_defect,
    heat_neumann_cosine,
    l2_spacetime_distance,
    mass_balance_defect,
    solve,
    stable_dt,
    weak_form_residual,
)
from pmmlab.testfunctions import TestFunction, generic_test_functions, tensor_dictionary

P = ModelParams(m=2, alpha=0.2, beta=0.8, T=0.05)
G0 = lambda u: 0.5 + 0.2 * np.cos(np.pi * u)  # noqa: E731


def test_boundary_kind_validation():
    with pytest.raises(ValidationError):
        BoundaryKind.robin(0.0)
    with pytest.raises(ValidationError):
        BoundaryKind("neumann", 1.0)
    with pytest.raises(ValidationError):
        BoundaryKind("wall")
    assert BoundaryKind.parse("periodic", 2.0) == BoundaryKind.periodic_slow_bond(2.0)


def test_cfl_abort():
    with pytest.raises(StabilityError):
        solve(G0, P, BoundaryKind.neumann(), cfl=2.0)


def test_initial_profile_validated():
    with pytest.raises(ValidationError):
        solve(lambda u: 1.5 + 0 * u, P, BoundaryKind.neumann())


@pytest.mark.parametrize("bc", [BoundaryKind.robin(5.0), BoundaryKind.dirichlet(), BoundaryKind.periodic_slow_bond(3.0)])
def test_stable_dt_respects_every_guard(bc):
    dt = stable_dt(100, 2, bc, 0.4)
    assert dt <= 0.4 * 1e-4 / 4 + 1e-18


@pytest.mark.parametrize(
    "bc", [BoundaryKind.robin(1.0), BoundaryKind.neumann(), BoundaryKind.dirichlet(), BoundaryKind.periodic_slow_bond(1.0)]
)
def test_states_stay_in_unit_interval(bc):
    f = solve(lambda u: (u > 0.5).astype(float), P.replace(m=3), bc, N=100)
    assert f.values.min() >= 0.0 and f.values.max() <= 1.0


def test_neumann_and_periodic_conserve_mass():
    for bc in (BoundaryKind.neumann(), BoundaryKind.periodic_slow_bond(2.0)):
        mass = solve(G0, P, bc, N=100).mass()
        assert np.abs(mass - mass[0]).max() < 1e-12


def test_robin_mass_balance():
    f = solve(G0, P, BoundaryKind.robin(3.0), N=100)
    assert mass_balance_defect(f) < 1e-12


def test_heat_equation_fourier():
    p = ModelParams(m=1, T=0.05)
    f = solve(lambda u: heat_neumann_cosine(0.0, u), p, BoundaryKind.neumann(), N=100, n_out=10)
    exact = heat_neumann_cosine(f.times[:, None], f.centers[None, :])
    du = f.du
    assert np.abs(f.values - exact).max() <= 5 * (du**2 + f.dt)


def test_dirichlet_steady_state():
    p = ModelParams(m=2, alpha=0.2, beta=0.8, T=2.0)
    f = solve(0.5, p, BoundaryKind.dirichlet(), N=50, n_out=4)
    target = dirichlet_steady_state(f.centers, 2, 0.2, 0.8)
    assert np.abs(f.values[-1] - target).max() < 2 / 50


def test_output_grid_and_dt():
    f = solve(G0, P, BoundaryKind.robin(1.0), N=64, n_out=10)
    assert f.times.size == 11 and f.times[-1] == pytest.approx(P.T)
    assert f.dt <= stable_dt(64, 2, BoundaryKind.robin(1.0), 0.4)
    assert f.meta["steps"] * f.dt == pytest.approx(P.T)


def test_warmup_starts_from_evolved_state():
    a = solve(G0, P, BoundaryKind.robin(1.0), N=64, n_out=5, T=0.02)
    b = solve(G0, P, BoundaryKind.robin(1.0), N=64, n_out=5, warmup=0.02)
    np.testing.assert_array_equal(b.values[0], a.values[-1])
    with pytest.raises(ValidationError):
        solve(G0, P, BoundaryKind.robin(1.0), warmup=-1.0)


def test_exact_solution_has_tiny_weak_residual():
    # rho = 0.5 + 0.4 exp(-pi^2 t) cos(pi u) solves the heat equation with no-flux ends
    times = np.linspace(0, 0.05, 401)
    f = SpaceTimeField.from_function(heat_neumann_cosine, 400, times, m=1)
    for G in tensor_dictionary(2, 1, 0.05):
        assert weak_form_residual(f, G) < 1e-5


def test_weak_residual_detects_wrong_solution():
    times = np.linspace(0, 0.05, 201)
    f = SpaceTimeField.from_function(lambda t, u: 0.5 + 0.4 * np.cos(np.pi * u) + 0 * t, 200, times, m=1)
    G = TestFunction.basis("cos", 1)
    assert weak_form_residual(f, G) > 1e-2


def test_dirichlet_needs_vanishing_test_function():
    f = solve(G0, P, BoundaryKind.dirichlet(), N=32, n_out=4)
    with pytest.raises(ValidationError):
        weak_form_residual(f, TestFunction.basis("cos", 1))
    assert weak_form_residual(f, TestFunction.basis("sin", 1)) < 1e-2


def test_weak_residual_time_argument():
    f = solve(G0, P, BoundaryKind.robin(1.0), N=64, n_out=10)
    G = generic_test_functions(P.T)[0]
    assert weak_form_residual(f, G, t=0.0) == 0.0
    with pytest.raises(ValidationError):
        weak_form_residual(f, G, t=0.0123)


def test_l2_distance_properties():
    a = solve(G0, P, BoundaryKind.robin(1.0), N=64, n_out=10)
    b = solve(G0, P, BoundaryKind.neumann(), N=64, n_out=10)
    assert l2_spacetime_distance(a, a) == 0.0
    assert l2_spacetime_distance(a, b) == pytest.approx(l2_spacetime_distance(b, a))
    c = solve(G0, P, BoundaryKind.neumann(), N=32, n_out=10)
    with pytest.raises(ValidationError):
        l2_spacetime_distance(a, c)


def test_trace_defect_sources():
    f = solve(G0, P, BoundaryKind.dirichlet(), N=64, n_out=10)
    assert dirichlet_trace_defect(f, source="traces") == 0.0
    assert dirichlet_trace_defect(f, source="cells") > 0.0
    with pytest.raises(ValidationError):
        dirichlet_trace_defect(f, source="edges")


def test_checksum_is_deterministic():
    a = solve(G0, P, BoundaryKind.robin(1.0), N=64, n_out=10)
    b = solve(G0, P, BoundaryKind.robin(1.0), N=64, n_out=10)
    assert a.checksum() == b.checksum()


def test_test_function_derivatives():
    H = TestFunction.basis("pow", 3, (1.0, 2.0)) + TestFunction.basis("sin", 2, (0.5,))
    t, u, h = 0.3, 0.4, 1e-6
    assert H.du(t, u) == pytest.approx((H(t, u + h) - H(t, u - h)) / (2 * h), rel=1e-6)
    assert H.dt(t, u) == pytest.approx((H(t + h, u) - H(t - h, u)) / (2 * h), rel=1e-6)
    assert H.duu(t, u) == pytest.approx((H(t, u + h) - 2 * H(t, u) + H(t, u - h)) / h**2, rel=1e-4)
    assert TestFunction.basis("sin", 3).vanishes_at_boundary
    assert not TestFunction.basis("cos", 1).vanishes_at_boundary
    assert all(G.vanishes_at_boundary for G in generic_test_functions(1.0, vanishing=True))
