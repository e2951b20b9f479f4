import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmmlab.errors import ValidationError
from pmmlab.lattice import (
    Configuration,
    ModelParams,
    boundary_rate,
    current,
    p_poly,
    pmm_rate,
    ssep_rate,
    tau_h,
    tau_h_boundary,
)


def config(sites, **kw):
    p = ModelParams(n=len(sites) + 1, **kw)
    return Configuration.from_sites(p, sites)


@st.composite
def configurations(draw, max_n=12):
    m = draw(st.integers(1, 4))
    n = draw(st.integers(3, max_n))
    alpha = draw(st.floats(0.01, 0.99))
    beta = draw(st.floats(0.01, 0.99))
    bits = draw(st.lists(st.integers(0, 1), min_size=n - 1, max_size=n - 1))
    return Configuration.from_sites(ModelParams(m=m, n=n, alpha=alpha, beta=beta), bits)


def test_defaults():
    p = ModelParams()
    assert (p.m, p.n, p.kappa, p.theta, p.a) == (2, 100, 1.0, 1.0, 1.5)
    assert p.ssep_weight == pytest.approx(100 ** -0.5)
    assert p.boundary_intensity == pytest.approx(0.01)


@pytest.mark.parametrize(
    "field,value,needle",
    [("alpha", 1.2, "alpha"), ("beta", 0.0, "beta"), ("kappa", -1.0, "kappa"), ("a", 2.5, "a="), ("m", 0, "m")],
)
def test_parameter_validation_names_field(field, value, needle):
    with pytest.raises(ValidationError, match=needle):
        ModelParams(**{field: value})


def test_alpha_message_mentions_interval():
    with pytest.raises(ValidationError, match=r"\(0, 1\)"):
        ModelParams(alpha=1.2)


def test_reservoir_convention():
    eta = config([1, 0, 1], alpha=0.3, beta=0.7)
    assert eta(0) == 0.3 and eta(-5) == 0.3
    assert eta(4) == 0.7 and eta(9) == 0.7
    assert [eta(x) for x in (1, 2, 3)] == [1.0, 0.0, 1.0]


def test_torus_wraps():
    p = ModelParams(n=4)
    eta = Configuration(np.array([1, 0, 0, 1]), p, torus=True)
    assert eta(-1) == 1.0 and eta(4) == 1.0 and eta(5) == 0.0


def test_pmm_rate_m2_bulk():
    # m = 2: c = eta(x-1) + eta(x+2)
    eta = config([1, 1, 0, 1, 0, 0], m=2)
    assert pmm_rate(eta, 2) == 1.0 + 1.0
    assert pmm_rate(eta, 3) == 1.0 + 0.0


def test_pmm_rate_m1_is_one():
    eta = config([0, 1, 0, 1], m=1)
    assert all(pmm_rate(eta, x) == 1.0 for x in range(1, 4))


def test_pmm_rate_uses_reservoir_values():
    eta = config([0, 0, 0, 0], m=2, alpha=0.25, beta=0.6)
    assert pmm_rate(eta, 1) == pytest.approx(0.25)
    assert pmm_rate(eta, 3) == pytest.approx(0.6)


def test_pmm_rate_m3_windows():
    # windows {x-2, x-1}, {x-1, x+2}, {x+2, x+3}
    eta = config([1, 1, 0, 0, 1, 1, 0], m=3)
    x = 3
    expected = eta(1) * eta(2) + eta(2) * eta(5) + eta(5) * eta(6)
    assert pmm_rate(eta, x) == expected == 1.0 + 1.0 + 1.0


def test_ssep_rate():
    eta = config([1, 0, 1])
    assert ssep_rate(eta, 1, 2) == 1.0
    assert ssep_rate(eta, 2, 1) == 0.0
    assert ssep_rate(eta, 1, 3) == 0.0


def test_boundary_rate_glauber():
    eta = config([0, 1, 1], alpha=0.3, beta=0.9)
    assert boundary_rate(eta, 1, 0.3) == pytest.approx(0.3)
    assert boundary_rate(eta, 3, 0.9) == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        boundary_rate(eta, 2, 0.3)


def test_p_poly_values():
    assert p_poly(0.5, 0.5, 3) == pytest.approx(3 * 0.25)
    assert p_poly(0.3, 0.9, 1) == 1.0


@given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 6))
def test_p_poly_factorisation(gamma, rho, m):
    assert (gamma - rho) * p_poly(gamma, rho, m) == pytest.approx(gamma**m - rho**m, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(configurations(), st.booleans())
def test_current_is_gradient_of_constraint(eta, with_ssep):
    """tau_x h - tau_{x+1} h equals (c + weight) (eta(x) - eta(x+1)) on every bond."""
    w = eta.params.ssep_weight if with_ssep else 0.0
    for x in range(1, eta.n - 1):
        expected = (pmm_rate(eta, x) + w) * (eta(x) - eta(x + 1))
        assert current(eta, x, with_ssep) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(configurations(), st.booleans())
def test_boundary_closed_form_matches(eta, with_ssep):
    assert tau_h_boundary(eta, "left", with_ssep) == pytest.approx(tau_h(eta, 1, with_ssep), abs=1e-12)
    assert tau_h_boundary(eta, "right", with_ssep) == pytest.approx(tau_h(eta, eta.n - 1, with_ssep), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(configurations())
def test_rates_are_bounded(eta):
    for x in range(1, eta.n - 1):
        assert 0.0 <= pmm_rate(eta, x) <= eta.params.m


def test_exchange_and_flip():
    eta = config([1, 0, 0])
    assert list(eta.exchange(1, 2).occupancy) == [0, 1, 0]
    assert list(eta.flip(3).occupancy) == [1, 0, 1]
    assert eta.particle_count() == 1
    with pytest.raises(ValidationError):
        eta.flip(0)


def test_configuration_rejects_bad_shape():
    with pytest.raises(ValidationError):
        Configuration(np.array([1, 0]), ModelParams(n=5))
    with pytest.raises(ValidationError):
        Configuration(np.array([2, 0, 0, 0]), ModelParams(n=5))


def test_bond_out_of_range():
    eta = config([0, 1, 0, 1])
    with pytest.raises(ValidationError):
        pmm_rate(eta, 4)
