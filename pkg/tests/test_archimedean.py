import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from conftest import clayton_cdf, clayton_density
from tailsum.archimedean import (
    Family,
    GeneratorSpec,
    KendallConditional,
    RadialCdf,
    copula_cdf,
    copula_union_prob,
    kendall_cond_cdf,
    kendall_cond_u_step,
    param_to_tau,
    phi,
    phi_deriv,
    phi_inverse,
    radial_cdf_eval,
    radial_sf_eval,
    survival_copula_prob,
    tau_to_param,
)
from tailsum.errors import CapabilityError, DomainError, NumericalError

TAUS = (0.1, 0.5, 0.9)
GENERATORS = [GeneratorSpec.from_tau(f, t) for f in ("clayton", "gumbel") for t in TAUS]
T_GRID = np.logspace(-3, 3, 25)


def gen_id(g):
    return f"{g.family.value}-{g.tau:.1f}"


# -- closed-form examples ---------------------------------------------------------------


def test_clayton_half_examples():
    g = GeneratorSpec(Family.CLAYTON, 0.5)
    assert phi(g, 4.0) == pytest.approx(1 / 3, rel=1e-14)
    assert phi_deriv(g, 2, 4.0) == pytest.approx(3 / 243, rel=1e-13)
    assert phi_inverse(g, 1 / 3) == pytest.approx(4.0, rel=1e-13)
    assert phi_inverse(g, 0.0) == math.inf


def test_gumbel_examples():
    g = GeneratorSpec(Family.GUMBEL, 0.5)
    assert phi(g, 4.0) == pytest.approx(math.exp(-2.0), rel=1e-14)
    # phi'(t) = -b t^(b-1) exp(-t^b)
    assert phi_deriv(g, 1, 4.0) == pytest.approx(-0.5 * 4**-0.5 * math.exp(-2), rel=1e-13)


@pytest.mark.parametrize(
    "family,tau,expected",
    [("clayton", 0.5, 0.5), ("clayton", 3 / 8, 5 / 6), ("clayton", 1 / 6, 2.5), ("gumbel", 0.9, 0.1)],
)
def test_tau_to_param(family, tau, expected):
    assert tau_to_param(family, tau) == pytest.approx(expected, rel=1e-14)
    assert param_to_tau(family, expected) == pytest.approx(tau, rel=1e-14)


@pytest.mark.parametrize("tau", [0.0, 1.0, -0.1, 1.5])
def test_tau_out_of_range(tau):
    with pytest.raises(DomainError):
        tau_to_param("clayton", tau)


def test_invalid_parameters():
    with pytest.raises(DomainError):
        GeneratorSpec(Family.CLAYTON, 0.0)
    with pytest.raises(DomainError):
        GeneratorSpec(Family.GUMBEL, 1.0)
    g = GeneratorSpec(Family.CLAYTON, 1.0)
    with pytest.raises(DomainError):
        phi(g, -1.0)
    with pytest.raises(DomainError):
        phi_inverse(g, 1.5)
    with pytest.raises(DomainError):
        phi_deriv(g, 1, 0.0)


def test_gumbel_order_limit():
    g = GeneratorSpec(Family.GUMBEL, 0.5)
    with pytest.raises(CapabilityError):
        phi_deriv(g, 5, 1.0)
    with pytest.raises(CapabilityError):
        RadialCdf(g, 6)
    RadialCdf(g, 5)


# -- derivative properties ----------------------------------------------------------------


@pytest.mark.parametrize("g", GENERATORS, ids=gen_id)
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_derivative_matches_central_difference(g, k):
    # differentiate the order k-1 derivative numerically; order 0 is phi itself
    h = 1e-5 * T_GRID
    fd = (phi_deriv(g, k - 1, T_GRID + h) - phi_deriv(g, k - 1, T_GRID - h)) / (2 * h)
    exact = phi_deriv(g, k, T_GRID)
    ok = np.isclose(fd, exact, rtol=1e-5, atol=0) | (np.abs(exact) < 1e-300)
    assert ok.all()


@pytest.mark.parametrize("g", GENERATORS, ids=gen_id)
def test_n_monotone_signs(g):
    for k in range(0, 5):
        assert np.all((-1) ** k * phi_deriv(g, k, T_GRID) >= 0)


@pytest.mark.parametrize("g", GENERATORS, ids=gen_id)
def test_round_trip(g):
    u = np.logspace(-12, 0, 200)[:-1]
    back = phi(g, phi_inverse(g, u))
    assert np.all(np.abs(back - u) <= 1e-10)


@given(st.floats(1e-300, 1.0), st.sampled_from(GENERATORS))
def test_round_trip_relative(u, g):
    assert g.phi(g.phi_inverse(u)) == pytest.approx(u, rel=1e-9)


# -- copula functions ---------------------------------------------------------------------


@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.sampled_from(GENERATORS))
def test_survival_identity_bivariate(u1, u2, g):
    c = copula_cdf(g, [u1, u2])
    assert survival_copula_prob(g, [u1, u2]) == pytest.approx(1 - u1 - u2 + c, abs=1e-12)
    assert copula_union_prob(g, [u1, u2]) == pytest.approx(u1 + u2 - c, abs=1e-12)


def test_copula_matches_clayton_closed_form():
    g = GeneratorSpec(Family.CLAYTON, 0.5)
    assert copula_cdf(g, [0.3, 0.7]) == pytest.approx(clayton_cdf(0.3, 0.7, 0.5), rel=1e-13)


def test_copula_margins_and_frechet_bounds():
    g = GeneratorSpec(Family.GUMBEL, 0.3)
    assert copula_cdf(g, [0.4, 1.0]) == pytest.approx(0.4, rel=1e-13)
    c = copula_cdf(g, [0.4, 0.6])
    assert max(0.0, 0.4 + 0.6 - 1) <= c <= 0.4


# -- radial distribution -----------------------------------------------------------------


def test_radial_cdf_closed_form():
    # n = 2, theta = 1/2: F_R(1) = 1 - phi(1) - |phi'(1)|
    rc = RadialCdf(GeneratorSpec(Family.CLAYTON, 0.5), 2)
    assert radial_cdf_eval(rc, 1.0) == pytest.approx(1 - 3**-0.5 - 3**-1.5, rel=1e-13)
    assert radial_cdf_eval(rc, 0.0) == 0.0
    assert radial_sf_eval(rc, np.inf) == 0.0


def test_radial_dimension_one_is_generator():
    g = GeneratorSpec(Family.GUMBEL, 0.4)
    rc = RadialCdf(g, 1)
    assert np.allclose(rc.sf(T_GRID), g.phi(T_GRID), rtol=1e-14)


@pytest.mark.parametrize("g", GENERATORS, ids=gen_id)
@pytest.mark.parametrize("n", [2, 3, 5])
def test_radial_cdf_monotone(g, n):
    x = np.logspace(-4, 6, 400)
    f = radial_cdf_eval(RadialCdf(g, n), x)
    # F_R = 1 - sf carries rounding of order eps where sf is close to 1
    assert np.all(np.diff(f) >= -4 * np.finfo(float).eps)
    assert np.all(np.diff(radial_sf_eval(RadialCdf(g, n), x)[x > 1]) <= 0)
    assert np.all((f >= 0) & (f <= 1))


@pytest.mark.parametrize("g", GENERATORS, ids=gen_id)
@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("a", [0.1, 0.5, 0.9])
def test_generator_dominates_radial_tail(g, n, a):
    rc = RadialCdf(g, n)
    lhs = g.phi(a * T_GRID) / (1 - a) ** (n - 1)
    assert np.all(lhs >= rc.sf(T_GRID) * (1 - 1e-12))


# -- Kendall conditional ------------------------------------------------------------------


def _kendall_oracle(u1, z, theta):
    # F(z | u1) = Pr(U2 <= v*), with C(u1, v*) = z, from the copula density
    d = 1 / theta
    v_star = (z**-d - u1**-d + 1) ** (-1 / d)
    val, _ = integrate.quad(lambda v: clayton_density(u1, v, theta), 0, v_star, epsabs=1e-13)
    return val


@pytest.mark.parametrize("u1,z", [(0.8, 0.4), (0.5, 0.1), (0.99, 0.9), (0.2, 0.19)])
def test_kendall_conditional_quadrature(u1, z):
    kc = KendallConditional(GeneratorSpec(Family.CLAYTON, 0.5), 2)
    got = kendall_cond_cdf(kc, z, u1)
    assert 0 < got < 1
    assert got == pytest.approx(_kendall_oracle(u1, z, 0.5), rel=1e-7)


def test_kendall_conditional_edges():
    kc = KendallConditional(GeneratorSpec(Family.CLAYTON, 0.5), 3)
    assert kendall_cond_cdf(kc, 0.8, 0.8) == 1.0
    assert kendall_cond_cdf(kc, 0.0, 0.8) == 0.0
    assert kendall_cond_cdf(kc, 0.8 - 1e-12, 0.8) == pytest.approx(1.0, abs=1e-6)
    assert kendall_cond_cdf(kc, 1e-12, 0.8) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(DomainError):
        kendall_cond_cdf(kc, 0.5, 0.0)


@pytest.mark.parametrize("g", GENERATORS, ids=gen_id)
@pytest.mark.parametrize("n", [2, 3, 5])
def test_kendall_conditional_monotone(g, n):
    kc = KendallConditional(g, n)
    z = np.linspace(1e-6, 0.7 - 1e-6, 300)
    f = kc.cdf(z, 0.7)
    assert np.all(np.diff(f) >= -1e-14)


def test_kendall_conditional_trivariate_mc():
    # Pr(C(U) <= z | U1 in a thin band) from radial draws
    g = GeneratorSpec(Family.CLAYTON, 1.0)
    from tailsum.samplers import RngStream, sample_archimedean_mn

    u = sample_archimedean_mn(g, 3, RngStream(5).generator(), 400_000)
    band = np.abs(u[:, 0] - 0.6) < 0.01
    z = copula_cdf(g, u[band])
    kc = KendallConditional(g, 3)
    for zq in (0.1, 0.3, 0.5):
        assert np.mean(z <= zq) == pytest.approx(float(kc.cdf(zq, 0.6)), abs=0.03)


def test_u_step_examples():
    g = GeneratorSpec(Family.CLAYTON, 0.5)
    assert kendall_cond_u_step(g, 3, 2, 1 - 1e-15, 2.0, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert kendall_cond_u_step(g, 3, 2, 1e-300, 2.0, 0.5) == pytest.approx(g.phi(1.5), rel=1e-12)
    for v in (0.1, 0.9):
        assert kendall_cond_u_step(g, 3, 3, v, 2.0, 0.5) == pytest.approx(g.phi(1.5), rel=1e-14)
    with pytest.raises(NumericalError):
        kendall_cond_u_step(g, 3, 2, 0.5, 1.0, 2.0)
    with pytest.raises(DomainError):
        kendall_cond_u_step(g, 3, 1, 0.5, 1.0, 0.0)
