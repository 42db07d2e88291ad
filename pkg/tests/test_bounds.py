import math

import numpy as np
import pytest

from tailsum.archimedean import GeneratorSpec
from tailsum.bounds import bounds_tail, joint_cdf_x, joint_sf_y
from tailsum.errors import CapabilityError, DomainError
from tailsum.estimators import TailProblem
from tailsum.marginals import ParetoMarginal
from tailsum.samplers import RngStream, sample_archimedean_mn


def make(tau, alphas, mode, s=1.0, family="clayton"):
    gen = GeneratorSpec.from_tau(family, tau)
    return TailProblem(gen, [ParetoMarginal(a) for a in alphas], s, mode)


T1 = make(3 / 8, (0.9, 1.8), "copula")
T3 = make(0.5, (2.5, 2.5), "survival")


def test_joint_cdf_edges():
    assert joint_cdf_x(T1, [0.0, 0.0]) == 0.0
    assert joint_cdf_x(T1, [np.inf, 2.0]) == pytest.approx(T1.marginals[1].cdf(2.0), rel=1e-13)
    with pytest.raises(DomainError):
        joint_cdf_x(T3, [1.0, 1.0])


def test_joint_cdf_monte_carlo():
    u = sample_archimedean_mn(T1.gen, 2, RngStream(17).generator(), 1_000_000)
    x = np.column_stack([T1.marginals[i].quantile(u[:, i]) for i in range(2)])
    emp = np.mean((x[:, 0] <= 0.5) & (x[:, 1] <= 0.5))
    assert joint_cdf_x(T1, [0.5, 0.5]) == pytest.approx(emp, abs=0.002)


def test_joint_sf_edges():
    assert joint_sf_y(T3, [0.0, 0.0]) == 1.0
    assert joint_sf_y(T3, [np.inf, 1.0]) == 0.0
    assert joint_sf_y(T3, [3.0, 0.0]) == pytest.approx(T3.marginals[0].sf(3.0), rel=1e-13)
    with pytest.raises(DomainError):
        joint_sf_y(T1, [1.0, 1.0])


def test_table_examples():
    b1 = bounds_tail(T1, 20)
    assert f"{b1.lower:.5E}" == f"{b1.upper:.5E}" == "6.84165E-01"
    b3 = bounds_tail(T3.with_s(1e4), 20)
    assert (f"{b3.lower:.5E}", f"{b3.upper:.5E}") == ("5.40553E-10", "5.40554E-10")


def test_guards():
    p4 = make(0.5, (2.5,) * 4, "survival")
    with pytest.raises(CapabilityError):
        bounds_tail(p4, 2)
    with pytest.raises(CapabilityError):
        bounds_tail(make(0.5, (2.5,) * 3, "survival"), 11)
    with pytest.raises(CapabilityError):
        bounds_tail(T1, 25)
    with pytest.raises(DomainError):
        bounds_tail(T1, 0)


SCENARIOS = [
    make(3 / 8, (0.9, 1.8), "copula", 10.0),
    make(0.5, (2.5, 2.5), "survival", 10.0),
    make(0.5, (2.5, 2.5), "copula", 5.0, family="gumbel"),
    make(0.3, (1.5, 2.5), "survival", 5.0, family="gumbel"),
]
SCENARIOS3 = [
    make(1 / 6, (0.9, 1.8, 2.6), "copula", 10.0),
    make(0.5, (2.5, 2.5, 2.5), "survival", 10.0),
    make(0.5, (2.5, 2.5, 2.5), "survival", 10.0, family="gumbel"),
]


def _nested(inner, outer):
    slack = 1e-12 * max(outer.upper, 1e-300)
    return outer.lower - slack <= inner.lower <= inner.upper <= outer.upper + slack


@pytest.mark.parametrize("p", SCENARIOS, ids=lambda p: f"{p.gen.family.value}-{p.mode.value}")
def test_refinement_nested_n2(p):
    prev = bounds_tail(p, 1)
    for m in range(2, 9):
        cur = bounds_tail(p, m)
        assert _nested(cur, prev), (m, prev, cur)
        prev = cur


@pytest.mark.parametrize("p", SCENARIOS3, ids=lambda p: f"{p.gen.family.value}-{p.mode.value}")
def test_refinement_nested_n3(p):
    prev = bounds_tail(p, 1)
    for m in range(2, 7):
        cur = bounds_tail(p, m)
        assert _nested(cur, prev), (m, prev, cur)
        prev = cur


@pytest.mark.parametrize("p", SCENARIOS + SCENARIOS3, ids=lambda p: f"{p.n}-{p.mode.value}")
def test_duality(p):
    m = 4 if p.n == 2 else 2
    a = bounds_tail(p, m)
    b = bounds_tail(p, m, dual=True)
    assert a.lower == pytest.approx(b.lower, abs=1e-12)
    assert a.upper == pytest.approx(b.upper, abs=1e-12)


def _clayton_x_tail_oracle(s, delta, a1, a2):
    """``Pr(X1 + X2 > s)`` by quadrature of the conditional law of X2 given X1."""
    from scipy import integrate

    def integrand(x):
        u_d = (-np.expm1(-a1 * np.log1p(x))) ** delta
        log_v = np.log1p(-((1 + s - x) ** -a2))
        inner = np.expm1(-delta * log_v) * u_d
        return a1 * (1 + x) ** (-a1 - 1) * -np.expm1((-1 / delta - 1) * np.log1p(inner))

    pts = np.unique(np.concatenate([[0.0], s * np.logspace(-12, 0, 49), [s - 1.0, s - 1e-3]]))
    pts = pts[(pts >= 0) & (pts <= s)]
    total = math.fsum(integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
                      for a, b in zip(pts[:-1], pts[1:]))
    return (1 + s) ** -a1 + total


@pytest.mark.parametrize("s", [1.0, 1e2, 1e4, 1e6])
def test_table1_bounds_bracket_quadrature(s):
    p = T1.with_s(s)
    b = bounds_tail(p, 20)
    z = _clayton_x_tail_oracle(s, 1 / p.gen.param, 0.9, 1.8)
    assert b.lower * (1 - 1e-9) <= z <= b.upper * (1 + 1e-9)
