"""Archimedean generators and the closed-form quantities derived from them.

Two families are supported, both parametrised so that ``phi(0) = 1``:

* Clayton, ``phi(t) = (1 + t/theta)**(-theta)`` with ``theta > 0``;
* Gumbel, ``phi(t) = exp(-t**b)`` with ``b in (0, 1)``.

Everything that can overflow is evaluated in log space.  Methods on
:class:`GeneratorSpec` are the unchecked vectorised kernels used by the
samplers and estimators; the module-level functions validate their
arguments and are the public entry points.
"""

from __future__ import annotations

import enum
import itertools
import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import CapabilityError, DomainError, NumericalError

__all__ = [
    "Family",
    "GeneratorSpec",
    "RadialCdf",
    "KendallConditional",
    "phi",
    "phi_inverse",
    "phi_deriv",
    "copula_cdf",
    "survival_copula_prob",
    "copula_union_prob",
    "radial_cdf_eval",
    "radial_sf_eval",
    "kendall_cond_cdf",
    "kendall_cond_u_step",
    "tau_to_param",
    "param_to_tau",
]

MAX_INCLUSION_EXCLUSION_DIM = 20


class Family(str, enum.Enum):
    CLAYTON = "clayton"
    GUMBEL = "gumbel"


def _logsumexp(terms):
    a = np.stack(np.broadcast_arrays(*terms))
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        top = a.max(axis=0)
        shift = np.where(np.isfinite(top), top, 0.0)
        out = shift + np.log(np.exp(a - shift).sum(axis=0))
    return np.where(top == -np.inf, -np.inf, out)


def _gumbel_coefficients(b):
    # t**k * phi^(k)(t) = exp(-y) * sum_l c[k][l] * y**l  with  y = t**b
    return (
        (1.0,),
        (0.0, -b),
        (0.0, -b * (b - 1), b * b),
        (0.0, -b * (b - 1) * (b - 2), 3 * b * b * (b - 1), -(b**3)),
        (
            0.0,
            -b * (b - 1) * (b - 2) * (b - 3),
            b * b * (b - 1) * (7 * b - 11),
            -6 * b**3 * (b - 1),
            b**4,
        ),
    )


@dataclass(frozen=True)
class GeneratorSpec:
    """An Archimedean generator: family plus its parameter."""

    family: Family
    param: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        p = float(self.param)
        object.__setattr__(self, "param", p)
        if self.family is Family.CLAYTON and not p > 0:
            raise DomainError(f"Clayton theta must be positive, got {p}")
        if self.family is Family.GUMBEL and not 0 < p < 1:
            raise DomainError(f"Gumbel b must lie in (0, 1), got {p}")

    @classmethod
    def from_tau(cls, family, tau):
        return cls(Family(family), tau_to_param(family, tau))

    @property
    def max_order(self) -> int:
        return sys.maxsize if self.family is Family.CLAYTON else 4

    @property
    def tau(self) -> float:
        return param_to_tau(self.family, self.param)

    # -- generator and inverses -------------------------------------------------

    def log_phi(self, t):
        t = np.asarray(t, dtype=float)
        if self.family is Family.CLAYTON:
            th = self.param
            return -th * np.log1p(t / th)
        with np.errstate(divide="ignore"):
            return -(t**self.param)

    def phi(self, t):
        return np.exp(self.log_phi(t))

    def phi_inverse_log(self, log_u):
        """Inverse generator evaluated at ``exp(log_u)``."""
        log_u = np.asarray(log_u, dtype=float)
        with np.errstate(over="ignore"):
            if self.family is Family.CLAYTON:
                th = self.param
                return th * np.expm1(-log_u / th)
            return (-log_u) ** (1.0 / self.param)

    def phi_inverse(self, u):
        with np.errstate(divide="ignore"):
            return self.phi_inverse_log(np.log(np.asarray(u, dtype=float)))

    def phi_inverse_1m(self, q):
        """Inverse generator evaluated at ``1 - q``, accurate for small ``q``."""
        with np.errstate(divide="ignore"):
            return self.phi_inverse_log(np.log1p(-np.asarray(q, dtype=float)))

    # -- derivatives ------------------------------------------------------------

    def _clayton_log_const(self, k):
        return sum(math.log1p(j / self.param) for j in range(1, k))

    def log_abs_deriv(self, k, t):
        """``log |phi^(k)(t)|``."""
        t = np.asarray(t, dtype=float)
        if k == 0:
            return self.log_phi(t)
        if self.family is Family.CLAYTON:
            th = self.param
            return self._clayton_log_const(k) - (th + k) * np.log1p(t / th)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.log_scaled_deriv(k, t) - k * np.log(t)
        return np.where(t == np.inf, -np.inf, out)

    def log_scaled_deriv(self, k, x):
        """``log(x**k * |phi^(k)(x)|)``, finite-friendly at 0 and infinity."""
        x = np.asarray(x, dtype=float)
        if k == 0:
            return self.log_phi(x)
        if k > self.max_order:
            raise CapabilityError(
                f"{self.family.value} derivatives are available up to order "
                f"{self.max_order}, requested {k}"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family is Family.CLAYTON:
                th = self.param
                out = self._clayton_log_const(k) + k * np.log(x) - (th + k) * np.log1p(x / th)
            else:
                b = self.param
                coeffs = _gumbel_coefficients(b)[k]
                log_y = b * np.log(x)
                terms = [
                    math.log(abs(c)) + l * log_y for l, c in enumerate(coeffs) if c != 0.0
                ]
                out = -np.exp(log_y) + _logsumexp(terms)
        return np.where(x == np.inf, -np.inf, out)

    def deriv(self, k, t):
        return (-1.0) ** k * np.exp(self.log_abs_deriv(k, t))


# -- checked public operations ---------------------------------------------------


def _scalar_or_array(x):
    return x[()] if isinstance(x, np.ndarray) and x.ndim == 0 else x


def phi(gen: GeneratorSpec, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("generator argument must be non-negative")
    return _scalar_or_array(gen.phi(t))


def phi_inverse(gen: GeneratorSpec, u):
    """Inverse generator; ``u = 0`` maps to ``+inf``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > 1) or np.any(np.isnan(u)):
        raise DomainError("inverse generator argument must lie in [0, 1]")
    return _scalar_or_array(gen.phi_inverse(u))


def phi_deriv(gen: GeneratorSpec, k: int, t):
    if k < 0:
        raise DomainError("derivative order must be non-negative")
    if k > gen.max_order:
        raise CapabilityError(
            f"{gen.family.value} derivatives are available up to order {gen.max_order}"
        )
    t = np.asarray(t, dtype=float)
    if k == 0:
        return phi(gen, t)
    if np.any(t <= 0):
        raise DomainError("derivatives are evaluated at t > 0")
    return _scalar_or_array(gen.deriv(k, t))


def _check_unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > 1) or np.any(np.isnan(u)):
        raise DomainError("copula arguments must lie in [0, 1]")
    return u


def copula_cdf(gen: GeneratorSpec, u):
    """``C(u) = phi(sum_i phi^{-1}(u_i))`` over the last axis of ``u``."""
    u = _check_unit(u)
    out = gen.phi(gen.phi_inverse(u).sum(axis=-1))
    return _scalar_or_array(np.clip(out, 0.0, 1.0))


def _subset_terms(gen, u):
    n = u.shape[-1]
    if n > MAX_INCLUSION_EXCLUSION_DIM:
        raise CapabilityError(
            f"inclusion-exclusion is limited to n <= {MAX_INCLUSION_EXCLUSION_DIM}"
        )
    e = gen.phi_inverse(u)
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            yield size, gen.phi(e[..., list(subset)].sum(axis=-1))


def survival_copula_prob(gen: GeneratorSpec, u):
    """``Pr(U_1 > u_1, ..., U_n > u_n)`` by inclusion-exclusion."""
    u = _check_unit(u)
    terms = [np.ones(u.shape[:-1])]
    terms += [(-1.0) ** size * val for size, val in _subset_terms(gen, u)]
    out = _compensated_sum(terms)
    return _scalar_or_array(np.clip(out, 0.0, 1.0))


def copula_union_prob(gen: GeneratorSpec, u):
    """``Pr(U_i <= u_i for some i) = 1 - survival_copula_prob(u)``.

    Summed directly so that small probabilities keep their relative accuracy.
    """
    u = _check_unit(u)
    terms = [(-1.0) ** (size + 1) * val for size, val in _subset_terms(gen, u)]
    out = _compensated_sum(terms)
    return _scalar_or_array(np.clip(out, 0.0, 1.0))


def _compensated_sum(terms):
    stacked = np.stack(np.broadcast_arrays(*terms), axis=-1)
    if stacked.ndim == 1:
        return np.asarray(math.fsum(stacked))
    flat = stacked.reshape(-1, stacked.shape[-1])
    return np.array([math.fsum(row) for row in flat]).reshape(stacked.shape[:-1])


# -- radial part of the l1-norm symmetric representation ------------------------


@dataclass(frozen=True)
class RadialCdf:
    """Distribution of ``R`` in ``(phi^{-1}(U_i)) = R * W``."""

    generator: GeneratorSpec
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("dimension must be at least 1")
        if self.dim - 1 > self.generator.max_order:
            raise CapabilityError(
                f"dimension {self.dim} needs generator derivatives of order {self.dim - 1}"
            )

    def log_sf(self, x):
        # every term (-1)^j x^j phi^(j)(x) / j! is non-negative
        x = np.asarray(x, dtype=float)
        terms = [self.generator.log_scaled_deriv(j, x) - gammaln(j + 1) for j in range(self.dim)]
        return _logsumexp(terms)

    def sf(self, x):
        return np.clip(np.exp(self.log_sf(x)), 0.0, 1.0)

    def cdf(self, x):
        return np.clip(1.0 - self.sf(x), 0.0, 1.0)

    def interval_prob(self, lo, hi):
        """``Pr(lo <= R < hi)``, zero where the interval is empty."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        out = self.sf(lo) - self.sf(hi)
        return np.where(hi > lo, np.maximum(out, 0.0), 0.0)


def radial_cdf_eval(rc: RadialCdf, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("radial CDF argument must be non-negative")
    return _scalar_or_array(rc.cdf(x))


def radial_sf_eval(rc: RadialCdf, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("radial survival argument must be non-negative")
    return _scalar_or_array(rc.sf(x))


# -- Kendall distribution conditional on the first coordinate --------------------


@dataclass(frozen=True)
class KendallConditional:
    """Law of ``Z = C(U)`` given ``U_1``.

    Internally parametrised by ``t1 = phi^{-1}(u1)`` and the excess
    ``d = phi^{-1}(z) - t1 >= 0``; in those coordinates the CDF is a sum of
    non-negative terms, decreasing in ``d`` from 1 to 0.
    """

    generator: GeneratorSpec
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError("dimension must be at least 2")
        if self.dim - 1 > self.generator.max_order:
            raise CapabilityError(
                f"dimension {self.dim} needs generator derivatives of order {self.dim - 1}"
            )

    def excess_cdf(self, d, t1):
        """``F_{Z|U1}(phi(t1 + d) | phi(t1))``."""
        g = self.generator
        d = np.asarray(d, dtype=float)
        t1 = np.asarray(t1, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_d = np.log(d)
            t = t1 + d
            base = g.log_abs_deriv(1, t1)
            terms = []
            for j in range(self.dim - 1):
                lead = 0.0 if j == 0 else np.where(d == 0, -np.inf, j * log_d)
                terms.append(lead - gammaln(j + 1) + g.log_abs_deriv(j + 1, t) - base)
            out = np.exp(_logsumexp(terms))
        out = np.where(d == np.inf, 0.0, out)
        return np.clip(out, 0.0, 1.0)

    def cdf(self, z, u1):
        z = np.asarray(z, dtype=float)
        u1 = np.asarray(u1, dtype=float)
        g = self.generator
        inside = (z > 0) & (z < u1)
        zz = np.where(inside, z, 0.5 * u1)
        t1 = g.phi_inverse(u1)
        d = np.maximum(g.phi_inverse(zz) - t1, 0.0)
        val = self.excess_cdf(d, t1)
        return np.where(z >= u1, 1.0, np.where(z <= 0, 0.0, val))


def kendall_cond_cdf(kc: KendallConditional, z, u1):
    u1 = np.asarray(u1, dtype=float)
    if np.any(u1 <= 0) or np.any(u1 > 1):
        raise DomainError("conditioning value u1 must lie in (0, 1]")
    return _scalar_or_array(kc.cdf(z, u1))


def kendall_cond_u_step(gen: GeneratorSpec, n: int, j: int, v, z_inv, partial_sum):
    """Draw ``u_j`` given ``Z`` and ``u_1..u_{j-1}`` from a uniform ``v``.

    For ``j = n`` the coordinate is fixed by the others and ``v`` is ignored.
    """
    if not 2 <= j <= n:
        raise DomainError(f"step index must satisfy 2 <= j <= n, got j={j}, n={n}")
    z_inv = np.asarray(z_inv, dtype=float)
    partial_sum = np.asarray(partial_sum, dtype=float)
    rem = z_inv - partial_sum
    if np.any(rem < 0):
        raise NumericalError("partial sum of inverse-generator values exceeds phi^{-1}(z)")
    if j == n:
        return _scalar_or_array(gen.phi(rem))
    v = np.asarray(v, dtype=float)
    frac = -np.expm1(np.log(v) / (n - j))
    return _scalar_or_array(gen.phi(frac * rem))


def tau_to_param(family, tau: float) -> float:
    family = Family(family)
    if not 0 < tau < 1:
        raise DomainError(f"Kendall's tau must lie in (0, 1), got {tau}")
    if family is Family.CLAYTON:
        return (1.0 - tau) / (2.0 * tau)
    return 1.0 - tau


def param_to_tau(family, param: float) -> float:
    family = Family(family)
    if family is Family.CLAYTON:
        return 1.0 / (2.0 * param + 1.0)
    return 1.0 - param
