"""Deterministic brackets of ``Pr(S > s)`` for ``n = 2, 3`` by rectangle decomposition.

The region ``{x >= 0 : sum x <= s}`` is covered from inside and outside by
rectangles on the grid ``j * h``, ``h = s / N``, with ``N = 2**m`` for
``n = 2`` and ``N = 3**m`` for ``n = 3``.  Cell probabilities are finite
differences of the joint CDF (copula mode) or the joint survival function
(survival mode).  In survival mode the tail is assembled directly from
positive cell masses plus boundary strips, so nothing cancels even when the
tail is far below machine epsilon relative to one.

Grid points are mapped once to generator coordinates ``e_i(j h)``; a joint
value is then ``phi`` of a sum, and every first-index difference is
evaluated as ``phi(a) - phi(b)`` in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .archimedean import survival_copula_prob
from .errors import CapabilityError, DomainError
from .estimators import Mode, TailProblem, _level_coords

__all__ = ["BoundsPair", "joint_cdf_x", "joint_sf_y", "bounds_tail", "MAX_M"]

MAX_M = {2: 24, 3: 10}


@dataclass(frozen=True)
class BoundsPair:
    lower: float
    upper: float
    m: int

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _check_point(p: TailProblem, x, mode: Mode, name: str):
    if p.mode is not mode:
        raise DomainError(f"{name} needs a {mode.value}-mode problem")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != p.n or np.any(np.isnan(x)):
        raise DomainError(f"expected points with {p.n} coordinates")
    return x


def _joint(p: TailProblem, x):
    cols = [_level_coords(p, np.maximum(x[..., i], 0.0), idx=[i])[..., 0] for i in range(p.n)]
    t = np.sum(cols, axis=0)
    out = p.gen.phi(t)
    return float(out) if out.ndim == 0 else out


def joint_cdf_x(p: TailProblem, x):
    """``Pr(X_1 <= x_1, ..., X_n <= x_n)``."""
    return _joint(p, _check_point(p, x, Mode.COPULA, "joint_cdf_x"))


def joint_sf_y(p: TailProblem, y):
    """``Pr(Y_1 > y_1, ..., Y_n > y_n)``."""
    return _joint(p, _check_point(p, y, Mode.SURVIVAL, "joint_sf_y"))


# -- joint functions on the grid ------------------------------------------------------


class _GridJoint:
    """Archimedean joint CDF or joint survival function on the grid ``j * h``."""

    def __init__(self, p: TailProblem, N: int):
        self.gen = p.gen
        self.kind = "cdf" if p.copula_mode else "sf"
        levels = np.arange(N + 1) * (p.s / N)
        self.e = [_level_coords(p, levels, idx=[i])[:, 0] for i in range(p.n)]

    def _arg(self, idx):
        return sum(e[j] for e, j in zip(self.e, idx))

    def value(self, idx):
        return self.gen.phi(self._arg(idx))

    def step(self, i1, rest):
        """``|J(i1, rest) - J(i1 - 1, rest)|``."""
        tail = sum(e[j] for e, j in zip(self.e[1:], rest))
        a = self.e[0][i1] + tail
        b = self.e[0][i1 - 1] + tail
        near, far = np.minimum(a, b), np.maximum(a, b)
        with np.errstate(invalid="ignore"):
            l_near = self.gen.log_phi(near)
            out = np.exp(l_near) * -np.expm1(self.gen.log_phi(far) - l_near)
        return np.where(l_near == -np.inf, 0.0, out)


class _CallableJoint:
    """Any joint function of the grid levels; differences taken directly."""

    def __init__(self, fn, kind: str, n: int, s: float, N: int):
        self.fn, self.kind, self.n, self.h = fn, kind, n, s / N

    def value(self, idx):
        idx = np.broadcast_arrays(*[np.asarray(j) for j in idx])
        pts = np.stack([j * self.h for j in idx], axis=-1)
        return np.asarray(self.fn(pts), dtype=float)

    def step(self, i1, rest):
        return np.abs(self.value((i1, *rest)) - self.value((i1 - 1, *rest)))


def _cells(J, N: int, n: int, upper: bool) -> float:
    """Total mass of the inner (``upper=False``) or outer cell family."""
    if n == 2:
        i = np.arange(1, N + 1 if upper else N)
        k = (N + 1 if upper else N) - i
        return math.fsum(J.step(i, (k,)))
    total = []
    c = N + 2 if upper else N
    for i1 in range(1, (N if upper else N - 2) + 1):
        i2 = np.arange(1, c - i1)
        k = c - i1 - i2
        hi_, lo_ = J.step(i1, (i2, k)), J.step(i1, (i2 - 1, k))
        zeta = hi_ - lo_ if J.kind == "cdf" else lo_ - hi_
        total.append(math.fsum(zeta))
    return math.fsum(total)


def _strips(J, N: int, n: int, upper: bool) -> float:
    """Boundary strips completing the survival-form cover."""
    if n == 2:
        return float(J.value((N - 1 if upper else N, 0)))
    c, top = (N - 1, N - 2) if upper else (N + 1, N)
    i1 = np.arange(1, top + 1)
    parts = list(J.step(i1, (c - i1, np.zeros_like(i1))))
    parts.append(float(J.value((top, 0, 0))))
    return math.fsum(parts)


def _tail_bounds(J, N: int, n: int):
    if J.kind == "cdf":
        lower = 1.0 - _cells(J, N, n, upper=True)
        upper = 1.0 - _cells(J, N, n, upper=False)
    else:
        lower = _cells(J, N, n, upper=True) + _strips(J, N, n, upper=False)
        upper = _cells(J, N, n, upper=False) + _strips(J, N, n, upper=True)
    return lower, upper


def _grid_size(p: TailProblem, m: int, allow_large: bool) -> int:
    if p.n not in (2, 3):
        raise CapabilityError(f"rectangle bounds are implemented for n = 2, 3 only, got n = {p.n}")
    if m < 1:
        raise DomainError("precision m must be at least 1")
    if m > MAX_M[p.n] and not allow_large:
        raise CapabilityError(
            f"m = {m} exceeds the cost guard m <= {MAX_M[p.n]} for n = {p.n}; "
            "pass allow_large=True to override"
        )
    if not p.s > 0:
        raise DomainError("threshold must be positive")
    return (2 if p.n == 2 else 3) ** m


def bounds_tail(p: TailProblem, m: int, *, allow_large: bool = False, dual: bool = False) -> BoundsPair:
    """Lower and upper bounds of ``Pr(S > s)`` at grid precision ``m``.

    ``dual=True`` evaluates the other form (survival form in copula mode,
    CDF form in survival mode) from inclusion-exclusion; it is slower and
    less accurate for tiny tails and serves as a cross-check.
    """
    N = _grid_size(p, m, allow_large)
    if not dual:
        J = _GridJoint(p, N)
    else:
        sf = [mg.sf for mg in p.marginals]

        def fn(pts):
            if p.copula_mode:  # Pr(X > x) = Cbar(F(x))
                u = np.stack([1.0 - sf[i](pts[..., i]) for i in range(p.n)], axis=-1)
            else:  # Pr(Y <= y) = Cbar(Fbar(y))
                u = np.stack([sf[i](pts[..., i]) for i in range(p.n)], axis=-1)
            return survival_copula_prob(p.gen, u)

        J = _CallableJoint(fn, "sf" if p.copula_mode else "cdf", p.n, p.s, N)
    lower, upper = _tail_bounds(J, N, p.n)
    return BoundsPair(float(np.clip(lower, 0, 1)), float(np.clip(upper, 0, 1)), m)
