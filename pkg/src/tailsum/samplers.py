"""Sampling Archimedean copulas.

Two engines target the same law:

* the radial engine draws ``W`` uniform on the simplex and ``R`` from the
  radial distribution, then returns ``U_i = phi(R W_i)``;
* the Kendall engine draws ``U_1``, then ``Z = C(U) | U_1`` by inverting the
  conditional Kendall distribution, then the remaining coordinates in
  closed form.

The Kendall engine also yields conditional draws given ``U_i`` in a band,
which the band-conditioned estimators need.  Internally both engines work in
generator coordinates ``e_i = phi^{-1}(U_i)``, which avoids round trips
through ``phi`` when the estimators map draws to marginal values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._roots import solve_monotone
from .archimedean import GeneratorSpec, KendallConditional, RadialCdf
from .errors import DomainError

__all__ = [
    "RngStream",
    "open_uniform",
    "sample_simplex",
    "sample_radial",
    "sample_archimedean_mn",
    "sample_archimedean_brechmann",
    "sample_conditional_band",
    "radial_coords",
    "kendall_coords",
]

RADIAL_RTOL = 1e-12
KENDALL_RTOL = 1e-12


@dataclass(frozen=True)
class RngStream:
    """A reproducible substream: ``(seed, stream_id)`` fixes the draw sequence."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))


def open_uniform(rng: np.random.Generator, size):
    """Uniforms on the open interval (0, 1)."""
    return (rng.integers(0, 2**53, size=size) + 0.5) * 2.0**-53


def _batch(size):
    return 1 if size is None else int(size)


def _unbatch(x, size):
    return x[0] if size is None else x


def sample_simplex(n: int, rng: np.random.Generator, size=None):
    """Uniform points on the unit simplex, shape ``(size, n)``."""
    if n < 1:
        raise DomainError("simplex dimension must be positive")
    e = rng.standard_exponential((_batch(size), n))
    w = e / e.sum(axis=1, keepdims=True)
    return _unbatch(w, size)


def _radial_inverse(rc: RadialCdf, v):
    # solve sf(r) = 1 - v on log scale; sf is decreasing
    with np.errstate(divide="ignore"):
        target = np.log1p(-v)
    return solve_monotone(
        lambda x, idx: rc.log_sf(x), target, 1.0, increasing=False, rtol=RADIAL_RTOL
    )


def sample_radial(rc: RadialCdf, rng: np.random.Generator, size=None):
    """Inverse-CDF draws of the radial part."""
    v = open_uniform(rng, _batch(size))
    return _unbatch(_radial_inverse(rc, v), size)


def radial_coords(gen: GeneratorSpec, n: int, rng: np.random.Generator, m: int):
    """Generator coordinates ``R * W`` of ``m`` copula draws, shape ``(m, n)``."""
    w = sample_simplex(n, rng, m)
    r = sample_radial(RadialCdf(gen, n), rng, m)
    with np.errstate(invalid="ignore"):
        e = r[:, None] * w
    return np.where(np.isnan(e), np.inf, e)


def sample_archimedean_mn(gen: GeneratorSpec, n: int, rng: np.random.Generator, size=None):
    e = radial_coords(gen, n, rng, _batch(size))
    return _unbatch(gen.phi(e), size)


def kendall_coords(gen: GeneratorSpec, n: int, t1, rng: np.random.Generator, *, return_excess=False):
    """Complete draws given the first generator coordinate ``t1 = phi^{-1}(u1)``.

    Returns an ``(m, n)`` array whose first column is ``t1``; the columns sum
    to ``phi^{-1}(Z)``.  With ``return_excess`` the Kendall excess
    ``d = phi^{-1}(Z) - t1`` is returned as well.
    """
    t1 = np.asarray(t1, dtype=float).ravel()
    m = t1.size
    kc = KendallConditional(gen, n)
    v0 = open_uniform(rng, m)
    x0 = np.where(t1 > 0, t1, 1.0)
    d = solve_monotone(
        lambda x, idx: kc.excess_cdf(x, t1[idx]), v0, x0, increasing=False, rtol=KENDALL_RTOL
    )
    e = np.empty((m, n))
    e[:, 0] = t1
    rem = d
    for j in range(2, n):
        log_v = np.log(open_uniform(rng, m)) / (n - j)
        with np.errstate(invalid="ignore"):
            e[:, j - 1] = np.where(np.isinf(rem), np.inf, -np.expm1(log_v) * rem)
            rem = np.where(np.isinf(rem), np.inf, rem * np.exp(log_v))
    e[:, n - 1] = rem
    return (e, d) if return_excess else e


def sample_archimedean_brechmann(gen: GeneratorSpec, n: int, rng: np.random.Generator, size=None):
    u1 = open_uniform(rng, _batch(size))
    e = kendall_coords(gen, n, gen.phi_inverse(u1), rng)
    u = gen.phi(e)
    u[:, 0] = u1
    return _unbatch(u, size)


def place_first(e, i: int):
    """Move column 0 of ``e`` to position ``i``, keeping the others in order."""
    if i == 0:
        return e
    n = e.shape[1]
    order = list(range(1, i + 1)) + [0] + list(range(i + 1, n))
    return e[:, order]


def sample_conditional_band(
    gen: GeneratorSpec, n: int, i: int, a: float, b: float, rng: np.random.Generator, size=None
):
    """Draws of ``U`` given ``U_i in [a, b]``.

    Archimedean copulas are exchangeable, so conditioning on coordinate ``i``
    is the first-coordinate construction followed by a relabelling.
    """
    if not 0 <= a < b <= 1:
        raise DomainError(f"band must satisfy 0 <= a < b <= 1, got [{a}, {b}]")
    if not 0 <= i < n:
        raise DomainError(f"index {i} out of range for dimension {n}")
    m = _batch(size)
    u1 = a + (b - a) * open_uniform(rng, m)
    e = kendall_coords(gen, n, gen.phi_inverse(u1), rng)
    u = gen.phi(e)
    u[:, 0] = u1
    return _unbatch(place_first(u, i), size)
