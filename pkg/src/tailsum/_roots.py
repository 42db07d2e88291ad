"""Vectorised bracketing and bisection for monotone functions of a positive argument.

``f(x, idx)`` evaluates the function for the batch elements ``idx`` at the
points ``x`` (same length as ``idx``), so that parameters can be gathered per
element by the caller.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

MAX_BRACKET_STEPS = 1100  # enough to walk from 1 to the edges of double range


def _below(f, x, idx, target, increasing):
    fx = f(x, idx)
    if np.any(np.isnan(fx)):
        raise NumericalError("monotone function returned NaN during root search")
    return fx < target[idx] if increasing else fx > target[idx]


def expand_bracket(f, target, x0, *, increasing, max_steps=MAX_BRACKET_STEPS):
    """Geometric bracket search from ``x0`` by doubling or halving.

    Returns ``(lo, hi)`` with the root in ``[lo, hi]`` and ``hi <= 2 * lo``
    unless an edge of the double range was reached (``lo = 0`` or
    ``hi = inf``).
    """
    target = np.asarray(target, dtype=float)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), target.shape).copy()
    lo = np.zeros_like(target)
    hi = np.full_like(target, np.inf)
    all_idx = np.arange(target.size)
    below = _below(f, x0, all_idx, target, increasing)
    lo[below] = x0[below]
    hi[~below] = x0[~below]

    up = all_idx[below]
    x = x0[up]
    for _ in range(max_steps):
        if up.size == 0:
            break
        with np.errstate(over="ignore"):
            x = 2.0 * x
        finite = np.isfinite(x)
        up, x = up[finite], x[finite]
        if up.size == 0:
            break
        b = _below(f, x, up, target, increasing)
        lo[up[b]] = x[b]
        hi[up[~b]] = x[~b]
        up, x = up[b], x[b]
    else:
        if up.size:
            raise NumericalError("bracket search did not terminate")

    down = all_idx[~below]
    x = x0[down]
    for _ in range(max_steps):
        if down.size == 0:
            break
        x = 0.5 * x
        pos = x > 0
        down, x = down[pos], x[pos]
        if down.size == 0:
            break
        b = _below(f, x, down, target, increasing)
        lo[down[b]] = x[b]
        hi[down[~b]] = x[~b]
        down, x = down[~b], x[~b]
    else:
        if down.size:
            raise NumericalError("bracket search did not terminate")
    return lo, hi


def bisect(f, lo, hi, target, *, increasing, rtol=1e-12, max_iter=200):
    """Geometric bisection on ``[lo, hi]`` to relative width ``rtol``.

    Elements with ``hi = inf`` resolve to ``inf`` and elements with
    ``lo = 0`` are bisected arithmetically until ``lo`` becomes positive.
    """
    target = np.asarray(target, dtype=float)
    lo = np.array(lo, dtype=float, copy=True).reshape(target.shape)
    hi = np.array(hi, dtype=float, copy=True).reshape(target.shape)
    if np.any(lo > hi):
        raise NumericalError("invalid bracket: lo > hi")
    active = np.flatnonzero(np.isfinite(hi) & (hi - lo > rtol * hi))
    for _ in range(max_iter):
        if active.size == 0:
            break
        a, b = lo[active], hi[active]
        mid = np.where(a > 0, a * np.sqrt(b / np.where(a > 0, a, 1.0)), 0.5 * b)
        mid = np.clip(mid, a, b)
        below = _below(f, mid, active, target, increasing)
        lo[active[below]] = mid[below]
        hi[active[~below]] = mid[~below]
        a, b = lo[active], hi[active]
        active = active[b - a > rtol * b]
    out = np.where(lo > 0, lo * np.sqrt(hi / np.where(lo > 0, lo, 1.0)), 0.5 * hi)
    return np.where(np.isfinite(hi), out, np.inf)


def solve_monotone(f, target, x0, *, increasing, rtol=1e-12, max_iter=200):
    lo, hi = expand_bracket(f, target, x0, increasing=increasing)
    return bisect(f, lo, hi, target, increasing=increasing, rtol=rtol, max_iter=max_iter)
