"""Conditional Monte Carlo estimators of ``Pr(S > s)`` for Archimedean-dependent sums.

Two settings share one interface: in copula mode the risks are
``X_i = F_i^{-1}(U_i)`` and in survival mode ``Y_i = Fbar_i^{-1}(U_i)``, with
``U`` drawn from the Archimedean copula.  Every estimator starts from the
exact probability that the maximum exceeds ``s`` and simulates only the
remainder ``Pr(S > s, M <= s)``:

* ``nr1`` conditions on which component is the maximum and where it lies in
  ``(s/n, s]``;
* ``nr2`` integrates the radial part out analytically given the simplex point;
* ``nr3`` splits on whether one or several components exceed ``lambda * s``;
* ``nr4`` uses the ``nr1`` construction on ``(kappa s, s]`` and the ``nr2``
  construction below.

Draws are produced in vectorised batches.  Replications are split into
fixed-size chunks, each with its own RNG substream, and merged through exact
sums so the report does not depend on the number of workers.
"""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._roots import bisect, expand_bracket
from .archimedean import GeneratorSpec, RadialCdf, copula_union_prob
from .errors import CapabilityError, DomainError, NumericalError
from .marginals import Marginal
from .samplers import RngStream, kendall_coords, open_uniform, place_first, radial_coords, sample_simplex

__all__ = [
    "Mode",
    "Estimator",
    "TailProblem",
    "EstimatorReport",
    "max_tail_prob",
    "solve_radius_root",
    "closed_radius_bound",
    "conditional_component_cdf",
    "draw_nr1",
    "draw_nr2",
    "draw_nr3",
    "draw_nr4",
    "draw_plain_mc",
    "draw",
    "run_replications",
    "default_grid",
    "tune_parameter",
]

log = logging.getLogger(__name__)

ROOT_RTOL = 1e-10
DEFAULT_CHUNK = 10_000


class Mode(str, enum.Enum):
    COPULA = "copula"  # X_i = F_i^{-1}(U_i)
    SURVIVAL = "survival"  # Y_i = Fbar_i^{-1}(U_i)


class Estimator(str, enum.Enum):
    PLAIN = "plain"
    NR1 = "nr1"
    NR2 = "nr2"
    NR3 = "nr3"
    NR4 = "nr4"

    @property
    def tuning_key(self):
        return {Estimator.NR3: "lambda", Estimator.NR4: "kappa"}.get(self)


@dataclass(frozen=True)
class TailProblem:
    gen: GeneratorSpec
    marginals: tuple[Marginal, ...]
    s: float
    mode: Mode = Mode.COPULA

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "s", float(self.s))
        if not self.marginals:
            raise DomainError("at least one marginal is required")
        if not self.s >= 0 or math.isinf(self.s):
            raise DomainError(f"threshold must be finite and non-negative, got {self.s}")
        if self.n - 1 > self.gen.max_order:
            raise CapabilityError(
                f"dimension {self.n} needs {self.gen.family.value} derivatives of order "
                f"{self.n - 1}; available up to {self.gen.max_order}"
            )

    @property
    def n(self) -> int:
        return len(self.marginals)

    @property
    def copula_mode(self) -> bool:
        return self.mode is Mode.COPULA

    def with_s(self, s: float) -> TailProblem:
        return replace(self, s=s)


# -- coordinate maps ---------------------------------------------------------------


def _level_coords(p: TailProblem, level, idx=None):
    """Generator coordinate of each marginal at ``level``: ``phi^{-1}(F_i)`` or ``phi^{-1}(Fbar_i)``."""
    idx = range(p.n) if idx is None else idx
    level = np.asarray(level, dtype=float)
    cols = []
    for i in idx:
        lsf = p.marginals[i].log_sf(level)
        if p.copula_mode:
            cols.append(p.gen.phi_inverse_1m(np.exp(lsf)))
        else:
            cols.append(p.gen.phi_inverse_log(lsf))
    return np.stack(cols, axis=-1)


def _values(p: TailProblem, e, idx=None):
    """Risk values from generator coordinates, column ``k`` using marginal ``idx[k]``."""
    idx = range(p.n) if idx is None else idx
    lp = p.gen.log_phi(e)
    if p.copula_mode:
        with np.errstate(divide="ignore"):
            lq = np.log(-np.expm1(lp))
    else:
        lq = lp
    out = np.empty(np.shape(e))
    for k, i in enumerate(idx):
        out[..., k] = p.marginals[i].survival_quantile_log(lq[..., k])
    return out


def _require_joint(p: TailProblem):
    if p.n < 2:
        raise CapabilityError("conditional estimators need dimension n >= 2")


# -- exact pieces --------------------------------------------------------------------


def max_tail_prob(p: TailProblem) -> float:
    """``Pr(max_i risk_i > s)`` in closed form."""
    if p.copula_mode:
        t = _level_coords(p, p.s).sum()
        return float(-np.expm1(p.gen.log_phi(t)))
    u = np.array([m.sf(p.s) for m in p.marginals])
    return float(copula_union_prob(p.gen, u))


def closed_radius_bound(p: TailProblem, w, level: float, rank: int):
    """Order statistic ``rank`` (1 = smallest, n = largest) of ``e_i(level) / w_i``.

    ``rank = n`` gives the max form and ``rank = 1`` the min form.
    """
    if not 1 <= rank <= p.n:
        raise DomainError(f"rank must lie in 1..{p.n}, got {rank}")
    if not 0 < level <= p.s:
        raise DomainError(f"cut level must lie in (0, s], got {level}")
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        ratios = _level_coords(p, level) / w
    return np.sort(ratios, axis=-1)[..., rank - 1]


def _radius_sum(p: TailProblem, w):
    def f(r, idx):
        with np.errstate(over="ignore", invalid="ignore"):
            e = r[:, None] * w[idx]
        return _values(p, e).sum(axis=1)

    return f


def solve_radius_root(p: TailProblem, w):
    """Radius at which the sum of risks on the ray ``r * w`` equals ``s``.

    In copula mode this is the upper endpoint ``U^X`` (the sum decreases in
    ``r``); in survival mode it is the lower endpoint ``L^Y``.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    m = w.shape[0]
    target = np.full(m, p.s)
    f = _radius_sum(p, w)
    inc = not p.copula_mode
    with np.errstate(divide="ignore", over="ignore"):
        far = _level_coords(p, p.s) / w
        near = _level_coords(p, p.s / p.n) / w
    if p.copula_mode:
        lo, hi = far.max(axis=1), near.max(axis=1)
    else:
        lo, hi = near.min(axis=1), far.min(axis=1)
    lost = ~np.isfinite(hi)
    if np.any(lost):
        lo2, hi2 = expand_bracket(lambda x, idx: f(x, np.flatnonzero(lost)[idx]),
                                  target[lost], lo[lost], increasing=inc)
        lo[lost], hi[lost] = lo2, hi2
    r = bisect(f, lo, hi, target, increasing=inc, rtol=ROOT_RTOL)
    return r


def _cond_log_ratio(p: TailProblem, i: int, t_rest, level):
    """``log |phi^(n-1)(t_rest + e_i(level))| - log |phi^(n-1)(t_rest)|``."""
    k = p.n - 1
    e_i = _level_coords(p, level, idx=[i])[..., 0]
    den = p.gen.log_abs_deriv(k, t_rest)
    num = p.gen.log_abs_deriv(k, t_rest + e_i)
    with np.errstate(invalid="ignore"):
        return np.minimum(num - den, 0.0), den


def conditional_component_cdf(p: TailProblem, i: int, others, x: float) -> float:
    """CDF of component ``i`` at ``x`` given the other ``n - 1`` realised values."""
    _require_joint(p)
    others = np.asarray(others, dtype=float)
    if others.shape[-1] != p.n - 1:
        raise DomainError(f"expected {p.n - 1} conditioning values")
    rest = [j for j in range(p.n) if j != i]
    t_rest = sum(float(_level_coords(p, x_j, idx=[j])[0]) for x_j, j in zip(others, rest))
    lr, den = _cond_log_ratio(p, i, t_rest, max(float(x), 0.0))
    if np.any(den == -np.inf) or np.any(np.isnan(den)):
        raise NumericalError("degenerate conditioning: generator derivative vanishes")
    ratio = np.exp(lr)
    out = ratio if p.copula_mode else -np.expm1(lr)
    if float(x) <= 0:
        out = np.zeros_like(ratio)
    return float(np.clip(out, 0.0, 1.0))


# -- estimator draws -----------------------------------------------------------------


def _band_term(p: TailProblem, lo_level: float, rng, m: int):
    """Sum over i of ``Pr(risk_i in (lo_level, s]) * I{S > s, risk_i is the max}``."""
    total = np.zeros(m)
    for i, mg in enumerate(p.marginals):
        q_hi, q_lo = float(mg.sf(lo_level)), float(mg.sf(p.s))
        weight = q_hi - q_lo
        if not weight > 0:
            continue
        q = q_lo + weight * open_uniform(rng, m)
        t1 = p.gen.phi_inverse_1m(q) if p.copula_mode else p.gen.phi_inverse(q)
        e = place_first(kendall_coords(p.gen, p.n, t1, rng), i)
        vals = _values(p, e)
        vals[:, i] = mg.survival_quantile(q)
        hit = (vals.sum(axis=1) > p.s) & (vals[:, i] >= vals.max(axis=1))
        total += weight * hit
    return total


def _endpoints(p: TailProblem, w):
    """``(L, U)`` with ``{S > s, M <= s} = {L <= R < U}``."""
    root = solve_radius_root(p, w)
    if p.copula_mode:
        return closed_radius_bound(p, w, p.s, p.n), root
    return root, closed_radius_bound(p, w, p.s, 1)


def _interval(p: TailProblem, lo, hi):
    return RadialCdf(p.gen, p.n).interval_prob(lo, hi)


def _nr1(p, rng, m, _param):
    _require_joint(p)
    return max_tail_prob(p) + _band_term(p, p.s / p.n, rng, m), 0


def _nr2(p, rng, m, _param):
    _require_joint(p)
    w = sample_simplex(p.n, rng, m)
    lo, hi = _endpoints(p, w)
    if np.any(lo > hi * (1 + 1e-9)):
        raise NumericalError("radial endpoints out of order")
    return max_tail_prob(p) + _interval(p, lo, hi), 0


def _single_large_term(p: TailProblem, lam: float, rng, m: int):
    """Sum over i of ``Pr(s - sum_{j!=i} x_j < risk_i <= s | x_{-i})`` gated on ``max x_{-i} <= lam s``."""
    n, s = p.n, p.s
    part1 = np.zeros(m)
    for i in range(n):
        rest = [j for j in range(n) if j != i]
        e = radial_coords(p.gen, n - 1, rng, m)
        vals = _values(p, e, idx=rest)
        gate = vals.max(axis=1) <= lam * s
        sigma = np.where(gate, vals.sum(axis=1), 0.0)
        t_rest = e.sum(axis=1)
        lr_hi, _ = _cond_log_ratio(p, i, t_rest, s)
        lr_lo, _ = _cond_log_ratio(p, i, t_rest, s - sigma)
        with np.errstate(invalid="ignore"):
            if p.copula_mode:
                term = np.expm1(lr_hi) - np.expm1(lr_lo)
            else:
                term = np.exp(lr_lo) - np.exp(lr_hi)
        part1 += np.where(gate, np.nan_to_num(np.maximum(term, 0.0)), 0.0)
    return part1


def _nr3(p, rng, m, lam):
    _require_joint(p)
    n, s = p.n, p.s
    if not 0 < lam < 1 / n:
        raise DomainError(f"lambda must lie in (0, 1/n) = (0, {1 / n:.6g}), got {lam}")
    part1 = _single_large_term(p, lam, rng, m)
    w = sample_simplex(n, rng, m)
    lo, hi = _endpoints(p, w)
    if p.copula_mode:
        hi = np.minimum(hi, closed_radius_bound(p, w, lam * s, n - 1))
    else:
        lo = np.maximum(lo, closed_radius_bound(p, w, lam * s, 2))
    clamped = int(np.count_nonzero(hi < lo))
    return max_tail_prob(p) + part1 + _interval(p, lo, hi), clamped


def _nr4(p, rng, m, kappa):
    _require_joint(p)
    n, s = p.n, p.s
    if not 1 / n < kappa < 1:
        raise DomainError(f"kappa must lie in (1/n, 1) = ({1 / n:.6g}, 1), got {kappa}")
    band = _band_term(p, kappa * s, rng, m)
    w = sample_simplex(n, rng, m)
    root = solve_radius_root(p, w)
    if p.copula_mode:
        lo, hi = closed_radius_bound(p, w, kappa * s, n), root
    else:
        lo, hi = root, closed_radius_bound(p, w, kappa * s, 1)
    clamped = int(np.count_nonzero(hi < lo))
    return max_tail_prob(p) + band + _interval(p, lo, hi), clamped


def _plain(p, rng, m, _param):
    e = radial_coords(p.gen, p.n, rng, m)
    return (_values(p, e).sum(axis=1) > p.s).astype(float), 0


_KERNELS = {
    Estimator.PLAIN: _plain,
    Estimator.NR1: _nr1,
    Estimator.NR2: _nr2,
    Estimator.NR3: _nr3,
    Estimator.NR4: _nr4,
}


def _resolve_param(estimator: Estimator, params):
    key = estimator.tuning_key
    if key is None:
        return None
    if not params or params.get(key) is None:
        raise DomainError(f"{estimator.value} needs a value for {key}")
    return float(params[key])


def draw(p: TailProblem, estimator, rng: np.random.Generator, size=None, params=None):
    """Realisations of the chosen estimator; a float when ``size`` is None."""
    est = Estimator(estimator)
    z, _ = _KERNELS[est](p, rng, 1 if size is None else int(size), _resolve_param(est, params))
    z = np.asarray(z, dtype=float)
    return float(z[0]) if size is None else z


def draw_nr1(p, rng, size=None):
    return draw(p, Estimator.NR1, rng, size)


def draw_nr2(p, rng, size=None):
    return draw(p, Estimator.NR2, rng, size)


def draw_nr3(p, lam, rng, size=None):
    return draw(p, Estimator.NR3, rng, size, {"lambda": lam})


def draw_nr4(p, kappa, rng, size=None):
    return draw(p, Estimator.NR4, rng, size, {"kappa": kappa})


def draw_plain_mc(p, rng, size=None):
    return draw(p, Estimator.PLAIN, rng, size)


# -- replication -----------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorReport:
    mean: float
    variance: float
    cv: float
    rms_re: float
    reps: int
    seed: int
    clamp_rate: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def se(self) -> float:
        """Standard error of the mean."""
        return math.sqrt(self.variance / self.reps)


@dataclass(frozen=True)
class _Chunk:
    count: int
    s1: float
    s2: float
    clamped: int


def _run_chunk(args):
    p, est, param, seed, stream_id, size = args
    rng = RngStream(seed, stream_id).generator()
    z, clamped = _KERNELS[est](p, rng, size, param)
    z = np.asarray(z, dtype=float)
    return _Chunk(size, math.fsum(z), math.fsum(z * z), clamped)


def default_workers() -> int:
    env = os.environ.get("TAILSUM_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_replications(
    p: TailProblem,
    estimator,
    params=None,
    reps: int = 100_000,
    seed: int = 0,
    *,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> EstimatorReport:
    """Replicate an estimator; chunk ``j`` uses substream ``(seed, j)``."""
    if reps < 2:
        raise DomainError("at least two replications are required")
    est = Estimator(estimator)
    param = _resolve_param(est, params)
    sizes = [min(chunk_size, reps - k) for k in range(0, reps, chunk_size)]
    jobs = [(p, est, param, seed, j, size) for j, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            chunks = list(pool.map(_run_chunk, jobs))
    else:
        chunks = [_run_chunk(job) for job in jobs]
    s1 = math.fsum(c.s1 for c in chunks)
    s2 = math.fsum(c.s2 for c in chunks)
    clamped = sum(c.clamped for c in chunks)
    mean = s1 / reps
    var = max(math.fsum([s2, -reps * mean * mean]) / (reps - 1), 0.0)
    cv = math.sqrt(var) / mean if mean > 0 else math.nan
    rms = math.sqrt(s2 / reps) / mean if mean > 0 else math.nan
    if clamped:
        log.info("%s: endpoint clamp rate %.4g", est.value, clamped / reps)
    return EstimatorReport(
        mean=mean,
        variance=var,
        cv=cv,
        rms_re=rms,
        reps=reps,
        seed=seed,
        clamp_rate=clamped / reps,
        params={} if param is None else {est.tuning_key: param},
    )


def _legal_interval(estimator: Estimator, n: int):
    if estimator is Estimator.NR3:
        return 0.0, 1.0 / n
    if estimator is Estimator.NR4:
        return 1.0 / n, 1.0
    raise DomainError(f"{estimator.value} has no tuning parameter")


def default_grid(estimator, n: int, points: int = 9):
    lo, hi = _legal_interval(Estimator(estimator), n)
    return [lo + (hi - lo) * k / (points + 1) for k in range(1, points + 1)]


def tune_parameter(
    p: TailProblem, estimator, grid=None, pilot_reps: int = 2_000, seed: int = 0, *, workers: int = 1
) -> float:
    """Grid value with the smallest pilot variance, ties broken toward the midpoint."""
    est = Estimator(estimator)
    lo, hi = _legal_interval(est, p.n)
    grid = default_grid(est, p.n) if grid is None else [float(g) for g in grid]
    if not grid:
        raise DomainError("tuning grid is empty")
    if any(not lo < g < hi for g in grid):
        raise DomainError(f"grid values must lie in ({lo:.6g}, {hi:.6g})")
    mid = 0.5 * (lo + hi)
    scored = []
    for g in grid:
        rep = run_replications(p, est, {est.tuning_key: g}, pilot_reps, seed, workers=workers)
        scored.append((rep.variance, abs(g - mid), g))
        log.debug("tune %s=%.6g variance %.6g", est.tuning_key, g, rep.variance)
    return min(scored)[2]
