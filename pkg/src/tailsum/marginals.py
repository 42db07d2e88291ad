"""Regularly varying marginals on the positive half-line."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["Marginal", "ParetoMarginal", "parse_marginals", "format_marginals"]


class Marginal(ABC):
    """A continuous, strictly increasing distribution on ``[0, inf)``.

    Subclasses implement the log-survival function and the survival quantile
    in log form; everything else is derived so that tail probabilities never
    go through ``1 - cdf``.
    """

    @abstractmethod
    def log_sf(self, x): ...

    @abstractmethod
    def survival_quantile_log(self, log_q):
        """Smallest ``x`` with ``sf(x) <= exp(log_q)``."""

    def sf(self, x):
        return np.exp(self.log_sf(x))

    def cdf(self, x):
        return -np.expm1(self.log_sf(x))

    def survival_quantile(self, q):
        q = _check_prob(q)
        with np.errstate(divide="ignore"):
            return self.survival_quantile_log(np.log(q))

    def quantile(self, p):
        p = _check_prob(p)
        with np.errstate(divide="ignore"):
            return self.survival_quantile_log(np.log1p(-p))


def _check_prob(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
        raise DomainError("probability argument must lie in [0, 1]")
    return p


@dataclass(frozen=True)
class ParetoMarginal(Marginal):
    """Pareto(alpha, 1): ``sf(x) = (1 + x)**(-alpha)`` for ``x >= 0``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"tail index must be positive, got {self.alpha}")

    def log_sf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -self.alpha * np.log1p(x)

    def survival_quantile_log(self, log_q):
        with np.errstate(over="ignore"):
            return np.expm1(-np.asarray(log_q, dtype=float) / self.alpha)


def parse_marginals(text: str) -> list[Marginal]:
    """Parse ``"pareto:a1,a2,...,an"``."""
    family, sep, rest = text.strip().partition(":")
    if not sep or family.strip().lower() != "pareto":
        raise DomainError(f"unsupported marginal spec {text!r}; expected 'pareto:a1,...,an'")
    try:
        alphas = [float(a) for a in rest.split(",") if a.strip()]
    except ValueError as exc:
        raise DomainError(f"bad tail index in {text!r}") from exc
    if not alphas:
        raise DomainError(f"no tail indices in {text!r}")
    return [ParetoMarginal(a) for a in alphas]


def format_marginals(marginals) -> str:
    return "pareto:" + ",".join(repr(m.alpha) for m in marginals)
