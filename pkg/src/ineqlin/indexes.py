"""Gini, Amato, Zenga and Atkinson indexes as functionals of a discrete measure.

Every index is available in two independent forms:

* closed-form value and influence function (``gini_value``,
  ``gini_influence``, ...), vectorized over the evaluation point ``u``;
* a :class:`~ineqlin.engine.ComposedFunctional` from :func:`as_composition`,
  whose influence is assembled generically by the engine.

The functionals use the finite-population definitions verbatim, including
the tie conventions of ``H_y`` (values <= y) and ``K_y`` (values >= y).
Two consequences worth knowing:

* the Gini functional equals 1, not 0, on a population of identical values,
  because every atom sees ``H_y = N``;
* the Zenga functional gives zero weight to the smallest and largest atoms,
  so for very small populations it sits near 1 (``Z({1, 2}) == 1``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .engine import (
    HEAD_COUNT,
    MASS,
    TOTAL,
    UPPER_TOTAL,
    ComposedFunctional,
    IntegrandFamily,
    OuterMap,
    IDENTITY,
)
from .errors import DomainError
from .measure import DiscreteMeasure

NAMES = ("gini", "amato", "zenga", "atkinson")


@dataclass(frozen=True)
class IndexKind:
    """One of the four indexes; ``epsilon`` is used by Atkinson only."""

    name: str
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown index {self.name!r}; expected one of {NAMES}")
        if self.name == "atkinson":
            eps = self.epsilon
            if eps is None or not (0.0 <= eps < 1.0):
                raise DomainError(f"Atkinson epsilon must lie in [0, 1), got {eps}")
            object.__setattr__(self, "epsilon", float(eps))
        elif self.epsilon is not None:
            raise ValueError(f"{self.name} takes no epsilon")

    @classmethod
    def parse(cls, name: str, epsilon: Optional[float] = None) -> "IndexKind":
        name = name.strip().lower()
        if name == "atkinson" and epsilon is None:
            epsilon = 0.5
        return cls(name, epsilon if name == "atkinson" else None)

    def __str__(self) -> str:
        if self.name == "atkinson":
            return f"atkinson({self.epsilon:g})"
        return self.name


GINI = IndexKind("gini")
AMATO = IndexKind("amato")
ZENGA = IndexKind("zenga")


def atkinson(epsilon: float) -> IndexKind:
    return IndexKind("atkinson", epsilon)


# -- preconditions ----------------------------------------------------------------

def requires_positive(kind: IndexKind) -> bool:
    """Whether the index needs strictly positive values (else nonnegative suffices)."""
    return kind.name in ("zenga", "atkinson")


def check_support(kind: IndexKind, m: DiscreteMeasure) -> None:
    """Raise :class:`DomainError` unless ``m`` satisfies the index's preconditions."""
    lo = m.values[0]
    if requires_positive(kind):
        if lo <= 0:
            raise DomainError(f"{kind} needs every value > 0 (found {lo:g})")
    elif kind.name == "gini" and lo < 0:
        raise DomainError(f"gini needs every value >= 0 (found {lo:g})")
    if not m.total() > 0:
        raise DomainError(f"{kind} needs a positive total (got {m.total():g})")


def _check_u(u: np.ndarray, kind: IndexKind) -> None:
    if not np.all(np.isfinite(u)):
        raise DomainError("influence point must be finite")
    if requires_positive(kind) and np.any(u <= 0):
        raise DomainError(f"{kind} influence needs u > 0")


def _scalar_or_array(u, out: np.ndarray):
    return float(out) if np.ndim(u) == 0 else out


# -- Gini -------------------------------------------------------------------------

def gini_value(m: DiscreteMeasure) -> float:
    check_support(GINI, m)
    y, w = m.values, m.weights
    n, t = m.mass(), m.total()
    return float(np.dot(w, 2.0 * y * m.head_count(y)) / (n * t) - 1.0)


def gini_influence(m: DiscreteMeasure, u):
    """``(2/NT)(u H_u + K_u) - (G + 1)(1/N + u/T)``."""
    g = gini_value(m)
    uu = np.asarray(u, dtype=float)
    _check_u(uu, GINI)
    n, t = m.mass(), m.total()
    out = 2.0 / (n * t) * (uu * m.head_count(uu) + m.upper_total(uu)) - (g + 1.0) * (
        1.0 / n + uu / t
    )
    return _scalar_or_array(u, out)


# -- Amato ------------------------------------------------------------------------

def amato_value(m: DiscreteMeasure) -> float:
    check_support(AMATO, m)
    n, t = m.mass(), m.total()
    return float(np.dot(m.weights, np.sqrt(1.0 / n**2 + m.values**2 / t**2)))


def amato_influence(m: DiscreteMeasure, u):
    check_support(AMATO, m)
    uu = np.asarray(u, dtype=float)
    _check_u(uu, AMATO)
    n, t = m.mass(), m.total()
    mu = t / n
    y, w = m.values, m.weights
    root = np.sqrt(mu**2 + y**2)
    inv_sum = np.dot(w, 1.0 / root)
    sq_sum = np.dot(w, y**2 / root)
    out = np.sqrt(mu**2 + uu**2) / t - mu / n**2 * inv_sum - uu / t**2 * sq_sum
    return _scalar_or_array(u, out)


# -- Zenga ------------------------------------------------------------------------

def _zenga_ratio(n, h, k, t):
    """``(N - H)(T - K) / (N H K)`` with exact zeros when a numerator factor vanishes.

    At the smallest atom ``T - K == 0`` and at the largest ``N - H == 0``; the
    same holds for points outside the support where ``H`` or ``K`` is 0, so
    those terms are zero rather than 0/0.
    """
    n = np.asarray(n, dtype=float)
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    t = np.asarray(t, dtype=float)
    above = n - h
    below = t - k
    zero = (above == 0) | (below == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = above * below / (n * h * k)
    return np.where(zero, 0.0, r)


def zenga_value(m: DiscreteMeasure) -> float:
    check_support(ZENGA, m)
    y, w = m.values, m.weights
    n, t = m.mass(), m.total()
    terms = _zenga_ratio(n, m.head_count(y), m.upper_total(y), t)
    return float(1.0 - np.dot(w, terms))


def zenga_influence(m: DiscreteMeasure, u):
    """Closed-form influence of the Zenga functional.

    The ``K_y`` component responds to a mass at ``u`` only for ``y <= u``,
    so the integral weighted by ``mu * u`` runs over atoms below ``u``,
    while the ``H_y`` integral runs over atoms at or above ``u``. Both are
    read off prefix sums over the sorted atoms.
    """
    check_support(ZENGA, m)
    uu = np.asarray(u, dtype=float)
    _check_u(uu, ZENGA)
    y, w = m.values, m.weights
    n, t = m.mass(), m.total()
    mu = t / n
    h = m.head_count(y)
    k = m.upper_total(y)
    above = n - h
    below = t - k

    a = w * below / (h**2 * k)
    b = w * above / (h * k**2)
    cum_a = np.concatenate(([0.0], np.cumsum(a)))
    cum_b = np.concatenate(([0.0], np.cumsum(b)))
    c_sum = np.dot(w, below / k)
    d_sum = np.dot(w, above / (h * k))

    lo = np.searchsorted(y, uu, side="left")
    hi = np.searchsorted(y, uu, side="right")
    a_at_or_above = cum_a[-1] - cum_a[lo]
    b_at_or_below = cum_b[hi]

    own = _zenga_ratio(n, m.head_count(uu), m.upper_total(uu), t)
    out = (
        -own
        + a_at_or_above
        + mu * uu * b_at_or_below
        - c_sum / n**2
        - uu / n * d_sum
    )
    return _scalar_or_array(u, out)


# -- Atkinson ---------------------------------------------------------------------

def atkinson_value(m: DiscreteMeasure, epsilon: float) -> float:
    kind = atkinson(epsilon)
    check_support(kind, m)
    s = 1.0 - kind.epsilon
    ratio = m.moment(s) / m.mean() ** s
    return float(1.0 - ratio ** (1.0 / s))


def atkinson_influence(m: DiscreteMeasure, u, epsilon: float):
    """``((1 - A)/N)(-u^(1-e)/((1-e) mu_(1-e)) + u/mu + e/(1-e))``."""
    kind = atkinson(epsilon)
    check_support(kind, m)
    uu = np.asarray(u, dtype=float)
    _check_u(uu, kind)
    eps = kind.epsilon
    s = 1.0 - eps
    a = atkinson_value(m, eps)
    out = (1.0 - a) / m.mass() * (
        -(uu**s) / (s * m.moment(s)) + uu / m.mean() + eps / s
    )
    return _scalar_or_array(u, out)


# -- dispatch ---------------------------------------------------------------------

def value(kind: IndexKind, m: DiscreteMeasure) -> float:
    if kind.name == "gini":
        return gini_value(m)
    if kind.name == "amato":
        return amato_value(m)
    if kind.name == "zenga":
        return zenga_value(m)
    return atkinson_value(m, kind.epsilon)


def influence(kind: IndexKind, m: DiscreteMeasure, u):
    if kind.name == "gini":
        return gini_influence(m, u)
    if kind.name == "amato":
        return amato_influence(m, u)
    if kind.name == "zenga":
        return zenga_influence(m, u)
    return atkinson_influence(m, u, kind.epsilon)


# -- engine form ------------------------------------------------------------------

def _gini_composition() -> ComposedFunctional:
    # l = (H_y, N, T)
    def psi(y, l):
        h, n, t = l
        return 2.0 * y * h / (n * t)

    def grad(y, l):
        h, n, t = l
        c = 2.0 * y / (n * t)
        return np.stack([c, -c * h / n, -c * h / t])

    return ComposedFunctional(
        components=(HEAD_COUNT, MASS, TOTAL),
        psi=IntegrandFamily(psi, grad),
        outer=OuterMap(lambda f: f - 1.0, lambda f: 1.0, "F - 1"),
        label="gini",
    )


def _amato_composition() -> ComposedFunctional:
    # l = (N, T)
    def psi(y, l):
        n, t = l
        return np.sqrt(1.0 / n**2 + y**2 / t**2)

    def grad(y, l):
        n, t = l
        mu = t / n
        c = t / np.sqrt(mu**2 + y**2)
        return np.stack([-c / n**3, -c * y**2 / t**3])

    return ComposedFunctional(
        components=(MASS, TOTAL),
        psi=IntegrandFamily(psi, grad),
        outer=IDENTITY,
        label="amato",
    )


def _zenga_composition() -> ComposedFunctional:
    # l = (H_y, K_y, N, T)
    def psi(y, l):
        h, k, n, t = l
        return _zenga_ratio(n, h, k, t)

    def grad(y, l):
        h, k, n, t = l
        mu = t / n
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.stack(
                [
                    -(t - k) / (h**2 * k),
                    -mu * (n - h) / (h * k**2),
                    (t - k) / (n**2 * k),
                    (n - h) / (n * h * k),
                ]
            )
        return np.nan_to_num(g, nan=0.0, posinf=0.0, neginf=0.0)

    return ComposedFunctional(
        components=(HEAD_COUNT, UPPER_TOTAL, MASS, TOTAL),
        psi=IntegrandFamily(psi, grad),
        outer=OuterMap(lambda f: 1.0 - f, lambda f: -1.0, "1 - F"),
        label="zenga",
    )


def _atkinson_composition(epsilon: float) -> ComposedFunctional:
    s = 1.0 - epsilon

    # l = (N, T)
    def psi(y, l):
        n, t = l
        return y**s / (n**epsilon * t**s)

    def grad(y, l):
        n, t = l
        base = y**s / (n**epsilon * t**s)
        return np.stack([-epsilon / n * base, -s / t * base])

    def phi(f):
        return 1.0 - f ** (1.0 / s)

    def dphi(f):
        return -(f ** (epsilon / s)) / s

    return ComposedFunctional(
        components=(MASS, TOTAL),
        psi=IntegrandFamily(psi, grad),
        outer=OuterMap(phi, dphi, "1 - F^(1/(1-eps))"),
        label=f"atkinson({epsilon:g})",
    )


def as_composition(kind: IndexKind, m: Optional[DiscreteMeasure] = None) -> ComposedFunctional:
    """Engine representation of ``kind``; all four have homogeneity degree 0.

    If ``m`` is given its support is checked against the index's
    preconditions.
    """
    if m is not None:
        check_support(kind, m)
    if kind.name == "gini":
        return _gini_composition()
    if kind.name == "amato":
        return _amato_composition()
    if kind.name == "zenga":
        return _zenga_composition()
    return _atkinson_composition(kind.epsilon)


@dataclass(frozen=True)
class IndexResult:
    kind: IndexKind
    value: float
    influence_at: Callable[[float], float]
    composition: ComposedFunctional


def index_result(kind: IndexKind, m: DiscreteMeasure) -> IndexResult:
    return IndexResult(
        kind=kind,
        value=value(kind, m),
        influence_at=lambda u: influence(kind, m, u),
        composition=as_composition(kind, m),
    )

