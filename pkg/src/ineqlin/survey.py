"""Sampling designs, Horvitz-Thompson measures and linearized variance estimation.

The plug-in estimator of an index is its value on the empirical measure
``sum_{i in S} (1/pi_i) delta_{y_i}``. Its variance is approximated by the
design variance of the Horvitz-Thompson total of the linearized variable
``z_i = IF(y_i; M_hat)``, estimated either in Horvitz-Thompson form or, for
fixed-size designs, in Sen-Yates-Grundy form.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from . import indexes
from .errors import DesignError, DomainError
from .indexes import IndexKind
from .measure import DiscreteMeasure


class SamplingDesign(abc.ABC):
    """A without-replacement design over population labels ``0..N-1``."""

    fixed_size: bool = False

    @abc.abstractmethod
    def first_order(self, i) -> np.ndarray:
        """Inclusion probability ``pi_i`` of population unit(s) ``i``."""

    @abc.abstractmethod
    def second_order(self, i: int, j: int) -> float:
        """Joint inclusion probability ``pi_ij``; ``pi_ii == pi_i``."""

    @abc.abstractmethod
    def select(self, population_size: int, rng: np.random.Generator) -> np.ndarray:
        """Sorted labels of the selected units."""

    @abc.abstractmethod
    def joint_matrix(self, sample: "SampleData") -> np.ndarray:
        """``pi_ij`` for every pair of sampled units (diagonal ``pi_i``)."""

    @abc.abstractmethod
    def describe(self) -> dict:
        """JSON-ready description used for fingerprints and reports."""


class SRSWOR(SamplingDesign):
    """Simple random sampling of ``n`` out of ``N`` without replacement."""

    fixed_size = True

    def __init__(self, n: int, N: int):
        if not (1 <= n <= N):
            raise DesignError(f"SRSWOR needs 1 <= n <= N, got n={n}, N={N}")
        self.n = int(n)
        self.N = int(N)

    @property
    def pi(self) -> float:
        return self.n / self.N

    @property
    def pi_pair(self) -> float:
        if self.n == self.N:
            return 1.0
        return self.n * (self.n - 1) / (self.N * (self.N - 1))

    def first_order(self, i):
        return np.full(np.shape(i), self.pi)

    def second_order(self, i, j):
        return self.pi if i == j else self.pi_pair

    def select(self, population_size, rng):
        if population_size != self.N:
            raise DesignError(
                f"design built for N={self.N} but population has {population_size} units"
            )
        return np.sort(rng.choice(self.N, size=self.n, replace=False))

    def joint_matrix(self, sample):
        k = len(sample)
        out = np.full((k, k), self.pi_pair)
        np.fill_diagonal(out, self.pi)
        return out

    def describe(self):
        return {"kind": "srswor", "n": self.n, "N": self.N}


class Poisson(SamplingDesign):
    """Independent inclusion with unit-specific probabilities ``pi``.

    ``pi`` may be omitted when the design is only used for variance
    estimation on a given sample (joint probabilities come from the sample's
    own ``pi`` column).
    """

    def __init__(self, pi: Optional[Sequence[float]] = None):
        if pi is not None:
            pi = np.asarray(pi, dtype=float)
            if np.any(~(pi > 0)) or np.any(pi > 1):
                raise DesignError("Poisson inclusion probabilities must lie in (0, 1]")
        self.pi = pi

    def _require_pi(self) -> np.ndarray:
        if self.pi is None:
            raise DesignError("population inclusion probabilities not specified")
        return self.pi

    def first_order(self, i):
        return self._require_pi()[i]

    def second_order(self, i, j):
        pi = self._require_pi()
        return float(pi[i]) if i == j else float(pi[i] * pi[j])

    def select(self, population_size, rng):
        pi = self._require_pi()
        if pi.size != population_size:
            raise DesignError(
                f"{pi.size} inclusion probabilities for {population_size} units"
            )
        return np.flatnonzero(rng.random(population_size) < pi)

    def joint_matrix(self, sample):
        out = np.outer(sample.pi, sample.pi)
        np.fill_diagonal(out, sample.pi)
        return out

    def describe(self):
        d = {"kind": "poisson"}
        if self.pi is not None:
            d["pi"] = self.pi.tolist()
        return d


class Bernoulli(Poisson):
    """Poisson sampling with a common inclusion probability ``p``."""

    def __init__(self, p: float):
        if not (0 < p <= 1):
            raise DesignError(f"Bernoulli probability must lie in (0, 1], got {p}")
        super().__init__(None)
        self.p = float(p)

    def first_order(self, i):
        return np.full(np.shape(i), self.p)

    def second_order(self, i, j):
        return self.p if i == j else self.p * self.p

    def select(self, population_size, rng):
        return np.flatnonzero(rng.random(population_size) < self.p)

    def describe(self):
        return {"kind": "bernoulli", "p": self.p}


class StratifiedSRSWOR(SamplingDesign):
    """Independent SRSWOR within strata.

    Parameters
    ----------
    stratum_sizes : mapping
        ``N_h`` per stratum label.
    sample_sizes : mapping
        ``n_h`` per stratum label.
    membership : sequence, optional
        Stratum label of each population unit; required for drawing samples
        and for the population-level accessors.
    """

    fixed_size = True

    def __init__(
        self,
        stratum_sizes: Mapping[Hashable, int],
        sample_sizes: Mapping[Hashable, int],
        membership: Optional[Sequence[Hashable]] = None,
    ):
        if set(stratum_sizes) != set(sample_sizes):
            raise DesignError("stratum sizes and sample sizes name different strata")
        self.parts = {h: SRSWOR(sample_sizes[h], stratum_sizes[h]) for h in stratum_sizes}
        self.membership = None if membership is None else np.asarray(membership, dtype=object)
        if self.membership is not None:
            labels, counts = np.unique(self.membership.astype(str), return_counts=True)
            got = dict(zip(labels, counts))
            want = {str(h): p.N for h, p in self.parts.items()}
            if got != want:
                raise DesignError(f"membership counts {got} do not match stratum sizes {want}")

    @classmethod
    def from_membership(
        cls, membership: Sequence[Hashable], sample_sizes: Mapping[Hashable, int]
    ) -> "StratifiedSRSWOR":
        labels, counts = np.unique(np.asarray(membership, dtype=object).astype(str),
                                   return_counts=True)
        sizes = dict(zip(labels.tolist(), counts.tolist()))
        missing = set(sizes) - {str(h) for h in sample_sizes}
        if missing:
            raise DesignError(f"no sample size for strata {sorted(missing)}")
        return cls(sizes, {str(h): n for h, n in sample_sizes.items()},
                   np.asarray(membership, dtype=object).astype(str))

    def _part(self, h) -> SRSWOR:
        try:
            return self.parts[h]
        except KeyError:
            raise DesignError(f"unknown stratum {h!r}") from None

    def _require_membership(self) -> np.ndarray:
        if self.membership is None:
            raise DesignError("stratum membership of population units not specified")
        return self.membership

    def first_order(self, i):
        mem = self._require_membership()
        return np.vectorize(lambda k: self._part(mem[k]).pi, otypes=[float])(i)

    def second_order(self, i, j):
        mem = self._require_membership()
        if i == j:
            return self._part(mem[i]).pi
        if mem[i] == mem[j]:
            return self._part(mem[i]).pi_pair
        return self._part(mem[i]).pi * self._part(mem[j]).pi

    def select(self, population_size, rng):
        mem = self._require_membership()
        if mem.size != population_size:
            raise DesignError(f"membership lists {mem.size} units, population has {population_size}")
        chosen = []
        for h in sorted(self.parts, key=str):
            units = np.flatnonzero(mem == h)
            chosen.append(units[self.parts[h].select(units.size, rng)])
        return np.sort(np.concatenate(chosen))

    def joint_matrix(self, sample):
        if sample.strata is None:
            raise DesignError("sample has no stratum column")
        strata = np.asarray(sample.strata)
        out = np.outer(sample.pi, sample.pi)
        for h in np.unique(strata):
            idx = np.flatnonzero(strata == h)
            out[np.ix_(idx, idx)] = self._part(h).pi_pair
        np.fill_diagonal(out, sample.pi)
        return out

    def describe(self):
        return {
            "kind": "stratified",
            "strata": {str(h): {"N": p.N, "n": p.n} for h, p in sorted(self.parts.items(), key=lambda kv: str(kv[0]))},
        }


def census(N: int) -> SRSWOR:
    return SRSWOR(N, N)


@dataclass(frozen=True)
class SampleData:
    """Sampled units: labels, observed values and inclusion probabilities."""

    labels: np.ndarray
    y: np.ndarray
    pi: np.ndarray
    design: Optional[SamplingDesign] = None
    strata: Optional[np.ndarray] = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        y = np.asarray(self.y, dtype=float)
        pi = np.asarray(self.pi, dtype=float)
        if not (labels.shape == y.shape == pi.shape) or y.ndim != 1:
            raise DomainError("labels, y and pi must be 1-d arrays of equal length")
        if np.unique(labels).size != labels.size:
            raise DomainError("sample labels must be distinct")
        if not np.all(np.isfinite(y)):
            raise DomainError("sample values must be finite")
        if np.any(~(pi > 0)) or np.any(pi > 1):
            raise DomainError("inclusion probabilities must lie in (0, 1]")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "pi", pi)
        if self.strata is not None:
            object.__setattr__(self, "strata", np.asarray(self.strata))

    def __len__(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class VarianceReport:
    estimate: float
    variance: float
    std_error: float
    ci: tuple[float, float]
    level: float
    method: str
    n_effective: int
    raw_variance: float = field(default=0.0)

    @property
    def clamped(self) -> bool:
        return self.raw_variance < 0

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "variance": self.variance,
            "raw_variance": self.raw_variance,
            "std_error": self.std_error,
            "ci": [self.ci[0], self.ci[1]],
            "level": self.level,
            "method": self.method,
            "n_effective": self.n_effective,
        }


def draw_sample(design: SamplingDesign, population: Sequence[float], seed) -> SampleData:
    """Select a sample; deterministic given ``seed`` (int, SeedSequence or Generator)."""
    y = np.asarray(population, dtype=float)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    labels = design.select(y.size, rng)
    strata = None
    if isinstance(design, StratifiedSRSWOR):
        strata = design.membership[labels]
    return SampleData(
        labels=labels,
        y=y[labels],
        pi=design.first_order(labels),
        design=design,
        strata=strata,
    )


def empirical_measure(s: SampleData) -> DiscreteMeasure:
    if len(s) == 0:
        raise DomainError("empty sample")
    return DiscreteMeasure(s.y, 1.0 / s.pi)


def plug_in(kind: IndexKind, s: SampleData) -> float:
    return indexes.value(kind, empirical_measure(s))


def linearized_values(
    kind: IndexKind, s: SampleData, reference: Optional[DiscreteMeasure] = None
) -> np.ndarray:
    """``z_i = IF(y_i; M_hat)`` for every sampled unit.

    Pass ``reference`` to linearize around a known measure (e.g. the true
    population) instead of the empirical one.
    """
    m = empirical_measure(s) if reference is None else reference
    return np.asarray(indexes.influence(kind, m, s.y), dtype=float)


def _require_design(s: SampleData) -> SamplingDesign:
    if s.design is None:
        raise DesignError("joint inclusion probabilities unavailable: sample has no design")
    return s.design


def variance_ht(z: Sequence[float], s: SampleData) -> float:
    """Horvitz-Thompson estimator of the variance of ``sum_S z_i / pi_i``."""
    design = _require_design(s)
    z = np.asarray(z, dtype=float)
    pij = design.joint_matrix(s)
    e = z / s.pi
    delta = (pij - np.outer(s.pi, s.pi)) / pij
    return float(e @ delta @ e)


def variance_syg(z: Sequence[float], s: SampleData) -> float:
    """Sen-Yates-Grundy variance estimator; fixed-size designs only."""
    design = _require_design(s)
    if not design.fixed_size:
        raise DesignError("Sen-Yates-Grundy form needs a fixed-size design")
    z = np.asarray(z, dtype=float)
    pij = design.joint_matrix(s)
    e = z / s.pi
    coef = (np.outer(s.pi, s.pi) - pij) / pij
    np.fill_diagonal(coef, 0.0)
    diff = e[:, None] - e[None, :]
    return float(0.5 * np.sum(coef * diff**2))


def normal_quantile(level: float) -> float:
    if not 0 < level < 1:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    return NormalDist().inv_cdf(0.5 + level / 2.0)


def estimate_with_variance(
    kind: IndexKind,
    s: SampleData,
    level: float = 0.95,
    reference: Optional[DiscreteMeasure] = None,
) -> VarianceReport:
    """Plug-in estimate with a linearized standard error and normal CI.

    Uses the Sen-Yates-Grundy form for fixed-size designs and
    Horvitz-Thompson otherwise. A negative raw variance is clamped to 0 for
    the standard error and interval but kept in ``raw_variance``.
    """
    q = normal_quantile(level)
    design = _require_design(s)
    m = empirical_measure(s)
    est = indexes.value(kind, m)
    z = np.asarray(indexes.influence(kind, m if reference is None else reference, s.y))
    if design.fixed_size:
        raw, method = variance_syg(z, s), "SYG"
    else:
        raw, method = variance_ht(z, s), "HT"
    var = max(raw, 0.0)
    se = math.sqrt(var)
    return VarianceReport(
        estimate=est,
        variance=var,
        std_error=se,
        ci=(est - q * se, est + q * se),
        level=level,
        method=method,
        n_effective=len(s),
        raw_variance=raw,
    )
