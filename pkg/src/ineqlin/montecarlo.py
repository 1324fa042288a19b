"""Replicated sampling experiments for the linearized variance.

Each replicate draws a sample from a fixed population, computes the plug-in
estimate and its linearized variance, and records whether the normal
interval covers the population value. The report compares the empirical
variance of the estimates with the mean linearized variance.

Replicate ``r`` draws from ``numpy.random.default_rng(SeedSequence(master_seed,
spawn_key=(r,)))``, so results do not depend on the number of workers or the
order in which replicates finish.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from . import indexes
from .errors import DesignError, DomainError
from .indexes import IndexKind
from .measure import DiscreteMeasure
from .survey import (
    SRSWOR,
    Bernoulli,
    Poisson,
    SamplingDesign,
    StratifiedSRSWOR,
    draw_sample,
    estimate_with_variance,
)

REPLICATE_COLUMNS = ("replicate", "status", "estimate", "variance", "raw_variance",
                     "ci_lo", "ci_hi", "covered", "n")


@dataclass(frozen=True)
class PopulationSpec:
    """Inline values or a seeded generator (``lognormal``, ``pareto``, ``uniform``)."""

    values: Optional[tuple[float, ...]] = None
    generator: Optional[str] = None
    size: int = 0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values is None and self.generator is None:
            raise ValueError("population needs inline values or a generator")
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            if len(self.values) < 2:
                raise ValueError("population needs at least 2 units")
            return
        if self.generator not in ("lognormal", "pareto", "uniform"):
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.size < 2:
            raise ValueError("population size must be >= 2")
        p = self.params
        if self.generator == "lognormal" and not p.get("sigma", 1.0) > 0:
            raise ValueError("lognormal sigma must be > 0")
        if self.generator == "pareto" and not p.get("a", 3.0) > 0:
            raise ValueError("pareto shape a must be > 0")
        if self.generator == "uniform" and not p.get("high", 1.0) > p.get("low", 0.0):
            raise ValueError("uniform needs low < high")

    def materialize(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values)
        rng = np.random.default_rng(self.seed)
        p = self.params
        if self.generator == "lognormal":
            return rng.lognormal(mean=p.get("mu", 0.0), sigma=p.get("sigma", 1.0), size=self.size)
        if self.generator == "pareto":
            # classical Pareto with scale x_m
            return p.get("scale", 1.0) * (1.0 + rng.pareto(p.get("a", 3.0), size=self.size))
        return rng.uniform(p.get("low", 0.0), p.get("high", 1.0), size=self.size)

    def describe(self) -> dict:
        if self.values is not None:
            return {"values": list(self.values)}
        return {"generator": self.generator, "size": self.size, "seed": self.seed,
                **dict(sorted(self.params.items()))}


@dataclass(frozen=True)
class SimulationConfig:
    population: PopulationSpec
    design: dict
    index: IndexKind
    replicates: int = 1000
    level: float = 0.95
    master_seed: int = 0
    linearize_on: str = "sample"

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("need at least 2 replicates")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if self.linearize_on not in ("sample", "population"):
            raise ValueError("linearize_on must be 'sample' or 'population'")

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        pop = d["population"]
        if "values" in pop:
            population = PopulationSpec(values=pop["values"])
        else:
            extra = {k: v for k, v in pop.items() if k not in ("generator", "size", "seed")}
            population = PopulationSpec(generator=pop["generator"], size=int(pop["size"]),
                                        seed=int(pop.get("seed", 0)), params=extra)
        idx = d["index"]
        if isinstance(idx, str):
            kind = IndexKind.parse(idx)
        else:
            kind = IndexKind.parse(idx["kind"], idx.get("epsilon"))
        design = d["design"]
        if isinstance(design, str):
            design = {"kind": design}
        return cls(
            population=population,
            design=dict(design),
            index=kind,
            replicates=int(d.get("replicates", 1000)),
            level=float(d.get("level", 0.95)),
            master_seed=int(d.get("master_seed", 0)),
            linearize_on=d.get("linearize_on", "sample"),
        )

    def to_dict(self) -> dict:
        idx: dict[str, Any] = {"kind": self.index.name}
        if self.index.epsilon is not None:
            idx["epsilon"] = self.index.epsilon
        return {
            "population": self.population.describe(),
            "design": self.design,
            "index": idx,
            "replicates": self.replicates,
            "level": self.level,
            "master_seed": self.master_seed,
            "linearize_on": self.linearize_on,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_design(spec: dict, population_size: int) -> SamplingDesign:
    """Instantiate a design from its JSON description."""
    kind = spec.get("kind")
    if kind == "census":
        return SRSWOR(population_size, population_size)
    if kind == "srswor":
        return SRSWOR(int(spec["n"]), population_size)
    if kind == "bernoulli":
        return Bernoulli(float(spec["p"]))
    if kind == "poisson":
        return Poisson(spec["pi"])
    if kind == "stratified":
        return StratifiedSRSWOR.from_membership(spec["strata"], spec["n"])
    raise DesignError(f"unknown design kind {kind!r}")


def replicate_rng(master_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(r,)))


@dataclass
class SimulationReport:
    true_value: float
    mean_estimate: float
    empirical_variance: float
    mean_linearized_variance: float
    variance_ratio: Optional[float]
    coverage: Optional[float]
    replicates: int
    n_valid: int
    n_degenerate: int
    n_clamped: int
    fingerprint: str
    config: dict
    per_replicate: list[dict] = field(default_factory=list)
    timing: float = 0.0

    def as_dict(self, include_replicates: bool = False) -> dict:
        d = {
            "true_value": self.true_value,
            "mean_estimate": self.mean_estimate,
            "bias": self.mean_estimate - self.true_value,
            "empirical_variance": self.empirical_variance,
            "mean_linearized_variance": self.mean_linearized_variance,
            "variance_ratio": self.variance_ratio,
            "coverage": self.coverage,
            "replicates": self.replicates,
            "n_valid": self.n_valid,
            "n_degenerate": self.n_degenerate,
            "n_clamped": self.n_clamped,
            "fingerprint": self.fingerprint,
            "config": self.config,
            "timing": self.timing,
        }
        if include_replicates:
            d["per_replicate"] = self.per_replicate
        return d


def _one_replicate(
    r: int,
    config: SimulationConfig,
    design: SamplingDesign,
    population: np.ndarray,
    truth: float,
    reference: Optional[DiscreteMeasure],
) -> dict:
    row: dict[str, Any] = {"replicate": r}
    try:
        s = draw_sample(design, population, replicate_rng(config.master_seed, r))
        rep = estimate_with_variance(config.index, s, config.level, reference=reference)
    except DomainError as exc:
        row.update(status="degenerate", estimate=None, variance=None, raw_variance=None,
                   ci_lo=None, ci_hi=None, covered=None, n=None, reason=str(exc))
        return row
    lo, hi = rep.ci
    row.update(
        status="ok",
        estimate=rep.estimate,
        variance=rep.variance,
        raw_variance=rep.raw_variance,
        ci_lo=lo,
        ci_hi=hi,
        covered=bool(lo <= truth <= hi),
        n=rep.n_effective,
    )
    return row


def run(config: SimulationConfig, workers: int = 1) -> SimulationReport:
    """Run the experiment; the report does not depend on ``workers`` (except timing)."""
    start = time.perf_counter()
    population = config.population.materialize()
    design = build_design(config.design, population.size)
    pop_measure = DiscreteMeasure(population)
    truth = indexes.value(config.index, pop_measure)
    reference = pop_measure if config.linearize_on == "population" else None

    def task(r):
        return _one_replicate(r, config, design, population, truth, reference)

    if workers <= 1:
        rows = [task(r) for r in range(config.replicates)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(task, range(config.replicates)))
    rows.sort(key=lambda row: row["replicate"])

    ok = [row for row in rows if row["status"] == "ok"]
    est = np.array([row["estimate"] for row in ok])
    lin = np.array([row["variance"] for row in ok])
    n_valid = len(ok)
    if n_valid >= 2:
        # shifted moments: exact zeros when every replicate returns the same estimate
        dev = est - est[0]
        mean_est = float(est[0] + np.mean(dev))
        emp_var = float(np.var(dev, ddof=1))
        mean_lin = float(np.mean(lin))
        ratio = emp_var / mean_lin if mean_lin > 0 else None
        coverage = sum(row["covered"] for row in ok) / n_valid
    else:
        mean_est = float(est[0]) if n_valid else math.nan
        emp_var = mean_lin = math.nan
        ratio = None
        coverage = None

    return SimulationReport(
        true_value=truth,
        mean_estimate=mean_est,
        empirical_variance=emp_var,
        mean_linearized_variance=mean_lin,
        variance_ratio=ratio,
        coverage=coverage,
        replicates=config.replicates,
        n_valid=n_valid,
        n_degenerate=config.replicates - n_valid,
        n_clamped=sum(1 for row in ok if row["raw_variance"] < 0),
        fingerprint=config.fingerprint(),
        config=config.to_dict(),
        per_replicate=rows,
        timing=time.perf_counter() - start,
    )


SUMMARY_COLUMNS = ("fingerprint", "index", "design", "replicates", "true_value",
                   "mean_estimate", "variance_ratio", "coverage", "n_degenerate")


def summarize(reports: Sequence[SimulationReport]) -> list[dict]:
    """One row per report, sorted by config fingerprint."""
    if not reports:
        raise ValueError("nothing to summarize")
    rows = []
    for rep in reports:
        idx = rep.config["index"]
        name = idx["kind"] if "epsilon" not in idx else f"{idx['kind']}({idx['epsilon']:g})"
        rows.append({
            "fingerprint": rep.fingerprint,
            "index": name,
            "design": rep.config["design"].get("kind"),
            "replicates": rep.replicates,
            "true_value": rep.true_value,
            "mean_estimate": rep.mean_estimate,
            "variance_ratio": rep.variance_ratio,
            "coverage": rep.coverage,
            "n_degenerate": rep.n_degenerate,
        })
    return sorted(rows, key=lambda row: row["fingerprint"])
