"""Acceptance criteria, one PASS/FAIL line each.

Every test records its line in ``conftest.ACCEPTANCE``; the lines are printed
in the terminal summary (and immediately with ``-s``). Tolerances are the
stated ones; nothing here is relaxed to make a criterion pass.
"""

import json
import math
import time

import numpy as np
import pytest

import conftest
from conftest import ALL_KINDS, KIND_IDS, lognormal_measure, probe_points
from ineqlin import engine
from ineqlin import indexes as ix
from ineqlin.engine import IDENTITY, evaluate, gateaux_numeric, influence
from ineqlin.indexes import AMATO, GINI, ZENGA, as_composition, atkinson
from ineqlin.measure import DiscreteMeasure
from ineqlin.montecarlo import SimulationConfig, run
from ineqlin.survey import (
    SRSWOR,
    Poisson,
    SampleData,
    census,
    draw_sample,
    estimate_with_variance,
    variance_ht,
    variance_syg,
)


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    conftest.ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def populations(count=20, size=100):
    out = []
    for seed in range(count):
        m = lognormal_measure(seed, size)
        assert np.unique(m.values).size == size
        out.append(m)
    return out


# 1. closed form vs numerical Gateaux derivative

@pytest.mark.parametrize("kind", ALL_KINDS, ids=KIND_IDS)
def test_c1_closed_form_vs_oracle(kind):
    start = time.perf_counter()
    c = as_composition(kind)
    worst = 0.0
    for m in populations():
        for u in probe_points(m, 50):
            closed = ix.influence(kind, m, u)
            num = gateaux_numeric(c, u, m, t=1e-5, richardson=True)
            worst = max(worst, abs(closed - num) / (1 + abs(closed)))
    elapsed = time.perf_counter() - start
    report(f"C1 oracle {kind}", worst <= 1e-6 and elapsed < 10,
           f"max |IF - oracle|/(1+|IF|) = {worst:.2e} (tol 1e-6), {elapsed:.2f}s (< 10s)")


# 2. closed form vs composition engine

def relative_gap(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(b))
    gap = np.abs(a - b)
    return float(np.max(np.where(gap == 0, 0.0, gap / np.where(scale == 0, 1.0, scale))))


@pytest.mark.parametrize("kind", ALL_KINDS, ids=KIND_IDS)
def test_c2_closed_form_vs_engine(kind):
    start = time.perf_counter()
    c = as_composition(kind)
    worst_value = worst_if = 0.0
    for m in populations():
        worst_value = max(worst_value, relative_gap(ix.value(kind, m), evaluate(c, m)))
        grid = probe_points(m, 50)
        closed = ix.influence(kind, m, grid)
        eng = [influence(c, u, m) for u in grid]
        worst_if = max(worst_if, relative_gap(closed, eng))
    elapsed = time.perf_counter() - start
    ok = worst_value <= 1e-10 and worst_if <= 1e-10 and elapsed < 10
    report(f"C2 engine {kind}", ok,
           f"value rel gap {worst_value:.2e}, influence rel gap {worst_if:.2e} (tol 1e-10), "
           f"{elapsed:.2f}s (< 10s)")


# 3. fixtures

def test_c3_fixtures():
    small = DiscreteMeasure([1.0, 2.0, 3.0])
    two = DiscreteMeasure([1.0, 4.0])
    equal = DiscreteMeasure([2.5] * 7)
    checks = [
        ("gini{1,2,3}", ix.gini_value(small), 5 / 9),
        ("IF_gini(1)", ix.gini_influence(small, 1.0), 0.0),
        ("IF_gini(2)", ix.gini_influence(small, 2.0), -1 / 27),
        ("IF_gini(3)", ix.gini_influence(small, 3.0), 1 / 27),
        ("atkinson{1,4}", ix.atkinson_value(two, 0.5), 0.1),
        ("IF_atk(1)", ix.atkinson_influence(two, 1.0, 0.5), 0.03),
        ("IF_atk(4)", ix.atkinson_influence(two, 4.0, 0.5), -0.03),
        ("amato(equal)", ix.amato_value(equal), math.sqrt(2)),
        ("IF_amato(equal)", ix.amato_influence(equal, 2.5), 0.0),
        ("zenga{1,2,3}", ix.zenga_value(small), 29 / 30),
    ]
    m = lognormal_measure(0, 100)
    checks.append(("atkinson eps=0", ix.atkinson_value(m, 0.0), 0.0))
    checks.extend(("IF_atk eps=0", v, 0.0)
                  for v in ix.atkinson_influence(m, probe_points(m), 0.0))
    worst_name, worst = max(((name, abs(got - want)) for name, got, want in checks),
                            key=lambda p: p[1])
    report("C3 fixtures", worst <= 1e-12,
           f"{len(checks)} values, max abs error {worst:.2e} at {worst_name} (tol 1e-12)")


# 4. invariants over 50 seeded measures

def invariant_measures():
    return [lognormal_measure(seed, 60, weighted=seed % 2 == 1) for seed in range(50)]


@pytest.mark.parametrize("kind", ALL_KINDS, ids=KIND_IDS)
def test_c4_euler(kind):
    worst = 0.0
    for m in invariant_measures():
        s = float(np.dot(m.weights, ix.influence(kind, m, m.values)))
        worst = max(worst, abs(s) / (1 + m.mass()))
    report(f"C4 euler {kind}", worst <= 1e-9,
           f"max |sum w IF|/(1+N) = {worst:.2e} (tol 1e-9)")


@pytest.mark.parametrize("kind", ALL_KINDS, ids=KIND_IDS)
def test_c4_homogeneity(kind):
    worst_scale = worst_rep = 0.0
    for seed, m in enumerate(invariant_measures()):
        base = ix.value(kind, m)
        for c in (0.01, 3.0, 1e4):
            worst_scale = max(worst_scale, relative_gap(ix.value(kind, m.scale_weights(c)), base))
        rep = DiscreteMeasure(np.repeat(m.values, 3), np.repeat(m.weights, 3))
        worst_rep = max(worst_rep, relative_gap(ix.value(kind, rep), base))
    ok = worst_scale <= 1e-12 and worst_rep <= 1e-12
    report(f"C4 weight homogeneity {kind}", ok,
           f"weight scaling {worst_scale:.2e}, replication {worst_rep:.2e} (tol 1e-12)")


@pytest.mark.parametrize("kind", ALL_KINDS, ids=KIND_IDS)
def test_c4_y_scale(kind):
    worst = 0.0
    for m in invariant_measures():
        base = ix.value(kind, m)
        for lam in (0.25, 3.7, 1e3):
            worst = max(worst, relative_gap(ix.value(kind, m.scale_values(lam)), base))
    report(f"C4 y-scale {kind}", worst <= 1e-12, f"max rel gap {worst:.2e} (tol 1e-12)")


@pytest.mark.parametrize("kind", ALL_KINDS, ids=KIND_IDS)
def test_c4_chain_rule(kind):
    c = as_composition(kind)
    bare = c.with_outer(IDENTITY)
    worst = 0.0
    for m in invariant_measures():
        d = c.outer.derivative(engine.inner_value(c, m))
        for u in probe_points(m, 10):
            worst = max(worst, relative_gap(influence(c, u, m), d * influence(bare, u, m)))
    report(f"C4 chain rule {kind}", worst <= 1e-12, f"max rel gap {worst:.2e} (tol 1e-12)")


# 5. linearized variance and coverage by Monte Carlo

C5_KINDS = {"gini": GINI, "atkinson(0.5)": atkinson(0.5), "amato": AMATO, "zenga": ZENGA}
C5_RUNS = {}


def c5_report(name):
    if name not in C5_RUNS:
        kind = C5_KINDS[name]
        idx = {"kind": kind.name} if kind.epsilon is None else {"kind": kind.name,
                                                                  "epsilon": kind.epsilon}
        cfg = SimulationConfig.from_dict({
            "population": {"generator": "lognormal", "sigma": 1.0, "size": 1000, "seed": 2024},
            "design": {"kind": "srswor", "n": 100},
            "index": idx,
            "replicates": 2000,
            "master_seed": 7,
        })
        C5_RUNS[name] = run(cfg, workers=4)
    return C5_RUNS[name]


@pytest.mark.parametrize("name, lo, hi", [
    ("gini", 0.9, 1.1),
    ("atkinson(0.5)", 0.9, 1.1),
    ("amato", 0.85, 1.15),
    ("zenga", 0.85, 1.15),
])
def test_c5_variance_ratio(name, lo, hi):
    rep = c5_report(name)
    ratio = rep.variance_ratio
    report(f"C5 variance ratio {name}", ratio is not None and lo <= ratio <= hi,
           f"empirical/linearized = {ratio:.4f} (band [{lo}, {hi}]), "
           f"valid {rep.n_valid}/{rep.replicates}")


@pytest.mark.parametrize("name", ["gini", "atkinson(0.5)"])
def test_c5_coverage(name):
    rep = c5_report(name)
    report(f"C5 coverage {name}", 0.925 <= rep.coverage <= 0.97,
           f"95% CI coverage = {rep.coverage:.4f} (band [0.925, 0.97])")


def test_c5_runtime():
    for name in C5_KINDS:
        c5_report(name)
    elapsed = sum(rep.timing for rep in C5_RUNS.values())
    report("C5 runtime", elapsed < 60, f"{elapsed:.1f}s for 4 x 2000 replicates (< 60s)")


# 6. survey algebra

def test_c6_syg_textbook():
    rng = np.random.default_rng(31)
    pop = rng.lognormal(size=500)
    worst = 0.0
    for seed in range(20):
        design = SRSWOR(50, 500)
        s = draw_sample(design, pop, seed)
        f = design.n / design.N
        expected = design.N**2 * (1 - f) * np.var(s.y, ddof=1) / design.n
        worst = max(worst, relative_gap(variance_syg(s.y, s), expected))
    report("C6 SYG on SRSWOR", worst <= 1e-10, f"max rel gap to N^2(1-f)s^2/n {worst:.2e} (tol 1e-10)")


def test_c6_poisson_single_sum():
    rng = np.random.default_rng(32)
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(2, 60))
        pi = rng.uniform(0.05, 1.0, size=k)
        z = rng.normal(size=k)
        s = SampleData(labels=np.arange(k), y=rng.lognormal(size=k), pi=pi, design=Poisson())
        single = float(np.sum((1 - pi) / pi**2 * z**2))
        worst = max(worst, relative_gap(variance_ht(z, s), single))
    # double sum vs single sum differ only by summation order
    report("C6 Poisson HT single sum", worst <= 1e-13,
           f"max rel gap {worst:.2e} (summation-order rounding only)")


def test_c6_census():
    pop = lognormal_measure(3, 80).values
    bad = []
    for kind in ALL_KINDS:
        s = draw_sample(census(pop.size), pop, seed=0)
        rep = estimate_with_variance(kind, s)
        truth = ix.value(kind, DiscreteMeasure(pop))
        if not (rep.estimate == truth and rep.variance == 0.0 and rep.ci == (truth, truth)):
            bad.append(str(kind))
    report("C6 census pipeline", not bad,
           "all four indexes exact with zero variance" if not bad else f"mismatch: {bad}")


# 7. determinism

def test_c7_determinism():
    cfg = SimulationConfig.from_dict({
        "population": {"generator": "lognormal", "sigma": 1.0, "size": 300, "seed": 5},
        "design": {"kind": "srswor", "n": 30},
        "index": "zenga",
        "replicates": 300,
        "master_seed": 11,
    })

    def estimates(workers):
        rows = run(cfg, workers=workers).per_replicate
        return json.dumps([(r["replicate"], r["estimate"], r["variance"]) for r in rows])

    runs = [estimates(1), estimates(1), estimates(4), estimates(8)]
    report("C7 determinism", len(set(runs)) == 1,
           "per-replicate estimates byte-identical across 2 serial runs and 4/8 workers"
           if len(set(runs)) == 1 else "per-replicate estimates differ")
