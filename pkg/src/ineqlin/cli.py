"""Command-line interface.

Exit codes: 0 success, 2 parse error, 3 domain error, 4 diagnostic failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import engine, indexes
from .errors import DesignError, DomainError
from .indexes import IndexKind
from .measure import DiscreteMeasure
from .montecarlo import REPLICATE_COLUMNS, SimulationConfig, run
from .survey import (
    SRSWOR,
    Bernoulli,
    Poisson,
    SampleData,
    StratifiedSRSWOR,
    estimate_with_variance,
)

SCHEMA = "ineq-report/1"

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_DIAGNOSTIC = 4


class ParseError(Exception):
    pass


@dataclass
class Table:
    columns: dict[str, list[str]]
    lines: list[int]


def _read_csv(path: str, required: Sequence[str]) -> Table:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"{path}: line 1: missing column(s) {', '.join(missing)}")
        cols: dict[str, list[str]] = {h: [] for h in header}
        lines = []
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            for h, cell in zip(header, row):
                cols[h].append(cell.strip())
            lines.append(reader.line_num)
    if not lines:
        raise ParseError(f"{path}: no data rows")
    return Table(cols, lines)


def _floats(table: Table, column: str, path: str) -> np.ndarray:
    out = np.empty(len(table.lines))
    for k, (cell, line) in enumerate(zip(table.columns[column], table.lines)):
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(f"{path}: line {line}: {column} = {cell!r} is not a number") from None
        if not math.isfinite(v):
            raise ParseError(f"{path}: line {line}: {column} = {cell!r} is not finite")
        out[k] = v
    return out


def _check_positive(values, table, column, path, strict=True):
    bad = values <= 0 if strict else values < 0
    if np.any(bad):
        k = int(np.argmax(bad))
        rel = "> 0" if strict else ">= 0"
        raise ParseError(
            f"{path}: line {table.lines[k]}: {column} = {table.columns[column][k]} must be {rel}"
        )


def read_population(path: str) -> tuple[DiscreteMeasure, Table]:
    table = _read_csv(path, ["y"])
    y = _floats(table, "y", path)
    w = None
    if "weight" in table.columns:
        w = _floats(table, "weight", path)
        _check_positive(w, table, "weight", path)
    return DiscreteMeasure(y, w), table


def _check_index_support(kind: IndexKind, y: np.ndarray, table: Table, path: str) -> None:
    """Domain check naming the first offending line."""
    if indexes.requires_positive(kind) or kind.name == "gini":
        strict = indexes.requires_positive(kind)
        bad = y <= 0 if strict else y < 0
        if np.any(bad):
            k = int(np.argmax(bad))
            rel = "> 0" if strict else ">= 0"
            raise DomainError(
                f"{path}: line {table.lines[k]}: y = {table.columns['y'][k]} "
                f"but {kind} needs y {rel}"
            )


def _kinds(args) -> list[IndexKind]:
    names = args.index or ["gini", "amato", "zenga", "atkinson"]
    return [IndexKind.parse(n, args.epsilon) for n in names]


def _kind_json(kind: IndexKind) -> dict:
    return {"index": kind.name, "epsilon": kind.epsilon}


def _emit(obj: dict, out) -> None:
    json.dump({"schema": SCHEMA, **obj}, out, indent=2, allow_nan=False)
    out.write("\n")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


# -- commands ---------------------------------------------------------------------

def cmd_compute(args, out) -> int:
    m, table = read_population(args.population)
    y = _floats(table, "y", args.population)
    results = []
    for kind in _kinds(args):
        _check_index_support(kind, y, table, args.population)
        results.append({**_kind_json(kind), "value": indexes.value(kind, m)})
    if args.json:
        _emit({"command": "compute", "population": args.population, "atoms": len(m),
               "mass": m.mass(), "total": m.total(), "results": results}, out)
    else:
        for kind, r in zip(_kinds(args), results):
            out.write(f"{kind}\t{_fmt(r['value'])}\n")
    return EXIT_OK


def cmd_influence(args, out) -> int:
    m, table = read_population(args.population)
    y = _floats(table, "y", args.population)
    kind = IndexKind.parse(args.index, args.epsilon)
    _check_index_support(kind, y, table, args.population)
    if args.all_atoms:
        points = np.unique(m.values)
    elif args.at:
        points = np.asarray(args.at, dtype=float)
    else:
        raise ParseError("influence needs --at <u> or --all-atoms")

    values = np.atleast_1d(indexes.influence(kind, m, points))
    rows = [{"u": float(u), "influence": float(v)} for u, v in zip(points, values)]
    max_gap = None
    if args.check_oracle:
        comp = indexes.as_composition(kind, m)
        max_gap = 0.0
        for row in rows:
            oracle = engine.gateaux_numeric(comp, row["u"], m, t=args.step)
            row["oracle"] = oracle
            row["gap"] = abs(row["influence"] - oracle)
            max_gap = max(max_gap, row["gap"])

    if args.json:
        report = {"command": "influence", **_kind_json(kind), "value": indexes.value(kind, m),
                  "rows": rows}
        if max_gap is not None:
            report.update(max_gap=max_gap, tol=args.tol, passed=max_gap <= args.tol)
        _emit(report, out)
    else:
        for row in rows:
            line = f"{_fmt(row['u'])}\t{_fmt(row['influence'])}"
            if "oracle" in row:
                line += f"\t{_fmt(row['oracle'])}\t{row['gap']:.3e}"
            out.write(line + "\n")
        if max_gap is not None:
            out.write(f"max gap {max_gap:.3e} (tol {args.tol:g})\n")
    if max_gap is not None and max_gap > args.tol:
        return EXIT_DIAGNOSTIC
    return EXIT_OK


def _stratum_sizes(pairs: Sequence[str]) -> dict[str, int]:
    sizes = {}
    for p in pairs:
        h, sep, n = p.partition("=")
        if not sep:
            raise ParseError(f"--stratum-size expects LABEL=N, got {p!r}")
        try:
            sizes[h.strip()] = int(n)
        except ValueError:
            raise ParseError(f"--stratum-size expects an integer size, got {p!r}") from None
    return sizes


def _sample_design(args, table: Table, pi: np.ndarray, path: str):
    n = pi.size
    if args.design == "srswor":
        if args.pop_size is None:
            raise DesignError("joint inclusion probabilities underdetermined: srswor needs --pop-size")
        design = SRSWOR(n, args.pop_size)
        bad = np.abs(pi - design.pi) > 1e-9 * design.pi
        if np.any(bad):
            k = int(np.argmax(bad))
            raise DesignError(
                f"{path}: srswor with N={args.pop_size} and n={n} rows implies pi = {design.pi:.6g}, "
                f"but line {table.lines[k]} has pi = {table.columns['pi'][k]}"
            )
        return design, None
    if args.design == "poisson":
        return Poisson(), None
    if args.design == "bernoulli":
        if np.any(pi != pi[0]):
            raise DesignError(f"{path}: bernoulli design needs a common pi for every row")
        return Bernoulli(float(pi[0])), None
    # stratified
    if "stratum" not in table.columns:
        raise DesignError(f"{path}: stratified design needs a 'stratum' column")
    strata = np.array(table.columns["stratum"], dtype=object)
    sizes = _stratum_sizes(args.stratum_size or [])
    labels, counts = np.unique(strata.astype(str), return_counts=True)
    missing = [h for h in labels if h not in sizes]
    if missing:
        raise DesignError(
            f"joint inclusion probabilities underdetermined: no --stratum-size for {missing}"
        )
    design = StratifiedSRSWOR({h: sizes[h] for h in labels},
                              dict(zip(labels.tolist(), counts.tolist())))
    for k, h in enumerate(strata):
        expect = design.parts[h].pi
        if abs(pi[k] - expect) > 1e-9 * expect:
            raise DesignError(
                f"{path}: line {table.lines[k]}: pi = {table.columns['pi'][k]} but stratum {h} "
                f"implies {expect:.6g}"
            )
    return design, strata.astype(str)


def cmd_estimate(args, out) -> int:
    path = args.sample
    table = _read_csv(path, ["y", "pi"])
    y = _floats(table, "y", path)
    pi = _floats(table, "pi", path)
    bad = (pi <= 0) | (pi > 1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ParseError(f"{path}: line {table.lines[k]}: pi = {table.columns['pi'][k]} not in (0, 1]")
    if "label" in table.columns:
        labels = np.array(table.columns["label"])
        if np.unique(labels).size != labels.size:
            raise ParseError(f"{path}: labels must be distinct")
    else:
        labels = np.arange(y.size)
    kind = IndexKind.parse(args.index, args.epsilon)
    _check_index_support(kind, y, table, path)
    design, strata = _sample_design(args, table, pi, path)
    s = SampleData(labels=labels, y=y, pi=pi, design=design, strata=strata)
    rep = estimate_with_variance(kind, s, args.level)
    _emit({"command": "estimate", **_kind_json(kind), "design": design.describe(),
           **rep.as_dict()}, out)
    return EXIT_OK


def _load_config(path: str, seed: Optional[int]) -> SimulationConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if seed is not None:
        raw["master_seed"] = seed
    try:
        return SimulationConfig.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ParseError(f"{path}: malformed config: {exc}") from None


def cmd_simulate(args, out) -> int:
    config = _load_config(args.config, args.seed)
    report = run(config, workers=args.workers)
    if args.per_replicate:
        with open(args.per_replicate, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPLICATE_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            for row in report.per_replicate:
                writer.writerow({k: ("" if row.get(k) is None else row.get(k))
                                 for k in REPLICATE_COLUMNS})
    d = report.as_dict()
    d = {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}
    _emit({"command": "simulate", **d}, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ineqlin",
        description="Inequality indexes, influence functions and linearized variance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def index_flags(p, multiple=False):
        if multiple:
            p.add_argument("--index", action="append", choices=indexes.NAMES,
                           help="index to compute (repeatable; default: all four)")
        else:
            p.add_argument("--index", required=True, choices=indexes.NAMES)
        p.add_argument("--epsilon", type=float, default=None,
                       help="Atkinson inequality aversion in [0, 1) (default 0.5)")

    p = sub.add_parser("compute", help="index values of a population file")
    p.add_argument("population")
    index_flags(p, multiple=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("influence", help="influence function values")
    p.add_argument("population")
    index_flags(p)
    where = p.add_mutually_exclusive_group()
    where.add_argument("--at", type=float, action="append", metavar="U")
    where.add_argument("--all-atoms", action="store_true")
    p.add_argument("--check-oracle", action="store_true",
                   help="compare with a numerical Gateaux derivative")
    p.add_argument("--step", type=float, default=None,
                   help="oracle step (default 1e-5 * population mass)")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("estimate", help="plug-in estimate with linearized variance")
    p.add_argument("sample")
    index_flags(p)
    p.add_argument("--design", choices=("srswor", "poisson", "bernoulli", "stratified"),
                   required=True)
    p.add_argument("--pop-size", type=int, default=None)
    p.add_argument("--stratum-size", action="append", metavar="LABEL=N",
                   help="population size of a stratum (stratified design; repeatable)")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--json", action="store_true", help="accepted for symmetry; output is JSON")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="Monte Carlo check of the linearized variance")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-replicate", metavar="PATH")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, DesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
