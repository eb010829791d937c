"""Command-line front end: ``treedist {dist,batch,gen,convert,selftest}``."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Optional, Sequence

from .cost import (
    CostFileError, CostFunction, mapping_cost, parse_cost_file, tree_alphabet, unit_cost,
    validate_metric,
)
from .dp import distance
from .mapping import DistanceClass, OracleCapExceeded, brute_force_distance, is_valid
from .matching import max_weight_bijection, max_weight_matching
from .solver import SolverConfig, Status
from .tree import (
    Tree, TreeSyntaxError, iter_cslogs, parse_bracket, random_tree, render_bracket,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_TIMEOUT = 3

CSV_HEADER = ["instance", "n1", "n2", "class", "method", "distance", "status", "ms", "nodes"]
CLASSES = [c.value for c in DistanceClass]
METHODS = ["dp", "naive", "oracle"]


class InputError(Exception):
    pass


def _warn(msg: str) -> None:
    print(f"treedist: {msg}", file=sys.stderr)


def _time_limit(value: Optional[float]) -> Optional[float]:
    if value is not None:
        return value
    env = os.environ.get("TREEDIST_TIME_LIMIT")
    if not env:
        return None
    try:
        return float(env)
    except ValueError:
        raise InputError(f"TREEDIST_TIME_LIMIT is not a number: {env!r}") from None


def _solver_cfg(limit: Optional[float]) -> SolverConfig:
    try:
        return SolverConfig(time_limit=_time_limit(limit))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _tree_arg(arg: str) -> Tree:
    text = _read_text(arg[1:]).strip() if arg.startswith("@") else arg
    try:
        return parse_bracket(text)
    except TreeSyntaxError as exc:
        raise InputError(f"bad tree {arg!r}: {exc}") from None


def _load_cost(spec: str, trees: Sequence[Tree], allow_nonmetric: bool) -> tuple[CostFunction, bool]:
    """Cost function plus whether pair weights must be clamped at zero."""
    if spec == "unit":
        return unit_cost(), False
    try:
        cost = parse_cost_file(_read_text(spec))
    except CostFileError as exc:
        raise InputError(f"{spec}: {exc}") from None
    problems = validate_metric(cost, tree_alphabet(*trees))
    if not problems:
        return cost, False
    if not allow_nonmetric:
        raise InputError(f"{spec}: cost is not a metric: {problems[0]}"
                         + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""))
    _warn(f"{spec}: cost is not a metric ({len(problems)} violations); clamping weights at 0")
    return cost, True


def format_distance(cost: CostFunction, value: int) -> str:
    return str(Fraction(value, cost.scale))


def _span(text: str, what: str, parts: int) -> list[int]:
    try:
        nums = [int(p) for p in text.split(":")]
    except ValueError:
        raise InputError(f"{what}: expected {parts} integers separated by ':', got {text!r}") from None
    if len(nums) != parts:
        raise InputError(f"{what}: expected {parts} integers separated by ':', got {text!r}")
    return nums


def _csv_list(text: str, allowed: Sequence[str], what: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in allowed]
    if bad or not items:
        raise InputError(f"{what}: expected a comma list from {', '.join(allowed)}, got {text!r}")
    return items


# --------------------------------------------------------------------------
# dist


def cmd_dist(args) -> int:
    t1, t2 = _tree_arg(args.tree1), _tree_arg(args.tree2)
    cost, clamp = _load_cost(args.cost, (t1, t2), args.allow_nonmetric)
    cfg = _solver_cfg(args.time_limit)
    try:
        res = distance(t1, t2, cost, args.distance, args.method, cfg, clamp_negative=clamp)
    except OracleCapExceeded as exc:
        raise InputError(str(exc)) from None
    print(format_distance(cost, res.distance))
    if args.show_mapping:
        for x, y in sorted(res.mapping, key=lambda p: (t1.pre[p[0]], t2.pre[p[1]])):
            print(f"({t1.pre[x]}, {t2.pre[y]})")
    if res.stats.status is Status.TIMEOUT:
        _warn("time limit reached; the printed distance is an upper bound")
        return EXIT_TIMEOUT
    return EXIT_OK


# --------------------------------------------------------------------------
# batch


def load_dataset(path: str, fmt: str = "auto") -> list[Tree]:
    text = _read_text(path)
    lines = text.splitlines()
    if fmt == "auto":
        body = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
        numeric = all(tok.lstrip("-").isdigit() for ln in body for tok in ln.split())
        fmt = "cslogs" if body and numeric else "bracket"
    trees: list[Tree] = []
    bad = 0
    if fmt == "cslogs":
        for line_no, got in iter_cslogs(lines):
            if isinstance(got, TreeSyntaxError):
                bad += 1
            else:
                trees.append(got)
    else:
        for line in lines:
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                trees.append(parse_bracket(s))
            except TreeSyntaxError:
                bad += 1
    if bad:
        _warn(f"{path}: skipped {bad} malformed records")
    return trees


def _buckets(spec: Optional[str], trees: Sequence[Tree]) -> list[tuple[int, int]]:
    if spec is None:
        total = max((len(t) for t in trees), default=1) * 2
        return [(2, total + 1)]
    lo, hi, step = _span(spec, "--bucket-by-total-nodes", 3)
    if step <= 0 or hi <= lo:
        raise InputError("--bucket-by-total-nodes needs lo < hi and step > 0")
    return [(a, min(a + step, hi)) for a in range(lo, hi, step)]


def _sample_pairs(rng: random.Random, sizes: Sequence[int], lo: int, hi: int, k: int):
    """Up to ``k`` distinct index pairs i < j with lo <= n_i + n_j < hi."""
    n = len(sizes)
    if n * (n - 1) // 2 <= 2_000_000:
        cands = [(i, j) for i in range(n) for j in range(i + 1, n) if lo <= sizes[i] + sizes[j] < hi]
        if len(cands) <= k:
            return cands
        return sorted(rng.sample(cands, k))
    seen: set[tuple[int, int]] = set()
    for _ in range(200 * k):
        if len(seen) == k:
            break
        i, j = sorted(rng.sample(range(n), 2))
        if lo <= sizes[i] + sizes[j] < hi:
            seen.add((i, j))
    return sorted(seen)


def _run_one(job):
    t1, t2, cls, method, limit = job
    start = time.perf_counter()
    try:
        res = distance(t1, t2, unit_cost(), cls, method, SolverConfig(time_limit=limit))
    except OracleCapExceeded:
        return None, "skipped", (time.perf_counter() - start) * 1000.0, 0
    status = "ok" if res.stats.status is Status.OPTIMAL else "timeout"
    return res.distance, status, res.stats.wall_ms, res.stats.solver_nodes


def cmd_batch(args) -> int:
    trees = load_dataset(args.input, args.format)
    classes = _csv_list(args.distances, CLASSES, "--distances")
    methods = _csv_list(args.methods, METHODS, "--methods")
    limit = _time_limit(args.time_limit)
    if args.pairs < 0:
        raise InputError("--pairs must be nonnegative")
    rng = random.Random(args.seed)
    sizes = [len(t) for t in trees]
    plan = []
    for lo, hi in _buckets(args.bucket_by_total_nodes, trees):
        pairs = _sample_pairs(rng, sizes, lo, hi, args.pairs)
        if not pairs:
            _warn(f"bucket {lo}-{hi - 1}: no tree pairs in range")
        plan.append(((lo, hi), pairs))

    jobs, keys = [], []
    for bucket, pairs in plan:
        for i, j in pairs:
            for cls in classes:
                for method in methods:
                    jobs.append((trees[i], trees[j], cls, method, limit))
                    keys.append((bucket, f"{i}-{j}", i, j, cls, method))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=4))
    else:
        results = [_run_one(j) for j in jobs]

    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_HEADER)
    stats: dict = {}
    for (bucket, inst, i, j, cls, method), (d, status, ms, nodes) in zip(keys, results):
        if d is None:
            shown = ""
        else:
            shown = ("<=" if status == "timeout" else "") + str(d)
        ms_out = 0.0 if args.deterministic else ms
        out.writerow([inst, sizes[i], sizes[j], cls, method, shown, status, f"{ms_out:.1f}", nodes])
        agg = stats.setdefault((bucket, cls, method), [0, 0.0, 0])
        agg[0] += 1
        agg[1] += ms
        agg[2] += status == "timeout"

    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(buf.getvalue())
        except OSError as exc:
            raise InputError(f"cannot write {args.output}: {exc.strerror}") from None
        summary_stream = sys.stdout
    else:
        sys.stdout.write(buf.getvalue())
        summary_stream = sys.stderr

    print(f"{'nodes':>10} {'class':>7} {'method':>7} {'count':>6} {'avg_s':>9} {'t.o.':>5}",
          file=summary_stream)
    for (lo, hi), _ in plan:
        for cls in classes:
            for method in methods:
                count, ms, to = stats.get(((lo, hi), cls, method), [0, 0.0, 0])
                avg = f"{ms / count / 1000.0:.3f}" if count else "-"
                print(f"{f'{lo}-{hi - 1}':>10} {cls:>7} {method:>7} {count:>6} {avg:>9} {to:>5}",
                      file=summary_stream)
    return EXIT_OK


# --------------------------------------------------------------------------
# gen / convert


def cmd_gen(args) -> int:
    lo, hi = _span(args.nodes, "--nodes", 2)
    if lo < 1 or hi < lo:
        raise InputError("--nodes needs 1 <= lo <= hi")
    if args.max_degree < 0 or (args.max_degree == 0 and hi > 1):
        raise InputError("--max-degree 0 only allows single-node trees")
    if args.labels < 1 or args.count < 0:
        raise InputError("--labels must be positive and --count nonnegative")
    rng = random.Random(args.seed)
    for _ in range(args.count):
        n = rng.randint(lo, hi)
        print(render_bracket(random_tree(rng, n, args.max_degree, args.labels)))
    return EXIT_OK


def cmd_convert(args) -> int:
    lines = _read_text(args.input).splitlines()
    out_lines = []
    bad = 0
    for line_no, got in iter_cslogs(lines):
        if isinstance(got, TreeSyntaxError):
            if args.strict:
                raise InputError(f"{args.input}:{line_no}: {got}")
            _warn(f"{args.input}:{line_no}: skipped: {got}")
            bad += 1
        else:
            out_lines.append(render_bracket(got))
    text = "".join(s + "\n" for s in out_lines)
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputError(f"cannot write {args.output}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)
    if bad:
        _warn(f"skipped {bad} malformed records")
    return EXIT_OK


# --------------------------------------------------------------------------
# selftest


def _enum_matching(w) -> int:
    p, q = len(w), len(w[0]) if w else 0
    best = 0
    for k in range(min(p, q) + 1):
        for rows in itertools.combinations(range(p), k):
            for cols in itertools.permutations(range(q), k):
                if all(w[i][j] is not None for i, j in zip(rows, cols)):
                    best = max(best, sum(w[i][j] for i, j in zip(rows, cols)))
    return best


def _enum_bijection(w) -> Optional[int]:
    p, q = len(w), len(w[0]) if w else 0
    if p != q:
        return None
    vals = [sum(w[i][j] for i, j in enumerate(perm)) for perm in itertools.permutations(range(q))
            if all(w[i][j] is not None for i, j in enumerate(perm))]
    return max(vals) if vals else None


def _pair(rng: random.Random, total: int) -> tuple[Tree, Tree]:
    n1 = rng.randint(1, total - 1)
    n2 = rng.randint(1, total - n1)
    return random_tree(rng, n1, 3, 3), random_tree(rng, n2, 3, 3)


def run_selftest(seed: int, trials: int, inject_fault: bool = False, out=None) -> tuple[int, int]:
    """Run each suite ``trials`` times; return (checks, failures)."""
    out = out or sys.stdout
    rng = random.Random(seed)
    cost = unit_cost()
    skew = 1 if inject_fault else 0
    tally: dict[str, list[int]] = {}

    def check(suite: str, ok: bool) -> None:
        t = tally.setdefault(suite, [0, 0])
        t[0] += 1
        t[1] += not ok

    for _ in range(trials):
        t1, t2 = _pair(rng, 10)
        for cls in DistanceClass:
            got = {m: distance(t1, t2, cost, cls, m) for m in METHODS}
            values = {m: r.distance for m, r in got.items()}
            values["dp"] += skew
            check("cross-method", len(set(values.values())) == 1)
            for r in got.values():
                check("cross-method", is_valid(cls, t1, t2, r.mapping)
                      and mapping_cost(cost, t1, t2, r.mapping) == r.distance)

        t1, t2 = _pair(rng, 24)
        d = [distance(t1, t2, cost, cls).distance for cls in DistanceClass]
        check("chain", all(a <= b for a, b in zip(d, d[1:])))

        p, q = rng.randint(1, 4), rng.randint(1, 4)
        w = [[None if rng.random() < 0.1 else rng.randint(0, 20) for _ in range(q)] for _ in range(p)]
        check("matching", max_weight_matching(w)[0] == _enum_matching(w))
        bij = max_weight_bijection(w)
        check("matching", (bij[0] if bij else None) == _enum_bijection(w))

        a, b, c = (random_tree(rng, rng.randint(1, 5), 3, 3) for _ in range(3))
        dab = distance(a, b, cost).distance
        dba = distance(b, a, cost).distance
        dbc = distance(b, c, cost).distance
        dac = distance(a, c, cost).distance
        check("metric", distance(a, a, cost).distance == 0)
        check("metric", dab == dba)
        check("metric", dac <= dab + dbc)
        check("metric", brute_force_distance(a, b, cost)[0] == dab)

    checks = fails = 0
    for suite in ("cross-method", "chain", "matching", "metric"):
        n, f = tally.get(suite, [0, 0])
        checks += n
        fails += f
        print(f"{suite:>13}: {n - f}/{n} passed", file=out)
    print(f"selftest: {checks} checks, {fails} failures", file=out)
    return checks, fails


def cmd_selftest(args) -> int:
    if args.trials < 0:
        raise InputError("--trials must be nonnegative")
    _, fails = run_selftest(args.seed, args.trials, args.inject_fault)
    return EXIT_OK if fails == 0 else EXIT_FAIL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="treedist", description="Distances between unordered labeled trees.")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dist", help="distance between two trees")
    d.add_argument("--distance", choices=CLASSES, default="edit")
    d.add_argument("--method", choices=METHODS, default="dp")
    d.add_argument("--cost", default="unit", help="'unit' or a cost file")
    d.add_argument("--time-limit", type=float, default=None, help="seconds (default: $TREEDIST_TIME_LIMIT)")
    d.add_argument("--show-mapping", action="store_true")
    d.add_argument("--allow-nonmetric", action="store_true")
    d.add_argument("tree1", help="bracket string or @file")
    d.add_argument("tree2", help="bracket string or @file")
    d.set_defaults(func=cmd_dist)

    b = sub.add_parser("batch", help="run many pairs from a dataset and write CSV")
    b.add_argument("--input", required=True)
    b.add_argument("--format", choices=["auto", "bracket", "cslogs"], default="auto")
    b.add_argument("--pairs", type=int, default=100, help="pairs per bucket")
    b.add_argument("--bucket-by-total-nodes", metavar="LO:HI:STEP")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--methods", default="dp")
    b.add_argument("--distances", default="edit")
    b.add_argument("--time-limit", type=float, default=None)
    b.add_argument("--output")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--deterministic", action="store_true", help="write 0 in the ms column")
    b.set_defaults(func=cmd_batch)

    g = sub.add_parser("gen", help="random trees in bracket format")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--nodes", default="1:10", metavar="LO:HI")
    g.add_argument("--max-degree", type=int, default=4)
    g.add_argument("--labels", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("convert", help="convert a CSLOGS file to bracket lines")
    c.add_argument("--from", dest="source", choices=["cslogs"], required=True)
    c.add_argument("--input", required=True)
    c.add_argument("--output")
    c.add_argument("--strict", action="store_true")
    c.set_defaults(func=cmd_convert)

    s = sub.add_parser("selftest", help="randomized consistency checks")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=20)
    s.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_selftest)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        _warn(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
