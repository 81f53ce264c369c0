"""Seeded trial runner and command-line entry point.

Each trial gets a fresh oracle. A failed attempt is retried with the
sub-seed ``derive_key(seed, attempt)``; a success only counts once its
certificate has been checked against the oracle transcript.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ._hash import derive_key
from .altstrat import spanning_tree_strategy, two_phase_strategy
from .errors import ParameterError, PhaseFailure, StrategyFailure
from .graphtools import SimpleGraph
from .oracle import Oracle
from .params import ParamSet
from .strategy import five_phase_strategy
from .verify import (BIPARTITE_MIN, booster_check, is_hamiltonian_exact, lower_bound_batch,
                     nprops_check, pseudorandom_check, validate_certificate, validate_tree)

STRATEGIES = ("five-phase", "two-phase", "spanning-tree")
CSV_COLUMNS = ["seed", "attempt", "status", "failed_phase", "queries", "positives",
               "positives_phase1", "positives_phase2", "positives_phase3",
               "positives_phase4", "positives_phase5", "n", "p", "wall_ms"]
SCHEMA = 1
OUT_ENV = "HAMQUERY_OUT"


def resolve_p(n: int, formula: str, c_slack: float = 10.0) -> float:
    """Edge probability from a formula string.

    ``threshold`` or ``threshold+c`` gives (ln n + ln ln n + c)/n, ``cap``
    gives 10 ln n / n, ``lnsq`` gives (ln n)^2 / n, ``<f>ln`` gives
    f ln n / n, and a bare number is taken literally.
    """
    ln = math.log(n)
    f = formula.strip().replace(" ", "")
    if f.startswith("threshold"):
        rest = f[len("threshold"):]
        c = float(rest) if rest else c_slack
        p = (ln + math.log(ln) + c) / n
    elif f == "cap":
        p = 10 * ln / n
    elif f == "lnsq":
        p = ln * ln / n
    elif f.endswith("ln"):
        p = float(f[:-2]) * ln / n
    else:
        try:
            p = float(f)
        except ValueError:
            raise ParameterError(f"unrecognised p formula {formula!r}") from None
    return min(1.0, max(0.0, p))


def parse_seeds(spec: str) -> list[int]:
    """``B..E`` (inclusive), ``B+K`` (K seeds from B) or a comma list."""
    spec = spec.strip()
    if ".." in spec:
        a, b = spec.split("..", 1)
        end = sum(int(x) for x in b.split("+"))
        seeds = list(range(int(a), end + 1))
    elif "+" in spec:
        a, k = spec.split("+", 1)
        seeds = list(range(int(a), int(a) + int(k)))
    else:
        seeds = [int(s) for s in spec.split(",") if s.strip()]
    if not seeds:
        raise ParameterError("empty seed list")
    return seeds


@dataclass
class RunConfig:
    strategy: str
    n: int
    p: float
    seeds: list
    params: dict = field(default_factory=dict)
    retries: int = 0
    out_dir: str | None = None
    jobs: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"unknown strategy {self.strategy!r}")
        if self.n < 4:
            raise ParameterError("n must be at least 4")
        if not self.seeds:
            raise ParameterError("no seeds")
        if self.retries < 0:
            raise ParameterError("retries must be non-negative")
        if not (0.0 <= self.p <= 1.0):
            raise ParameterError("p must lie in [0, 1]")

    def paramset(self) -> ParamSet:
        return ParamSet.from_mapping(self.n, self.params)


@dataclass
class TrialRow:
    seed: int
    attempt: int
    status: str
    failed_phase: str
    queries: int
    positives: int
    positives_phase1: int
    positives_phase2: int
    positives_phase3: int
    positives_phase4: int
    positives_phase5: int
    n: int
    p: float
    wall_ms: int
    reason: str = ""
    certificate: str = ""


@dataclass
class RunReport:
    config: dict
    rows: list

    def aggregate(self) -> dict:
        return aggregate(self.rows)

    def to_json(self) -> str:
        doc = {"schema": SCHEMA, "config": self.config,
               "rows": [asdict(r) for r in self.rows], "aggregate": self.aggregate()}
        return json.dumps(doc, sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
        return buf.getvalue()


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def aggregate(rows: list) -> dict:
    """Per-seed outcome (last attempt) summarised; a pure function of rows."""
    last: dict = {}
    for r in rows:
        if r.seed not in last or r.attempt > last[r.seed].attempt:
            last[r.seed] = r
    wins = [r for r in last.values() if r.status == "ok"]
    ratios = sorted(r.positives / r.n for r in wins)
    out = {"seeds": len(last), "attempts": len(rows), "successes": len(wins),
           "success_rate": len(wins) / len(last) if last else 0.0,
           "mean_positives_per_n": float(np.mean(ratios)) if ratios else None,
           "quantiles_positives_per_n": {}}
    if ratios:
        for q in (0.1, 0.5, 0.9):
            out["quantiles_positives_per_n"][str(q)] = float(np.quantile(ratios, q))
    fails: dict = {}
    for r in rows:
        if r.status != "ok":
            key = f"{r.failed_phase}:{r.reason}"
            fails[key] = fails.get(key, 0) + 1
    out["failures"] = dict(sorted(fails.items()))
    return out


def sub_seed(seed: int, attempt: int) -> int:
    return seed if attempt == 0 else derive_key(seed, attempt) & ((1 << 63) - 1)


def run_one(cfg: RunConfig, seed: int, attempt: int, params: ParamSet | None = None) -> TrialRow:
    """One attempt on a fresh oracle."""
    params = cfg.paramset() if params is None else params
    s = sub_seed(seed, attempt)
    o = Oracle(cfg.n, cfg.p, s)
    t0 = time.perf_counter()
    by_phase: dict = {}
    status, failed, reason, digest = "ok", "", "", ""
    try:
        if cfg.strategy == "five-phase":
            cert = five_phase_strategy(o, params, alg_seed=s).certificate
        elif cfg.strategy == "two-phase":
            cert = two_phase_strategy(o, params, alg_seed=s)
        else:
            edges = spanning_tree_strategy(o)
            v = validate_tree(edges, o)
            cert = None
            by_phase = {"phase1": o.stats().positives}
            digest = hashlib.sha256(np.asarray(edges, dtype=np.int64).tobytes()).hexdigest()[:16]
            if not v.ok:
                status, failed, reason = "invalid", "", v.reason
        if cert is not None:
            by_phase = cert.positives_by_phase
            v = validate_certificate(cert, o)
            digest = cert.digest()
            if not v.ok:
                status, reason = "invalid", v.reason
    except PhaseFailure as exc:
        status, failed, reason = "fail", str(exc.phase), exc.reason
    except StrategyFailure as exc:
        status, failed, reason = "fail", exc.stage, exc.reason
    wall = int(round((time.perf_counter() - t0) * 1000)) if cfg.timing else 0
    st = o.stats()
    return TrialRow(seed=seed, attempt=attempt, status=status, failed_phase=failed,
                    queries=st.total, positives=st.positives,
                    **{f"positives_phase{i}": int(by_phase.get(f"phase{i}", 0)) for i in range(1, 6)},
                    n=cfg.n, p=cfg.p, wall_ms=wall, reason=reason, certificate=digest)


def _run_seed(cfg: RunConfig, seed: int) -> list:
    params = cfg.paramset()
    rows = []
    for attempt in range(cfg.retries + 1):
        row = run_one(cfg, seed, attempt, params)
        rows.append(row)
        if row.status == "ok":
            break
    return rows


def run_trials(cfg: RunConfig, progress=None) -> RunReport:
    rows = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            for chunk in pool.map(_run_seed, [cfg] * len(cfg.seeds), cfg.seeds):
                rows.extend(chunk)
    else:
        for seed in cfg.seeds:
            chunk = _run_seed(cfg, seed)
            rows.extend(chunk)
            if progress:
                progress(chunk[-1])
    rows.sort(key=lambda r: (r.seed, r.attempt))
    conf = {k: v for k, v in asdict(cfg).items() if k not in ("out_dir", "jobs", "timing")}
    return RunReport(conf, rows)


def emit(report: RunReport, out_dir: str, formats=("json", "csv"), stem: str = "report") -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for fmt in formats:
        path = os.path.join(out_dir, f"{stem}.{fmt}")
        text = report.to_json() if fmt == "json" else report.to_csv()
        with open(path, "w") as fh:
            fh.write(text)
        paths.append(path)
    return paths


# -- command line ------------------------------------------------------------------

RUN_KEYS = {"strategy", "n", "p", "p-formula", "seeds", "retries", "out", "jobs", "format"}


def read_config(path: str) -> tuple[dict, dict]:
    """Flat ``key=value`` file: run flags by their CLI names, anything else
    a ParamSet knob. Blank lines and ``#`` comments are ignored."""
    flags, params = {}, {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            (flags if k in RUN_KEYS else params)[k] = v
    return flags, params


def _kv(items) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise ParameterError(f"--param expects key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_run(args) -> int:
    flags, params = read_config(args.config) if args.config else ({}, {})
    params.update(_kv(args.param))

    def pick(name, cli, default=None):
        return cli if cli is not None else flags.get(name, default)

    strategy = pick("strategy", args.strategy, "five-phase")
    n = int(pick("n", args.n, 0))
    p_lit = pick("p", args.p)
    formula = pick("p-formula", args.p_formula, "threshold")
    p = float(p_lit) if p_lit is not None else resolve_p(n, formula)
    out = pick("out", args.out) or os.environ.get(OUT_ENV) or "."
    fmt = pick("format", args.format, "json,csv")
    cfg = RunConfig(strategy=strategy, n=n, p=p, seeds=parse_seeds(str(pick("seeds", args.seeds, "0+1"))),
                    params=params, retries=int(pick("retries", args.retries, 0)), out_dir=out,
                    jobs=int(pick("jobs", args.jobs, 1)), timing=not args.no_timing)

    def progress(row):
        print(f"seed {row.seed} attempt {row.attempt}: {row.status} "
              f"{row.failed_phase}{':' if row.reason else ''}{row.reason} "
              f"positives/n={row.positives / row.n:.4f}", file=sys.stderr)

    report = run_trials(cfg, progress=progress)
    paths = emit(report, out, formats=[f.strip() for f in fmt.split(",") if f.strip()])
    print(json.dumps(report.aggregate(), sort_keys=True))
    for path in paths:
        print(path, file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    g = SimpleGraph.read(args.graph)
    res = is_hamiltonian_exact(g, timeout=args.timeout)
    doc = {"n": g.n, "m": g.m,
           "hamiltonian": None if res.hamiltonian is None else bool(res.hamiltonian),
           "cycle": res.cycle, "method": res.method}
    print(json.dumps(doc, sort_keys=True))
    return 0 if res.hamiltonian is not None else 2


def cmd_lemma(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.which == "boosters":
        hi = min(args.n, 12)
        extra = args.trials // 5 if hi >= BIPARTITE_MIN else 0
        doc = booster_check(args.trials, rng, sizes=(min(6, hi), hi), hypothesis_trials=extra)
        ok = doc["violations"] == 0 and doc["hypothesis_failures"] == 0
    elif args.which == "pseudorandom":
        doc = pseudorandom_check(args.trials, args.n, args.k, rng)
        ok = doc["contradictions"] == 0
    else:
        doc = nprops_check(args.n, args.trials, rng)
        ok = True
    doc["which"] = args.which
    print(json.dumps(doc, sort_keys=True))
    return 0 if ok else 1


def cmd_lower_bound(args) -> int:
    doc = lower_bound_batch(args.n, args.k, args.trials, np.random.default_rng(args.seed))
    print(json.dumps(doc, sort_keys=True))
    ok = doc["contained"] == doc["trials"] and doc["a_bound_ok"] == doc["a_bound_applies"]
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamquery", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run seeded trials of a strategy")
    r.add_argument("--config", help="flat key=value file (flags and ParamSet knobs)")
    r.add_argument("--strategy", choices=STRATEGIES)
    r.add_argument("--n", type=int)
    r.add_argument("--p", type=float, help="literal edge probability")
    r.add_argument("--p-formula", dest="p_formula",
                   help="threshold[+c] | cap | lnsq | <f>ln | number")
    r.add_argument("--seeds", help="B..E, B+K or a comma list")
    r.add_argument("--param", action="append", metavar="KEY=VALUE")
    r.add_argument("--retries", type=int)
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    r.add_argument("--format", help="json,csv")
    r.add_argument("--jobs", type=int)
    r.add_argument("--no-timing", action="store_true", help="write wall_ms as 0")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="exact Hamiltonicity of an edge-list graph")
    v.add_argument("--graph", required=True)
    v.add_argument("--timeout", type=float, default=10.0)
    v.set_defaults(func=cmd_verify)

    lc = sub.add_parser("lemma-check", help="empirical checks of the structural lemmas")
    lc.add_argument("--which", choices=("boosters", "pseudorandom", "nprops"), required=True)
    lc.add_argument("--n", type=int, default=12)
    lc.add_argument("--k", type=int, default=3)
    lc.add_argument("--trials", type=int, default=100)
    lc.add_argument("--seed", type=int, default=0)
    lc.set_defaults(func=cmd_lemma)

    lb = sub.add_parser("lower-bound", help="closing pairs of non-Hamiltonian graphs")
    lb.add_argument("--n", type=int, default=12)
    lb.add_argument("--k", type=int, default=2)
    lb.add_argument("--trials", type=int, default=50)
    lb.add_argument("--seed", type=int, default=0)
    lb.set_defaults(func=cmd_lower_bound)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
