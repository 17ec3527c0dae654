"""Command-line entry point: ``ealab {run,sweep,figures,check,export-chain}``.

Exit codes: 0 success, 1 failed check, 2 bad flags or configuration,
3 state space over the size limit, 4 censored estimate under --strict
(figures always refuse censored estimates).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from typing import Optional

from . import chain as ch
from . import exact as ex
from . import montecarlo as mc
from . import suites
from . import svg
from .core import (ALGO_NAMES, CROSSOVER_NAMES, MUTATION_NAMES, PROBLEM_NAMES,
                   STRATEGY_NAMES, TIE_NAMES, Algorithm, Crossover, EaConfig,
                   Mutation, Problem, Strategy, parse_name)
from .errors import InvalidConfig, SizeLimit

EXIT_CHECK, EXIT_USAGE, EXIT_SIZE, EXIT_CENSORED = 1, 2, 3, 4

HEADER = ("experiment", "problem", "algo", "n", "pc_or_strategy", "value",
          "stderr", "runs", "censored", "seed")
EXTRA = ("fingerprint", "gap", "gap_stderr", "ratio", "ratio_stderr",
         "bound_lower", "bound_upper")
DEFAULT_PCS = (0.0, 0.1, 0.5, 0.9)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- records

@dataclass
class ExperimentRecord:
    experiment: str
    problem: str
    algo: str
    n: int
    pc_or_strategy: str
    value: float
    stderr: float
    runs: int
    censored: int
    seed: Optional[int]
    fingerprint: str = ""
    gap: Optional[float] = None
    gap_stderr: Optional[float] = None
    ratio: Optional[float] = None
    ratio_stderr: Optional[float] = None
    bound_lower: Optional[float] = None
    bound_upper: Optional[float] = None
    timestamp: str = ""

    def __post_init__(self):
        for f in ("value", "stderr", "gap", "gap_stderr", "ratio", "ratio_stderr",
                  "bound_lower", "bound_upper"):
            v = getattr(self, f)
            if v is not None and not math.isfinite(v):
                raise ValueError(f"record field {f} is not finite: {v}")


_INT_FIELDS = {"n", "runs", "censored", "seed"}
_FLOAT_FIELDS = {"value", "stderr", "gap", "gap_stderr", "ratio", "ratio_stderr",
                 "bound_lower", "bound_upper"}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def columns(timestamp: bool) -> tuple:
    return HEADER + EXTRA + (("timestamp",) if timestamp else ())


def write_records(records: list, fh, timestamp: bool = True) -> None:
    cols = columns(timestamp)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow([_cell(getattr(r, c)) for c in cols])


def read_records(fh) -> list:
    """Parse CSV written by write_records back into records."""
    out = []
    for row in csv.DictReader(fh):
        kw = {}
        for k, v in row.items():
            if k in _INT_FIELDS:
                kw[k] = int(v) if v != "" else None
            elif k in _FLOAT_FIELDS:
                kw[k] = float(v) if v != "" else None
            else:
                kw[k] = v
        out.append(ExperimentRecord(**kw))
    return out


def records_json(records: list, timestamp: bool = True) -> str:
    rows = []
    for r in records:
        d = asdict(r)
        if not timestamp:
            d.pop("timestamp")
        rows.append(d)
    return json.dumps(rows, indent=2) + "\n"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------- parsing

def parse_range(text: str) -> list:
    """``a:b:step`` (inclusive), ``a:b`` or a comma list of integers."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            a, b, step = parts
            if step <= 0 or b < a:
                raise ValueError
            return list(range(a, b + 1, step))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use a:b:step") from None


def parse_floats(text: str) -> list:
    try:
        return [float(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None


def parse_strategies(text: str) -> list:
    try:
        return [parse_name(STRATEGY_NAMES, p) for p in text.split(",")]
    except InvalidConfig as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _choices(table: dict) -> list:
    return list(table.values())


def load_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, keys mirror flags."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value")
            k, v = (p.strip() for p in line.split("=", 1))
            out[k.lstrip("-").replace("-", "_")] = v
    return out


def _config_flags(p: argparse.ArgumentParser, n_default=None) -> None:
    p.add_argument("--algo", choices=_choices(ALGO_NAMES), default="2c2")
    p.add_argument("--problem", choices=_choices(PROBLEM_NAMES), default="leadingones")
    p.add_argument("--mutation", choices=_choices(MUTATION_NAMES), default="onebit")
    p.add_argument("--crossover", choices=_choices(CROSSOVER_NAMES), default=None)
    p.add_argument("--tie", choices=_choices(TIE_NAMES), default="keep")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file with flag defaults")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp column")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${mc.THREADS_ENV} or all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ealab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one Monte Carlo estimate or exact EFHT")
    _config_flags(p)
    _common(p)
    p.add_argument("--pc", type=float, default=0.0)
    p.add_argument("--strategy", choices=_choices(STRATEGY_NAMES), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--exact", action="store_true", help="solve the Markov chain instead")
    p.add_argument("--strict", action="store_true", help="exit 4 on any censored trial")
    p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("sweep", help="grid of estimates over n and p_c or strategies")
    _config_flags(p)
    _common(p)
    p.add_argument("--n", type=parse_range, default=None, help="a:b:step")
    p.add_argument("--pc", type=parse_floats, default=None, help="comma list")
    p.add_argument("--strategy", type=parse_strategies, default=None, help="comma list")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", default=None)

    p = sub.add_parser("figures", help="CSV and SVG data for one figure")
    p.add_argument("figure", choices=("efht", "gap", "ratio", "mr"))
    _common(p)
    p.add_argument("--n", type=parse_range, default=None,
                   help="a:b:step (default 10:100:10, mr 20:100:20)")
    p.add_argument("--pc", type=parse_floats, default=None,
                   help="comma list (default 0,0.1,0.5,0.9)")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--out-dir", default="figures")

    p = sub.add_parser("check", help="exact check suites")
    p.add_argument("suite", choices=("props", "bounds", "gmcst", "audit"))
    p.add_argument("--config")
    p.add_argument("--n-max", type=int, default=None, help="props 200, bounds 6")
    p.add_argument("--n", type=parse_range, default=None)
    p.add_argument("--pc", type=parse_floats, default=None)
    p.add_argument("--theorem", type=parse_range, default=None, help="gmcst: 2..6")
    p.add_argument("--problem", choices=_choices(PROBLEM_NAMES), default=None)
    p.add_argument("--steps", type=int, default=0,
                   help="gmcst: print the first STEPS per-step conditions")

    p = sub.add_parser("export-chain", help="write a transition matrix as triplets")
    _config_flags(p)
    p.add_argument("--config")
    p.add_argument("--pc", type=float, default=0.0)
    p.add_argument("--strategy", choices=_choices(STRATEGY_NAMES), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", default=None)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    target = sub.choices.get(known.command)
    if target is None:
        return
    values = load_config_file(known.config)
    actions = {a.dest: a for a in target._actions}
    defaults = {}
    for k, v in values.items():
        if k not in actions or k in ("config", "help"):
            raise CliError(f"{known.config}: unknown key {k!r} for {known.command}")
        act = actions[k]
        if act.nargs == 0:
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            try:
                defaults[k] = act.type(v)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise CliError(f"{known.config}: bad value for {k}: {exc}") from None
        else:
            if act.choices is not None and v not in act.choices:
                raise CliError(f"{known.config}: {k} must be one of {list(act.choices)}")
            defaults[k] = v
    target.set_defaults(**defaults)


# ---------------------------------------------------------------- helpers

def _seed(args) -> int:
    if args.seed is None:
        print("warning: no --seed given, using 0; pin a seed for numbers you publish",
              file=sys.stderr)
        return 0
    return args.seed


def _config(args, pc: Optional[float] = None, strategy=None) -> EaConfig:
    pc = args.pc if pc is None else pc
    strategy = getattr(args, "strategy", None) if strategy is None else strategy
    if isinstance(strategy, str):
        strategy = parse_name(STRATEGY_NAMES, strategy)
    xo = parse_name(CROSSOVER_NAMES, args.crossover) if args.crossover else None
    return EaConfig(parse_name(ALGO_NAMES, args.algo), parse_name(PROBLEM_NAMES, args.problem),
                    parse_name(MUTATION_NAMES, args.mutation), xo, float(pc), strategy,
                    parse_name(TIE_NAMES, args.tie))


def _label(cfg: EaConfig) -> str:
    if cfg.strategy is not None:
        return STRATEGY_NAMES[cfg.strategy]
    return f"{cfg.pc:g}"


def _open_new(path: str):
    if os.path.exists(path):
        raise CliError(f"refusing to overwrite existing file {path}")
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return open(path, "x", newline="")


def _emit(records: list, args, path: Optional[str]) -> None:
    ts = not args.no_timestamp
    if ts:
        stamp = _now()
        for r in records:
            r.timestamp = stamp
    if args.json:
        text = records_json(records, ts)
    else:
        buf = io.StringIO()
        write_records(records, buf, ts)
        text = buf.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        with _open_new(path) as fh:
            fh.write(text)


def _estimate_record(experiment: str, cfg: EaConfig, est: mc.EfhtEstimate) -> ExperimentRecord:
    return ExperimentRecord(experiment, PROBLEM_NAMES[cfg.problem], ALGO_NAMES[cfg.algorithm],
                            est.n, _label(cfg), est.mean, est.stderr, est.runs, est.censored,
                            est.master_seed, cfg.fingerprint())


def _require_n(args) -> None:
    if args.n is None:
        raise CliError("--n is required")


# ---------------------------------------------------------------- commands

def cmd_run(args) -> int:
    _require_n(args)
    cfg = _config(args).validate(args.n)
    if args.exact:
        chain = ch.build_chain(cfg, args.n)
        value = ch.efht_uniform(chain)
        rec = ExperimentRecord("exact", PROBLEM_NAMES[cfg.problem], ALGO_NAMES[cfg.algorithm],
                               args.n, _label(cfg), value, 0.0, 0, 0, None, cfg.fingerprint())
        _emit([rec], args, args.out)
        return 0
    seed = _seed(args)
    est = mc.estimate_efht(cfg, args.n, args.runs, seed, args.cutoff,
                           mc.grid_stream(cfg, args.n), args.threads)
    _emit([_estimate_record("run", cfg, est)], args, args.out)
    if est.flagged:
        print(f"warning: {est.censored} of {est.runs} trials hit the cutoff {est.cutoff}",
              file=sys.stderr)
        if args.strict:
            return EXIT_CENSORED
    return 0


def _sweep_records(experiment: str, base: EaConfig, ns, pcs, strategies, runs, seed,
                   cutoff, threads) -> list:
    out = []
    for rec in mc.sweep(base, ns, pcs, strategies, runs, seed, cutoff, threads):
        cfg = EaConfig(base.algorithm, base.problem, base.mutation,
                       base.crossover if rec.pc else None, float(rec.pc or 0.0),
                       rec.strategy, base.tie_policy)
        r = _estimate_record(experiment, cfg, rec.estimate)
        r.gap, r.gap_stderr, r.ratio, r.ratio_stderr = rec.gap, rec.gap_se, rec.ratio, rec.ratio_se
        out.append(r)
    return out


def cmd_sweep(args) -> int:
    if args.n is None:
        raise CliError("--n is required")
    if not args.pc and not args.strategy:
        raise CliError("give --pc and/or --strategy")
    pcs = args.pc or []
    if any(pc > 0 for pc in pcs) and args.crossover is None:
        raise CliError("--pc > 0 needs --crossover")
    base = EaConfig(parse_name(ALGO_NAMES, args.algo), parse_name(PROBLEM_NAMES, args.problem),
                    parse_name(MUTATION_NAMES, args.mutation),
                    parse_name(CROSSOVER_NAMES, args.crossover) if args.crossover else None,
                    0.0, None, parse_name(TIE_NAMES, args.tie))
    for n in args.n:
        for pc in pcs:
            EaConfig(base.algorithm, base.problem, base.mutation,
                     base.crossover if pc > 0 else None, pc, None, base.tie_policy).validate(n)
        for st in args.strategy or []:
            EaConfig(base.algorithm, base.problem, strategy=st,
                     tie_policy=base.tie_policy).validate(n)
    seed = _seed(args)
    recs = _sweep_records("sweep", base, args.n, pcs, args.strategy or [], args.runs, seed,
                          args.cutoff, args.threads)
    _emit(recs, args, args.out)
    censored = sum(r.censored for r in recs)
    if censored:
        print(f"warning: {censored} trials hit the cutoff", file=sys.stderr)
        if args.strict:
            return EXIT_CENSORED
    return 0


# Exact bound columns per figure.  E_mut is exact for every n via the
# mutation-only CFHT table.

def _efht_bounds(problem: Problem, n: int, pc: float) -> tuple:
    e_mut = ex.efht_mutation_only(problem, n)
    if pc == 0:
        return e_mut, e_mut
    return e_mut, (e_mut / (1 - pc) if pc < 1 else None)


def _gap_bound(problem: Problem, n: int, pc: float) -> float:
    gid = "T7gap" if problem == Problem.LEADING_ONES else "T8gap"
    return ex.theorem_bound(gid, n, pc).lower / n * (1 - pc) / pc


def cmd_figures(args) -> int:
    fig = args.figure
    ns = args.n or (list(range(20, 101, 20)) if fig == "mr" else list(range(10, 101, 10)))
    pcs = args.pc if args.pc is not None else list(DEFAULT_PCS)
    if any(not 0 <= pc < 1 for pc in pcs):
        raise CliError("figure p_c values must lie in [0, 1)")
    if fig in ("gap", "ratio") and 0.0 not in pcs:
        pcs = [0.0] + list(pcs)
    stem = os.path.join(args.out_dir, fig)
    paths = [stem + ".csv", stem + ".svg"] + ([stem + ".json"] if args.json else [])
    for p in paths:
        if os.path.exists(p):
            raise CliError(f"refusing to overwrite existing file {p}")
    seed = _seed(args)
    records = []
    for problem in Problem:
        if fig == "mr":
            base = EaConfig(Algorithm.TWO_COLON_TWO, problem)
            strategies = ([Strategy.MR1A, Strategy.MR1B, Strategy.MR1, Strategy.MR2]
                          if problem == Problem.LEADING_ONES else [Strategy.MR3])
            recs = _sweep_records(fig, base, ns, [0.0], strategies, args.runs, seed,
                                  args.cutoff, args.threads)
            for r in recs:
                r.bound_upper = ex.efht_mutation_only(problem, r.n)
        else:
            base = EaConfig(Algorithm.TWO_COLON_TWO, problem, crossover=Crossover.ONE_BIT)
            recs = _sweep_records(fig, base, ns, pcs, [], args.runs, seed, args.cutoff,
                                  args.threads)
            for r in recs:
                pc = float(r.pc_or_strategy)
                if fig == "efht":
                    r.bound_lower, r.bound_upper = _efht_bounds(problem, r.n, pc)
                elif fig == "gap" and pc > 0:
                    r.bound_lower = _gap_bound(problem, r.n, pc)
                elif fig == "ratio" and pc > 0:
                    r.bound_lower, r.bound_upper = 1 - pc, 1.0
            if fig in ("gap", "ratio"):
                for r in recs:
                    if float(r.pc_or_strategy) > 0:
                        r.value, r.stderr = ((r.gap, r.gap_stderr) if fig == "gap"
                                             else (r.ratio, r.ratio_stderr))
                recs = [r for r in recs if float(r.pc_or_strategy) > 0]
        records += recs
    bad = [r for r in records if r.censored]
    if bad:
        raise CliError(f"{len(bad)} estimates contain censored trials; raise --cutoff",
                       EXIT_CENSORED)
    ts = not args.no_timestamp
    if ts:
        stamp = _now()
        for r in records:
            r.timestamp = stamp
    os.makedirs(args.out_dir, exist_ok=True)
    with _open_new(stem + ".csv") as fh:
        write_records(records, fh, ts)
    if args.json:
        with _open_new(stem + ".json") as fh:
            fh.write(records_json(records, ts))
    with _open_new(stem + ".svg") as fh:
        fh.write(_figure_svg(fig, records))
    print(f"wrote {len(records)} records to {stem}.csv and {stem}.svg")
    return 0


def _figure_svg(fig: str, records: list) -> str:
    panels = []
    for problem in Problem:
        name = PROBLEM_NAMES[problem]
        series = {}
        for r in records:
            if r.problem != name:
                continue
            label = "mutation only" if r.pc_or_strategy == "0" else (
                r.pc_or_strategy if fig == "mr" else f"pc={r.pc_or_strategy}")
            series.setdefault(label, []).append((r.n, r.value))
            if fig == "gap" and r.bound_lower is not None:
                series.setdefault(f"bound pc={r.pc_or_strategy}", []).append((r.n, r.bound_lower))
        panels.append((name, series))
    ylabel = {"efht": "EFHT", "gap": "gap statistic", "ratio": "ratio statistic",
              "mr": "EFHT"}[fig]
    return svg.chart(panels, log_y=fig in ("efht", "mr"), ylabel=ylabel)


def cmd_check(args) -> int:
    if args.suite == "props":
        results = suites.props_suite(args.n_max or 200, tuple(args.pc or (0.0, 0.4, 0.5, 0.9)))
    elif args.suite == "bounds":
        n_max = args.n_max or 6
        if n_max > ch.ENUMERATION_MAX_N:
            raise CliError(f"bounds enumerates bitwise mutation; --n-max <= {ch.ENUMERATION_MAX_N}",
                           EXIT_SIZE)
        results = suites.bounds_suite(n_max, tuple(args.pc or (0.0, 0.5)))
    elif args.suite == "gmcst":
        theorems = args.theorem or list(suites.GMCST_THEOREMS)
        for th in theorems:
            if th not in suites.GMCST_THEOREMS:
                raise CliError(f"no verifier instance for theorem {th}")
        results = suites.gmcst_suite(theorems, args.n or (2, 3, 4), args.pc or (0.5,))
        if args.steps:
            _print_steps(theorems, args.n or (2, 3, 4), args.pc or (0.5,), args.steps)
    else:
        problems = [parse_name(PROBLEM_NAMES, args.problem)] if args.problem else list(Problem)
        results = suites.audit_suite(args.n or (3,), args.pc or (0.0, 0.5, 1.0), problems)
    failed = 0
    for r in results:
        failed += not r.passed
        line = f"{'PASS' if r.passed else 'FAIL'}  {r.suite}  {r.name}"
        print(line + (f"  {r.detail}" if r.detail else ""))
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_CHECK if failed else 0


def _print_steps(theorems, ns, pcs, count: int) -> None:
    for th in theorems:
        for n in ns:
            for pc in pcs:
                r = suites.gmcst_instance(th, n, pc)
                print(f"# T{th} n={n} pc={pc:g}: t lhs rhs rho")
                for k in range(min(count, len(r.t))):
                    print(f"{int(r.t[k])} {r.lhs[k]:.12g} {r.rhs[k]:.12g} {r.rho[k]:.12g}")


def cmd_export_chain(args) -> int:
    _require_n(args)
    cfg = _config(args).validate(args.n)
    chain = ch.build_chain(cfg, args.n)
    if args.out is None:
        ch.export_chain(chain, sys.stdout)
    else:
        with _open_new(args.out) as fh:
            ch.export_chain(chain, fh)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "figures": cmd_figures,
            "check": cmd_check, "export-chain": cmd_export_chain}


def main(argv: Optional[list] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeLimit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
