"""Check suites that compare the analytic results against exact chains."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import chain as ch
from . import exact as ex
from .core import Algorithm, Crossover, EaConfig, Mutation, Problem


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def _two_colon_two(problem: Problem, pc: float = 0.0) -> EaConfig:
    if pc == 0:
        return EaConfig(Algorithm.TWO_COLON_TWO, problem)
    return EaConfig(Algorithm.TWO_COLON_TWO, problem, crossover=Crossover.ONE_BIT, pc=pc)


# ---------------------------------------------------------------- props

def marginal_errors(n: int, pc: float, steps: int = 50) -> float:
    """Largest gap between pair_marginals and the exact per-position
    marginals of the evolved OneMax chain."""
    chain = ch.build_chain(_two_colon_two(Problem.ONE_MAX, pc) if pc > 0 else
                           EaConfig(Algorithm.TWO_COLON_TWO, Problem.ONE_MAX), n)
    pi = ch.uniform_distribution(chain.space)
    worst = 0.0
    for t in range(steps + 1):
        p00, p01 = ex.pair_marginals(n, pc, t)
        for a in range(1, n + 1):
            q00, q01 = ch.position_marginals(chain.space, pi, a)
            worst = max(worst, abs(q00 - p00), abs(q01 - p01))
        pi = ch.evolve(chain, pi, 1)
    return worst


def bound_bracket_failures(n: int, pc: float, steps: int = 50,
                           zero_over_zero: float = 1.0) -> dict:
    """Steps t at which equal_lo_lower_bound or n01_fraction_upper_bound
    fails to bracket the exact evolved quantity."""
    lo_chain = ch.build_chain(_two_colon_two(Problem.LEADING_ONES, pc), n)
    om_chain = ch.build_chain(_two_colon_two(Problem.ONE_MAX, pc), n)
    pl = ch.uniform_distribution(lo_chain.space)
    po = pl.copy()
    fails = {"equal_lo": [], "n01": []}
    for t in range(steps + 1):
        if ch.equal_lo_mass(lo_chain.space, pl) < ex.equal_lo_lower_bound(n, pc, t) - 1e-12:
            fails["equal_lo"].append(t)
        frac = ch.n01_fraction(om_chain.space, po, zero_over_zero)
        if frac > ex.n01_fraction_upper_bound(n, pc, t) + 1e-12:
            fails["n01"].append(t)
        pl = ch.evolve(lo_chain, pl, 1)
        po = ch.evolve(om_chain, po, 1)
    return fails


def props_suite(n_max: int = 200, pcs=(0.0, 0.4, 0.5, 0.9)) -> list:
    out = []
    for problem in Problem:
        bad = {}
        for n in range(2, n_max + 1):
            for v in ex.check_cfht_inequalities(problem, n):
                bad.setdefault(v.inequality, []).append((n, v.i, v.delta))
        name = f"cfht_inequalities/{problem.name.lower()}"
        detail = "; ".join(f"{k}: {len(v)} violations, first (n,i,delta)={v[0]}"
                           for k, v in bad.items())
        out.append(CheckResult("props", name, not bad, detail))
    for pc in pcs:
        err = marginal_errors(3, pc)
        out.append(CheckResult("props", f"pair_marginals/n=3/pc={pc:g}", err <= 1e-10,
                               f"max abs error {err:.3e}"))
    for n in (3, 4):
        for pc in pcs:
            fails = bound_bracket_failures(n, pc)
            for key, ts in fails.items():
                out.append(CheckResult("props", f"{key}_bound/n={n}/pc={pc:g}", not ts,
                                       f"fails at t={ts[:5]}" if ts else ""))
    return out


# ---------------------------------------------------------------- bounds

def sandwich_cases(ns: Iterable[int], pcs=(0.0, 0.5)):
    """(problem, crossover, mutation, n, pc, lower theorem, upper theorem)."""
    for problem in Problem:
        for xo in (Crossover.ONE_POINT, Crossover.UNIFORM):
            for mut in Mutation:
                for n in ns:
                    for pc in pcs:
                        if problem == Problem.LEADING_ONES:
                            lower = "T3" if xo == Crossover.ONE_POINT else "T4"
                            upper = "T2"
                        else:
                            lower = "T6" if xo == Crossover.UNIFORM else None
                            upper = "T5"
                        yield problem, xo, mut, n, pc, lower, upper


def sandwich_check(problem, xo, mut, n, pc, lower, upper) -> CheckResult:
    cfg = EaConfig(Algorithm.TWO_PLUS_TWO, problem, mut, xo, pc)
    e = ch.efht_uniform(ch.build_chain(cfg, n))
    lo = ex.theorem_bound(lower, n, pc).lower if lower else None
    up = ex.theorem_bound(upper, n, pc).upper
    ok = (lo is None or e >= lo) and e <= up
    lo_s = "-" if lo is None else f"{lo:.6g}"
    return CheckResult("bounds", f"{cfg.fingerprint()}/n={n}",
                       ok, f"{lower or '-'} {lo_s} <= {e:.6g} <= {up:.6g} {upper}")


def compare_exact(problem: Problem, n: int, pc: float) -> dict:
    """Exact EFHTs of the mutation-only and the crossover (2:2)-EA."""
    e_mut = ch.efht_uniform(ch.build_chain(_two_colon_two(problem), n))
    e_cross = ch.efht_uniform(ch.build_chain(_two_colon_two(problem, pc), n))
    gap_id = "T7gap" if problem == Problem.LEADING_ONES else "T8gap"
    return {"e_mut": e_mut, "e_cross": e_cross,
            "gap_bound": ex.theorem_bound(gap_id, n, pc).lower,
            "ratio_bound": ex.theorem_bound("T7ratio", n, pc).upper}


def bounds_suite(n_max: int = 6, pcs=(0.0, 0.5)) -> list:
    out = [sandwich_check(*case) for case in sandwich_cases(range(1, n_max + 1), pcs)
           if case[3] >= 2 or case[1] != Crossover.ONE_POINT]
    for problem in Problem:
        for n in range(2, n_max + 1):
            for pc in (0.1, 0.5, 0.9):
                r = compare_exact(problem, n, pc)
                gap = r["e_cross"] - r["e_mut"]
                ok_s = r["e_mut"] < r["e_cross"] <= r["e_mut"] * r["ratio_bound"]
                ok_g = gap >= r["gap_bound"]
                tag = f"{problem.name.lower()}/n={n}/pc={pc:g}"
                out.append(CheckResult("bounds", f"ratio_sandwich/{tag}", ok_s,
                                       f"{r['e_mut']:.6g} < {r['e_cross']:.6g} <= "
                                       f"{r['e_mut'] * r['ratio_bound']:.6g}"))
                out.append(CheckResult("bounds", f"gap/{tag}", ok_g,
                                       f"gap {gap:.6g} vs bound {r['gap_bound']:.6g}"))
    return out


# ---------------------------------------------------------------- gmcst

GMCST_THEOREMS = (2, 3, 4, 5, 6)


def gmcst_instance(theorem: int, n: int, pc: float) -> ch.GmcstReport:
    """Run the switching verifier for one theorem's reference chain, state
    mapping and analytic slack."""
    lo, om = Problem.LEADING_ONES, Problem.ONE_MAX
    if theorem in (2, 3, 4):
        xo = Crossover.UNIFORM if theorem == 4 else Crossover.ONE_POINT
        a = EaConfig(Algorithm.TWO_PLUS_TWO, lo, crossover=xo, pc=pc)
        b = EaConfig(Algorithm.ONE_PLUS_ONE_STRICT, lo)
        phi_problem = lo
    elif theorem == 5:
        a = EaConfig(Algorithm.TWO_PLUS_TWO, om, crossover=Crossover.ONE_POINT, pc=pc)
        b = EaConfig(Algorithm.ONE_PLUS_ONE, om)
        phi_problem = om
    elif theorem == 6:
        a = EaConfig(Algorithm.TWO_PLUS_TWO, om, crossover=Crossover.UNIFORM, pc=pc)
        b = EaConfig(Algorithm.ONE_PLUS_ONE_STRICT, lo)
        phi_problem = lo
    else:
        raise ValueError(f"no verifier instance for theorem {theorem}")
    if pc == 0:
        a = EaConfig(a.algorithm, a.problem)
    ca, cb = ch.build_chain(a, n), ch.build_chain(b, n)
    coef = {2: 1 - (1 - pc) / math.e, 3: 2 * pc - 4, 4: 2 - 2 * n,
            5: 1 - (1 - pc) / math.e, 6: 2 - 2 * n}[theorem]
    direction = "le" if theorem in (2, 5) else "ge"
    return ch.gmcst_check(ca, cb, ch.phi_indices(phi_problem, ca.space),
                          ch.uniform_distribution(ca.space),
                          rho=lambda t, absorbed: coef * (1.0 - absorbed),
                          direction=direction)


def gmcst_suite(theorems=GMCST_THEOREMS, ns=(2, 3, 4), pcs=(0.5,)) -> list:
    out = []
    for th in theorems:
        for n in ns:
            for pc in pcs:
                r = gmcst_instance(th, n, pc)
                ok = r.steps_pass and bool(r.analytic_conclusion) and not r.truncated \
                    and r.residual < 1e-12
                detail = (f"steps={r.horizon} step_failures={len(r.step_failures)} "
                          f"E={r.e_tau:.6g} E'={r.e_tau_ref:.6g} sum_rho={r.rho_sum:.6g} "
                          f"residual={r.residual:.2e}")
                out.append(CheckResult("gmcst", f"T{th}/n={n}/pc={pc:g}", ok, detail))
    return out


# ---------------------------------------------------------------- audit

def audit_suite(ns=(3,), pcs=(0.0, 0.5, 1.0), problems=tuple(Problem)) -> list:
    out = []
    for problem in problems:
        for n in ns:
            for pc in pcs:
                cfg = _two_colon_two(problem, pc)
                d = ch.transition_audit(cfg, n)
                kinds = sorted({x.check.split("_t")[0] for x in d})
                detail = f"{len(d)} discrepancies ({', '.join(kinds)}); first: {d[0]}" if d else ""
                out.append(CheckResult("audit", f"{problem.name.lower()}/n={n}/pc={pc:g}",
                                       not d, detail))
    return out
