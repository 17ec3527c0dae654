"""Closed forms, recurrence tables, inequality checks and theorem bounds.

Sums that carry a ``2**(2n)`` factor are evaluated as sums of squared
ratios in [0, 1], which keeps every term finite for the sizes used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Problem


def _check_zeros(n: int, zeros: int) -> None:
    if n < 1 or not 0 <= zeros <= n:
        raise ValueError(f"need 0 <= zeros <= n, got zeros={zeros}, n={n}")


def harmonic(k: int) -> float:
    return math.fsum(1.0 / j for j in range(1, k + 1))


def cfht_strict_opo_leadingones(n: int, zeros: int) -> float:
    """Hitting time of the strict (1+1)-EA, one-bit mutation, LeadingOnes."""
    _check_zeros(n, zeros)
    return float(n * zeros)


def cfht_opo_onemax(n: int, zeros: int) -> float:
    """Hitting time of the (1+1)-EA, one-bit mutation, OneMax."""
    _check_zeros(n, zeros)
    return n * harmonic(zeros)


def ref_dcfht_leadingones(n: int) -> float:
    """Mean hitting time of the reference chain started from phi(uniform pair)."""
    if n < 1:
        raise ValueError("n must be positive")
    return n * math.fsum((1.0 - 2.0 ** (j - 1 - n)) ** 2 for j in range(1, n + 1))


def binomial_survival(n: int) -> np.ndarray:
    """sf[j] = P(Bin(n, 1/2) >= j) for j = 0..n+1, by a ratio recursion."""
    pmf = np.empty(n + 1)
    pmf[0] = 0.5 ** n
    for k in range(n):
        pmf[k + 1] = pmf[k] * (n - k) / (k + 1)
    sf = np.zeros(n + 2)
    sf[: n + 1] = np.cumsum(pmf[::-1])[::-1]
    return sf


def ref_dcfht_onemax(n: int) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    sf = binomial_survival(n)
    return n * math.fsum(sf[j] ** 2 / j for j in range(1, n + 1))


# ---------------------------------------------------------------- tables

@dataclass(frozen=True)
class CfhtTable:
    problem: Problem
    n: int
    values: np.ndarray

    def __getitem__(self, ij) -> float:
        return float(self.values[ij])

    def residuals(self) -> np.ndarray:
        """Recurrence residual at every interior entry."""
        n, e = self.n, self.values
        res = np.zeros_like(e)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                res[i, j] = e[i, j] - _recurrence(self.problem, n, e, i, j)
        return res


def _recurrence(problem: Problem, n: int, e: np.ndarray, i: int, j: int) -> float:
    if problem == Problem.LEADING_ONES:
        d = 2 * n - 1
        return (n * n + (n - 1) * (e[i - 1, j] + e[i, j - 1]) + e[i - 1, j - 1]) / d
    d = (i + j) * n - i * j
    return (n * n + i * j * e[i - 1, j - 1] + i * (n - j) * e[i - 1, j]
            + (n - i) * j * e[i, j - 1]) / d


def cfht_table(problem: Problem, n: int) -> CfhtTable:
    """Hitting times of the mutation-only (2:2)-EA indexed by the pair
    number of zeros of both slots."""
    if n < 1:
        raise ValueError("n must be positive")
    e = np.zeros((n + 1, n + 1))
    for s in range(2, 2 * n + 1):
        for i in range(max(1, s - n), min(n, s - 1) + 1):
            e[i, s - i] = _recurrence(problem, n, e, i, s - i)
    return CfhtTable(problem, n, e)


def statistic_distribution(problem: Problem, n: int) -> np.ndarray:
    """Law of the number of zeros of one uniform slot.

    Under one-bit mutation with strict per-slot acceptance an accepted move
    flips exactly one zero on either problem, so zeros index the table."""
    if n < 1:
        raise ValueError("n must be positive")
    sf = binomial_survival(n)
    return sf[: n + 1] - sf[1: n + 2]


def efht_mutation_only(problem: Problem, n: int) -> float:
    """EFHT of the mutation-only (2:2)-EA from a uniform population,
    averaged from the CFHT table."""
    w = statistic_distribution(problem, n)
    return float(w @ cfht_table(problem, n).values @ w)


@dataclass(frozen=True)
class Violation:
    inequality: str
    i: int
    delta: int
    lhs: float
    rhs: float


def check_cfht_inequalities(problem: Problem, n: int, slack: float = 1e-9) -> list:
    """Scan every stated CFHT inequality over its index range.

    ``step`` is E(i, i+d) - E(i, i+d-1) and ``drop`` is E(i, i+d) - E(i-1, i+d).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    e = cfht_table(problem, n).values
    out = []

    def test(name, i, d, lhs, op, rhs):
        ok = {"<": lhs < rhs, ">": lhs > rhs,
              "<=": lhs <= rhs + slack, ">=": lhs >= rhs - slack}[op]
        if not ok:
            out.append(Violation(name, i, d, float(lhs), float(rhs)))

    for i in range(0, n + 1):
        for d in range(0, n - i + 1):
            j = i + d
            step = e[i, j] - e[i, j - 1] if d >= 1 else None
            drop = e[i, j] - e[i - 1, j] if i >= 1 else None
            if problem == Problem.LEADING_ONES:
                if step is not None and i >= 1:
                    test("lo_step_lower", i, d, step, ">=", n / 2 ** (d + 2))
                if drop is not None:
                    test("lo_drop_upper", i, d, drop, "<=", n - (3 * n - 1) / 2 ** (d + 3))
                    test("lo_drop_half", i, d, drop, ">", n / 2)
                if step is not None:
                    test("lo_step_half", i, d, step, "<", n / 2)
            else:
                if step is not None and i >= 1:
                    test("om_step_lower", i, d, step, ">", n / (2 ** (d + 1) * (i + d)))
                    test("om_step_one", i, d, step, ">", 1.0)
                if drop is not None:
                    c = 2.0 ** -(d + 3)
                    test("om_drop_upper", i, d, drop, "<", (1 - 3 * c) * n / i + c)
                    test("om_drop_half", i, d, drop, ">", n / (2 * i))
                    test("om_drop_full", i, d, drop, "<", n / i)
                if step is not None:
                    test("om_step_half", i, d, step, "<", n / (2 * (i + d)))
    return out


# ---------------------------------------------------------------- distributions

def _special_pc(n: int) -> float:
    return (n - 1) / (2 * n - 1)


def pair_marginals(n: int, pc: float, t: int) -> tuple:
    """(p_t(0,0), p_t(0,1)) for one position of the (2:2)-EA with one-bit
    operators on OneMax, started uniformly."""
    if n < 2 or not 0.0 <= pc <= 1.0 or t < 0:
        raise ValueError("need n >= 2, pc in [0, 1], t >= 0")
    q = 1.0 - 2.0 * (1.0 - pc) / n + (1.0 - pc) / n ** 2
    r = 1.0 - 1.0 / n
    p00 = 0.25 * q ** t
    if abs(pc - _special_pc(n)) <= 1e-12:
        p01 = 0.25 * (1.0 + t / (2 * n - 1)) * r ** t
    else:
        inv = n / (1.0 - pc) if pc < 1.0 else math.inf
        d = 1.0 - 2 * n + inv
        if math.isinf(inv):
            # both coefficients tend to 0 and 1/4 respectively
            p01 = 0.25 * r ** t
        else:
            p01 = ((n - 1) / (4 * d)) * q ** t + ((2 - 3 * n + inv) / (4 * d)) * r ** t
    return p00, p01


def equal_lo_lower_bound(n: int, pc: float, t: int) -> float:
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    base = pc + (1.0 - pc) * (1.0 - 1.0 / n) ** 2
    return (1.0 / 3.0 - 1.0 / (3.0 * 4.0 ** n)) * base ** t


def n01_fraction_upper_bound(n: int, pc: float, t: int) -> float:
    p00, p01 = pair_marginals(n, pc, t)
    return 1.0 - p01 - p00 - (1.0 - (1.0 - pc) / n) ** t


# ---------------------------------------------------------------- bounds

THEOREMS = ("T2", "T3", "T4", "T5", "T6", "T7gap", "T7ratio", "T8gap")


@dataclass(frozen=True)
class BoundReport:
    theorem: str
    n: int
    pc: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    value: Optional[float] = None

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError("lower bound above upper bound")

    @property
    def verdict(self) -> Optional[bool]:
        if self.value is None:
            return None
        ok = True
        if self.lower is not None:
            ok &= self.value >= self.lower
        if self.upper is not None:
            ok &= self.value <= self.upper
        return ok

    def with_value(self, value: float) -> "BoundReport":
        return BoundReport(self.theorem, self.n, self.pc, self.lower, self.upper, value)


def _one_minus(pc: float) -> float:
    if pc >= 1.0:
        raise ZeroDivisionError("bound undefined at p_c = 1")
    return 1.0 - pc


def theorem_bound(theorem: str, n: int, pc: float) -> BoundReport:
    """Numeric value of a theorem's bound.

    T2/T5 are upper bounds on the (2+2)-EA EFHT, T3/T4/T6 lower bounds,
    T7gap/T8gap lower bounds on E_cross - E_mut and T7ratio the factor
    1/(1 - p_c) capping E_cross / E_mut.
    """
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}")
    if n < 1 or not 0.0 <= pc <= 1.0:
        raise ValueError("need n >= 1 and pc in [0, 1]")
    if theorem in ("T7gap", "T7ratio", "T8gap") and n < 2:
        raise ValueError(f"{theorem} needs n >= 2")
    if theorem == "T2":
        return BoundReport(theorem, n, pc, upper=math.e * ref_dcfht_leadingones(n) / _one_minus(pc))
    if theorem == "T3":
        return BoundReport(theorem, n, pc, lower=ref_dcfht_leadingones(n) / (5.0 - 2.0 * pc))
    if theorem == "T4":
        return BoundReport(theorem, n, pc, lower=ref_dcfht_leadingones(n) / (2 * n - 1))
    if theorem == "T5":
        return BoundReport(theorem, n, pc, upper=math.e * ref_dcfht_onemax(n) / _one_minus(pc))
    if theorem == "T6":
        return BoundReport(theorem, n, pc, lower=ref_dcfht_leadingones(n) / (2 * n - 1))
    if theorem == "T7gap":
        g = pc * n * n / (_one_minus(pc) * (2 * n - 1)) * (1.0 / 3.0 - 1.0 / (3.0 * 4.0 ** n))
        return BoundReport(theorem, n, pc, lower=g)
    if theorem == "T7ratio":
        return BoundReport(theorem, n, pc, upper=1.0 / _one_minus(pc))
    return BoundReport(theorem, n, pc, lower=n * pc / (2.0 * _one_minus(pc)))
