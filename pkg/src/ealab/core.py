"""Bit strings, fitness functions, variation operators and EA step rules.

Solutions are 1-D ``uint8`` numpy arrays.  Position ``a`` (1-based, left to
right) is element ``a - 1``.  Random numbers come from an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernel as K
from .errors import IdenticalParents, InvalidConfig


class Algorithm(enum.IntEnum):
    ONE_PLUS_ONE = K.OPO
    ONE_PLUS_ONE_STRICT = K.OPO_STRICT
    TWO_COLON_TWO = K.TWO_COLON_TWO
    TWO_PLUS_TWO = K.TWO_PLUS_TWO

    @property
    def arity(self) -> int:
        return 1 if self <= Algorithm.ONE_PLUS_ONE_STRICT else 2


class Problem(enum.IntEnum):
    LEADING_ONES = K.LEADING_ONES
    ONE_MAX = K.ONE_MAX


class Mutation(enum.IntEnum):
    ONE_BIT = K.MUT_ONE_BIT
    BITWISE = K.MUT_BITWISE


class Crossover(enum.IntEnum):
    ONE_POINT = K.XO_ONE_POINT
    UNIFORM = K.XO_UNIFORM
    ONE_BIT = K.XO_ONE_BIT
    ONE_DIFF_BIT = K.XO_ONE_DIFF_BIT
    FIRST_DIFF_BIT = K.XO_FIRST_DIFF_BIT
    FIRST_DIFF_POINT = K.XO_FIRST_DIFF_POINT


class Strategy(enum.IntEnum):
    MR1A = K.MR1A
    MR1B = K.MR1B
    MR1 = K.MR1
    MR2 = K.MR2
    MR3 = K.MR3


class TiePolicy(enum.IntEnum):
    KEEP_PARENT = K.TIE_KEEP
    PREFER_OFFSPRING = K.TIE_PREFER


class Action(enum.IntEnum):
    MUTATE = K.ACT_MUTATE
    FIRST_DIFF_BIT = K.ACT_FIRST_DIFF_BIT
    FIRST_DIFF_POINT = K.ACT_FIRST_DIFF_POINT
    ONE_DIFF_BIT = K.ACT_ONE_DIFF_BIT


# Short names used by the CLI, fingerprints and file formats.
ALGO_NAMES = {
    Algorithm.ONE_PLUS_ONE: "1p1",
    Algorithm.ONE_PLUS_ONE_STRICT: "1p1s",
    Algorithm.TWO_COLON_TWO: "2c2",
    Algorithm.TWO_PLUS_TWO: "2p2",
}
PROBLEM_NAMES = {Problem.LEADING_ONES: "leadingones", Problem.ONE_MAX: "onemax"}
MUTATION_NAMES = {Mutation.ONE_BIT: "onebit", Mutation.BITWISE: "bitwise"}
CROSSOVER_NAMES = {
    Crossover.ONE_POINT: "onepoint",
    Crossover.UNIFORM: "uniform",
    Crossover.ONE_BIT: "onebit",
    Crossover.ONE_DIFF_BIT: "onediffbit",
    Crossover.FIRST_DIFF_BIT: "firstdiffbit",
    Crossover.FIRST_DIFF_POINT: "firstdiffpoint",
}
STRATEGY_NAMES = {
    Strategy.MR1A: "mr1a",
    Strategy.MR1B: "mr1b",
    Strategy.MR1: "mr1",
    Strategy.MR2: "mr2",
    Strategy.MR3: "mr3",
}
TIE_NAMES = {TiePolicy.KEEP_PARENT: "keep", TiePolicy.PREFER_OFFSPRING: "prefer"}

_DIFF_KINDS = (Crossover.ONE_DIFF_BIT, Crossover.FIRST_DIFF_BIT,
               Crossover.FIRST_DIFF_POINT)


def parse_name(table: dict, name: str):
    """Inverse lookup in one of the ``*_NAMES`` tables."""
    for k, v in table.items():
        if v == name:
            return k
    raise InvalidConfig(f"unknown name {name!r}; expected one of {sorted(table.values())}")


def bits(text: str) -> np.ndarray:
    """Parse a string such as ``"1101"`` into a bit array."""
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bit string: {text!r}")
    return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")


def to_str(s: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in s)


def _as_bits(s) -> np.ndarray:
    if isinstance(s, str):
        return bits(s)
    arr = np.ascontiguousarray(s, dtype=np.uint8)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("a bit string must be a non-empty 1-D sequence")
    if np.any(arr > 1):
        raise ValueError("bit strings may only contain 0 and 1")
    return arr


class Population(NamedTuple):
    """Ordered pair of named slots.  ``s2`` is None for the (1+1) variants."""
    s1: np.ndarray
    s2: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EaConfig:
    algorithm: Algorithm
    problem: Problem
    mutation: Mutation = Mutation.ONE_BIT
    crossover: Optional[Crossover] = None
    pc: float = 0.0
    strategy: Optional[Strategy] = None
    tie_policy: TiePolicy = TiePolicy.KEEP_PARENT

    def validate(self, n: Optional[int] = None) -> "EaConfig":
        if not 0.0 <= self.pc <= 1.0:
            raise InvalidConfig(f"crossover probability {self.pc} outside [0, 1]")
        two = self.algorithm.arity == 2
        if self.strategy is not None:
            if self.algorithm != Algorithm.TWO_COLON_TWO:
                raise InvalidConfig("strategies are only defined for the (2:2)-EA")
            if self.crossover is not None or self.pc != 0.0:
                raise InvalidConfig("a strategy replaces the crossover kind and p_c")
            if self.mutation != Mutation.ONE_BIT:
                raise InvalidConfig("strategies fall back to one-bit mutation only")
        if self.crossover is not None and not two:
            raise InvalidConfig("crossover needs a 2-individual algorithm")
        if self.crossover is None and self.pc > 0.0:
            raise InvalidConfig("p_c > 0 needs a crossover kind")
        if n is not None:
            if n < 1:
                raise InvalidConfig("problem size must be at least 1")
            if self.crossover == Crossover.ONE_POINT and self.pc > 0 and n < 2:
                raise InvalidConfig("one-point crossover needs n >= 2")
        return self

    def codes(self) -> tuple:
        """Integer arguments for the compiled kernel."""
        xo = K.XO_NONE if self.crossover is None else int(self.crossover)
        st = K.MR_NONE if self.strategy is None else int(self.strategy)
        return (int(self.algorithm), int(self.problem), int(self.mutation),
                xo, st, float(self.pc), int(self.tie_policy))

    def fingerprint(self) -> str:
        parts = [ALGO_NAMES[self.algorithm], PROBLEM_NAMES[self.problem],
                 MUTATION_NAMES[self.mutation]]
        if self.strategy is not None:
            parts.append(STRATEGY_NAMES[self.strategy])
        elif self.crossover is not None:
            parts.append(f"{CROSSOVER_NAMES[self.crossover]}@{self.pc:g}")
        if self.algorithm == Algorithm.TWO_COLON_TWO:
            parts.append(TIE_NAMES[self.tie_policy])
        return "/".join(parts)

    def fingerprint_key(self) -> int:
        """Stable 32-bit integer derived from the fingerprint."""
        digest = hashlib.sha256(self.fingerprint().encode()).digest()
        return int.from_bytes(digest[:4], "little")


def evaluate(problem: Problem, s) -> int:
    return int(K.fitness(int(problem), _as_bits(s)))


def mutate(kind: Mutation, s, rng: np.random.Generator) -> np.ndarray:
    out = _as_bits(s).copy()
    K.mutate_inplace(int(kind), out, rng)
    return out


def crossover(kind: Crossover, s1, s2, rng: np.random.Generator,
              *, point: Optional[int] = None) -> tuple:
    """Recombine two parents and return two new children.

    ``point`` pins the random choice of one-point (the cut, 1..n-1) and
    one-bit crossover (the position, 1..n); it is meant for tests.
    """
    a = _as_bits(s1).copy()
    b = _as_bits(s2).copy()
    n = a.size
    if b.size != n:
        raise ValueError("parents must have equal length")
    if kind == Crossover.ONE_POINT and n < 2:
        raise ValueError("one-point crossover needs n >= 2")
    if kind in _DIFF_KINDS and np.array_equal(a, b):
        raise IdenticalParents(f"{CROSSOVER_NAMES[kind]} needs distinct parents")
    if point is not None:
        if kind == Crossover.ONE_POINT:
            if not 1 <= point <= n - 1:
                raise ValueError("cut must lie in 1..n-1")
            K.swap_range(a, b, point, n)
            return a, b
        if kind == Crossover.ONE_BIT:
            if not 1 <= point <= n:
                raise ValueError("position must lie in 1..n")
            K.swap_range(a, b, point - 1, point)
            return a, b
        raise ValueError("point only applies to one-point and one-bit crossover")
    K.crossover_inplace(int(kind), a, b, rng)
    return a, b


def canonical_pair(s1, s2) -> tuple:
    """Return (ones_A, LO_A, ones_B, LO_B): A has more ones, then larger LO,
    then slot 1."""
    a, b = _as_bits(s1), _as_bits(s2)
    o1, o2 = K.one_max(a), K.one_max(b)
    l1, l2 = K.leading_ones(a), K.leading_ones(b)
    if o1 > o2 or (o1 == o2 and l1 >= l2):
        return o1, l1, o2, l2
    return o2, l2, o1, l1


def mr3_condition(n: int, i: int, delta: int) -> bool:
    """n >= (i+d)(1 + n(i+d)/(n-i-d))^i, false when n-i-d = 0."""
    return bool(K.mr3_condition(n, i, delta))


def mr_decide(strategy: Strategy, population: Population,
              rng: np.random.Generator) -> Action:
    a, b = _as_bits(population.s1), _as_bits(population.s2)
    if a.size != b.size:
        raise ValueError("population members must have equal length")
    return Action(K.mr_decide(int(strategy), a, b, rng))


def _check_population(config: EaConfig, population: Population) -> tuple:
    s1 = _as_bits(population.s1).copy()
    if config.algorithm.arity == 1:
        return s1, s1.copy()
    if population.s2 is None:
        raise ValueError("this algorithm needs two solutions")
    s2 = _as_bits(population.s2).copy()
    if s2.size != s1.size:
        raise ValueError("population members must have equal length")
    return s1, s2


def ea_step(config: EaConfig, population: Population,
            rng: np.random.Generator) -> Population:
    """One reproduction and selection iteration; the input is not modified."""
    config.validate(len(population.s1))
    s1, s2 = _check_population(config, population)
    alg, prob = int(config.algorithm), int(config.problem)
    f1 = K.fitness(prob, s1)
    f2 = K.fitness(prob, s2) if config.algorithm.arity == 2 else -1
    o1, o2 = np.empty_like(s1), np.empty_like(s2)
    K.step(*config.codes(), s1, s2, f1, f2, o1, o2, rng)
    if config.algorithm.arity == 1:
        return Population(s1)
    return Population(s1, s2)


class TrialResult(NamedTuple):
    steps: int
    censored: bool


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def initial_population(config: EaConfig, n: int,
                       rng: np.random.Generator) -> Population:
    """Uniformly random start: one string, or two drawn slot 1 first."""
    s1 = K.random_bits(n, rng)
    if config.algorithm.arity == 1:
        return Population(s1)
    return Population(s1, K.random_bits(n, rng))


def run_trial(config: EaConfig, n: int, seed, cutoff: int,
              initial: Optional[Population] = None) -> TrialResult:
    """Run one EA until the population holds an optimum or ``cutoff`` steps.

    ``seed`` is anything ``numpy.random.PCG64`` accepts (an int or a
    SeedSequence).  ``initial`` replaces the random start when given.
    """
    config.validate(n)
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    rng = make_rng(seed)
    if initial is None:
        steps, censored = K.run_random(*config.codes(), n, int(cutoff), rng)
        return TrialResult(int(steps), bool(censored))
    s1, s2 = _check_population(config, initial)
    if s1.size != n:
        raise ValueError("initial population does not match n")
    steps, censored = K.run(*config.codes(), s1, s2, int(cutoff), rng)
    return TrialResult(int(steps), bool(censored))
