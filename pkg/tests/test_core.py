import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ealab.core import (Action, Algorithm, Crossover, EaConfig, Mutation, Population,
                        Problem, Strategy, TiePolicy, bits, canonical_pair, crossover,
                        ea_step, evaluate, make_rng, mr3_condition, mr_decide, mutate,
                        parse_name, run_trial, to_str, ALGO_NAMES)
from ealab.errors import IdenticalParents, InvalidConfig

bitstrings = st.integers(1, 12).flatmap(
    lambda n: st.lists(st.integers(0, 1), min_size=n, max_size=n))


def pair_strings(min_n=1, max_n=8):
    return st.integers(min_n, max_n).flatmap(lambda n: st.tuples(
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n)))


# ---------------------------------------------------------------- fitness

def test_fitness_examples():
    assert evaluate(Problem.LEADING_ONES, "1101") == 2
    assert evaluate(Problem.ONE_MAX, "1101") == 3
    assert evaluate(Problem.LEADING_ONES, "0111") == 0


@given(bitstrings)
def test_fitness_ranges(s):
    lo = evaluate(Problem.LEADING_ONES, s)
    om = evaluate(Problem.ONE_MAX, s)
    assert 0 <= lo <= om == sum(s)
    assert all(s[:lo]) and (lo == len(s) or s[lo] == 0)


def test_bits_roundtrip_and_errors():
    assert to_str(bits("01101")) == "01101"
    with pytest.raises(ValueError):
        bits("012")
    with pytest.raises(ValueError):
        evaluate(Problem.ONE_MAX, [0, 2])


# ---------------------------------------------------------------- mutation

def test_one_bit_n2_outcomes():
    rng = make_rng(1)
    counts = {}
    for _ in range(4000):
        out = to_str(mutate(Mutation.ONE_BIT, "00", rng))
        counts[out] = counts.get(out, 0) + 1
    assert set(counts) == {"10", "01"}
    assert abs(counts["10"] / 4000 - 0.5) < 4 * 0.5 / np.sqrt(4000)


@settings(max_examples=50)
@given(bitstrings, st.integers(0, 2**32 - 1))
def test_one_bit_hamming_one(s, seed):
    out = mutate(Mutation.ONE_BIT, s, make_rng(seed))
    assert int(np.sum(out != np.array(s))) == 1


def test_bitwise_unchanged_probability():
    n, m = 5, 100_000
    rng = make_rng(2)
    s = bits("10110")
    same = sum(np.array_equal(mutate(Mutation.BITWISE, s, rng), s) for _ in range(m))
    p = (1 - 1 / n) ** n
    assert abs(same / m - p) < 4 * np.sqrt(p * (1 - p) / m)


def test_one_bit_position_uniform():
    n, m = 6, 100_000
    rng = make_rng(3)
    s = np.zeros(n, dtype=np.uint8)
    hist = np.zeros(n)
    for _ in range(m):
        hist[np.argmax(mutate(Mutation.ONE_BIT, s, rng))] += 1
    se = np.sqrt(m * (1 / n) * (1 - 1 / n))
    assert np.all(np.abs(hist - m / n) < 4 * se)


def test_mutate_does_not_modify_input():
    s = bits("1010")
    mutate(Mutation.BITWISE, s, make_rng(0))
    assert to_str(s) == "1010"


# ---------------------------------------------------------------- crossover

def test_crossover_examples():
    a, b = crossover(Crossover.ONE_POINT, "111", "000", make_rng(0), point=1)
    assert (to_str(a), to_str(b)) == ("100", "011")
    a, b = crossover(Crossover.FIRST_DIFF_BIT, "110", "101", make_rng(0))
    assert (to_str(a), to_str(b)) == ("100", "111")
    with pytest.raises(IdenticalParents):
        crossover(Crossover.ONE_DIFF_BIT, "10", "10", make_rng(0))


def test_first_diff_point_swaps_suffix():
    a, b = crossover(Crossover.FIRST_DIFF_POINT, "11010", "11101", make_rng(0))
    assert (to_str(a), to_str(b)) == ("11101", "11010")


@settings(max_examples=200)
@given(pair_strings(2, 8), st.sampled_from(list(Crossover)), st.integers(0, 2**32 - 1))
def test_crossover_conservation(pair, kind, seed):
    s1, s2 = (np.array(x, dtype=np.uint8) for x in pair)
    if kind in (Crossover.ONE_DIFF_BIT, Crossover.FIRST_DIFF_BIT,
                Crossover.FIRST_DIFF_POINT) and np.array_equal(s1, s2):
        with pytest.raises(IdenticalParents):
            crossover(kind, s1, s2, make_rng(seed))
        return
    o1, o2 = crossover(kind, s1, s2, make_rng(seed))
    assert np.array_equal(np.minimum(o1, o2), np.minimum(s1, s2))
    assert np.array_equal(np.maximum(o1, o2), np.maximum(s1, s2))


def test_one_diff_bit_swaps_exactly_one_difference():
    s1, s2 = bits("110100"), bits("011001")
    for seed in range(50):
        o1, _ = crossover(Crossover.ONE_DIFF_BIT, s1, s2, make_rng(seed))
        assert int(np.sum(o1 != s1)) == 1


def test_one_point_cut_uniform():
    n, m = 5, 100_000
    rng = make_rng(4)
    a, b = np.ones(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8)
    hist = np.zeros(n + 1)
    for _ in range(m):
        o1, _ = crossover(Crossover.ONE_POINT, a, b, rng)
        hist[int(o1.sum())] += 1
    assert hist[0] == 0 and hist[n] == 0
    p = 1 / (n - 1)
    assert np.all(np.abs(hist[1:n] - m * p) < 4 * np.sqrt(m * p * (1 - p)))


def test_uniform_swap_rate():
    n, m = 4, 50_000
    rng = make_rng(5)
    a, b = np.ones(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8)
    swaps = np.zeros(n)
    for _ in range(m):
        o1, _ = crossover(Crossover.UNIFORM, a, b, rng)
        swaps += 1 - o1
    p = 1 / n
    assert np.all(np.abs(swaps - m * p) < 4 * np.sqrt(m * p * (1 - p)))


# ---------------------------------------------------------------- strategies

def test_mr_examples():
    rng = make_rng(0)
    # LO(A)=1 < LO(B)=3, A has more ones
    pop = Population(bits("1011111"), bits("1110000"))
    assert mr_decide(Strategy.MR1A, pop, rng) == Action.FIRST_DIFF_BIT
    # LO(A)=3 > LO(B)=1, delta = 1
    pop = Population(bits("1110000"), bits("1000010"))
    assert canonical_pair(*pop)[0] - canonical_pair(*pop)[2] == 1
    assert mr_decide(Strategy.MR1B, pop, rng) == Action.FIRST_DIFF_BIT
    assert mr3_condition(10, 1, 0)


def test_mr3_degenerate_cases():
    assert not mr3_condition(4, 2, 2)
    pop = Population(bits("1010"), bits("1010"))
    assert mr_decide(Strategy.MR3, pop, make_rng(0)) == Action.MUTATE


@settings(max_examples=200)
@given(pair_strings(1, 8), st.sampled_from(list(Strategy)), st.integers(0, 2**32 - 1))
def test_mr_decision_label_swap_invariant(pair, strategy, seed):
    s1, s2 = pair
    a = mr_decide(strategy, Population(s1, s2), make_rng(seed))
    b = mr_decide(strategy, Population(s2, s1), make_rng(seed))
    assert a == b


# ---------------------------------------------------------------- selection

def test_selection_examples():
    rng = make_rng(0)
    opo = EaConfig(Algorithm.ONE_PLUS_ONE, Problem.ONE_MAX)
    strict = EaConfig(Algorithm.ONE_PLUS_ONE_STRICT, Problem.ONE_MAX)
    # from 10 one-bit mutation yields 00 (worse) or 11 (better); the equal
    # fitness case needs a two-bit move, checked through bitwise mutation
    seen_opo, seen_strict = set(), set()
    for seed in range(400):
        cfg = EaConfig(Algorithm.ONE_PLUS_ONE, Problem.ONE_MAX, Mutation.BITWISE)
        seen_opo.add(to_str(ea_step(cfg, Population(bits("10")), make_rng(seed)).s1))
        cfg = EaConfig(Algorithm.ONE_PLUS_ONE_STRICT, Problem.ONE_MAX, Mutation.BITWISE)
        seen_strict.add(to_str(ea_step(cfg, Population(bits("10")), make_rng(seed)).s1))
    assert "01" in seen_opo
    assert seen_strict == {"10", "11"}
    assert ea_step(opo, Population(bits("11")), rng).s1.tolist() == [1, 1]
    assert ea_step(strict, Population(bits("11")), rng).s1.tolist() == [1, 1]


def test_two_colon_two_keeps_parent_on_tie():
    # LeadingOnes: flipping any bit after the first zero leaves fitness equal
    cfg = EaConfig(Algorithm.TWO_COLON_TWO, Problem.LEADING_ONES)
    for seed in range(100):
        out = ea_step(cfg, Population(bits("1000"), bits("1000")), make_rng(seed))
        for s in out:
            assert to_str(s) in ("1000", "1100")


def test_two_colon_two_prefer_offspring_accepts_ties():
    cfg = EaConfig(Algorithm.TWO_COLON_TWO, Problem.LEADING_ONES,
                   tie_policy=TiePolicy.PREFER_OFFSPRING)
    seen = set()
    for seed in range(100):
        out = ea_step(cfg, Population(bits("1000"), bits("1000")), make_rng(seed))
        seen.add(to_str(out.s1))
    assert {"1010", "1001"} <= seen


@settings(max_examples=150, deadline=None)
@given(pair_strings(2, 8), st.sampled_from(list(Algorithm)),
       st.sampled_from(list(Problem)), st.sampled_from(list(Mutation)),
       st.sampled_from([None] + list(Crossover)), st.sampled_from([0.0, 0.5, 1.0]),
       st.integers(0, 2**32 - 1))
def test_best_fitness_never_decreases(pair, alg, problem, mut, xo, pc, seed):
    if xo is None or alg.arity == 1:
        xo, pc = None, 0.0
    cfg = EaConfig(alg, problem, mut, xo, pc)
    pop = Population(np.array(pair[0], dtype=np.uint8), np.array(pair[1], dtype=np.uint8))
    if alg.arity == 1:
        pop = Population(pop.s1)
    rng = make_rng(seed)
    best = max(evaluate(problem, s) for s in pop if s is not None)
    for _ in range(20):
        pop = ea_step(cfg, pop, rng)
        now = max(evaluate(problem, s) for s in pop if s is not None)
        assert now >= best
        best = now


def test_ea_step_leaves_input_untouched():
    cfg = EaConfig(Algorithm.TWO_PLUS_TWO, Problem.ONE_MAX, crossover=Crossover.UNIFORM, pc=0.5)
    s1, s2 = bits("0101"), bits("0011")
    ea_step(cfg, Population(s1, s2), make_rng(0))
    assert (to_str(s1), to_str(s2)) == ("0101", "0011")


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("kwargs", [
    dict(algorithm=Algorithm.TWO_COLON_TWO, problem=Problem.ONE_MAX, pc=1.5,
         crossover=Crossover.ONE_BIT),
    dict(algorithm=Algorithm.ONE_PLUS_ONE, problem=Problem.ONE_MAX, crossover=Crossover.UNIFORM),
    dict(algorithm=Algorithm.TWO_PLUS_TWO, problem=Problem.ONE_MAX, strategy=Strategy.MR1),
    dict(algorithm=Algorithm.TWO_COLON_TWO, problem=Problem.ONE_MAX, pc=0.3),
])
def test_invalid_configs(kwargs):
    with pytest.raises(InvalidConfig):
        EaConfig(**kwargs).validate(4)


def test_fingerprint_unique():
    configs = [EaConfig(a, p, m, x, 0.5 if x is not None else 0.0)
               for a in (Algorithm.TWO_COLON_TWO, Algorithm.TWO_PLUS_TWO)
               for p in Problem for m in Mutation for x in [None] + list(Crossover)]
    prints = [c.fingerprint() for c in configs]
    assert len(set(prints)) == len(prints)
    assert parse_name(ALGO_NAMES, "2p2") == Algorithm.TWO_PLUS_TWO


# ---------------------------------------------------------------- trials

def test_trial_examples():
    for alg in Algorithm:
        init = Population(bits("111"), bits("010") if alg.arity == 2 else None)
        assert run_trial(EaConfig(alg, Problem.ONE_MAX), 3, 0, 100, init) == (0, False)
    cfg = EaConfig(Algorithm.ONE_PLUS_ONE, Problem.ONE_MAX)
    assert run_trial(cfg, 1, 7, 100, Population(bits("0"))) == (1, False)
    cfg = EaConfig(Algorithm.ONE_PLUS_ONE_STRICT, Problem.LEADING_ONES)
    assert run_trial(cfg, 50, 0, 5, Population(np.zeros(50, dtype=np.uint8))) == (5, True)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(list(Algorithm)), st.sampled_from(list(Problem)),
       st.integers(1, 10), st.integers(0, 2**63 - 1))
def test_run_trial_deterministic(alg, problem, n, seed):
    cfg = EaConfig(alg, problem)
    assert run_trial(cfg, n, seed, 10_000) == run_trial(cfg, n, seed, 10_000)


def test_mr_strategy_trials_finish():
    for s in Strategy:
        problem = Problem.ONE_MAX if s == Strategy.MR3 else Problem.LEADING_ONES
        cfg = EaConfig(Algorithm.TWO_COLON_TWO, problem, strategy=s)
        steps, censored = run_trial(cfg, 12, 3, 100_000)
        assert not censored and steps > 0
