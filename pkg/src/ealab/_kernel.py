"""Compiled inner loops shared by the Python API and the Monte Carlo driver.

Everything here works on uint8 arrays and small integer codes so that numba
can compile it once.  The codes mirror the IntEnum values in ``core``.
"""

import numba
import numpy as np

_jit = numba.njit(cache=True, nogil=True)

# algorithm codes
OPO, OPO_STRICT, TWO_COLON_TWO, TWO_PLUS_TWO = 0, 1, 2, 3
# problem codes
LEADING_ONES, ONE_MAX = 0, 1
# mutation codes
MUT_ONE_BIT, MUT_BITWISE = 0, 1
# crossover codes (-1 means none)
XO_NONE, XO_ONE_POINT, XO_UNIFORM, XO_ONE_BIT = -1, 0, 1, 2
XO_ONE_DIFF_BIT, XO_FIRST_DIFF_BIT, XO_FIRST_DIFF_POINT = 3, 4, 5
# strategy codes (-1 means none)
MR_NONE, MR1A, MR1B, MR1, MR2, MR3 = -1, 0, 1, 2, 3, 4
# actions returned by mr_decide
ACT_MUTATE, ACT_FIRST_DIFF_BIT, ACT_FIRST_DIFF_POINT, ACT_ONE_DIFF_BIT = 0, 1, 2, 3
# tie policies
TIE_KEEP, TIE_PREFER = 0, 1


@_jit
def leading_ones(s):
    k = 0
    for b in s:
        if b == 0:
            break
        k += 1
    return k


@_jit
def one_max(s):
    c = 0
    for b in s:
        if b != 0:
            c += 1
    return c


@_jit
def fitness(problem, s):
    if problem == LEADING_ONES:
        return leading_ones(s)
    return one_max(s)


@_jit
def mutate_inplace(kind, s, rng):
    n = s.size
    if kind == MUT_ONE_BIT:
        a = rng.integers(0, n)
        s[a] = 1 - s[a]
    else:
        p = 1.0 / n
        for a in range(n):
            if rng.random() < p:
                s[a] = 1 - s[a]


@_jit
def swap_range(a, b, start, stop):
    for k in range(start, stop):
        t = a[k]
        a[k] = b[k]
        b[k] = t


@_jit
def first_diff(a, b):
    for k in range(a.size):
        if a[k] != b[k]:
            return k
    return -1


@_jit
def crossover_inplace(kind, a, b, rng):
    """Recombine a and b in place.  Returns False when a diff-based kind
    meets identical parents (nothing is exchanged then)."""
    n = a.size
    if kind == XO_ONE_POINT:
        cut = rng.integers(1, n)
        swap_range(a, b, cut, n)
    elif kind == XO_UNIFORM:
        p = 1.0 / n
        for k in range(n):
            if rng.random() < p:
                swap_range(a, b, k, k + 1)
    elif kind == XO_ONE_BIT:
        k = rng.integers(0, n)
        swap_range(a, b, k, k + 1)
    elif kind == XO_ONE_DIFF_BIT:
        d = 0
        for k in range(n):
            if a[k] != b[k]:
                d += 1
        if d == 0:
            return False
        r = rng.integers(0, d)
        for k in range(n):
            if a[k] != b[k]:
                if r == 0:
                    swap_range(a, b, k, k + 1)
                    break
                r -= 1
    else:
        k = first_diff(a, b)
        if k < 0:
            return False
        if kind == XO_FIRST_DIFF_BIT:
            swap_range(a, b, k, k + 1)
        else:
            swap_range(a, b, k, n)
    return True


@_jit
def mr3_condition(n, i, delta):
    m = i + delta
    if n - m <= 0:
        return False
    return n >= m * (1.0 + n * m / (n - m)) ** i


@_jit
def mr_action(strategy, n, ones_a, lo_a, ones_b, lo_b, identical, coin):
    """Action for a canonicalized pair; ``coin`` is only read by MR3."""
    i = n - ones_a
    delta = ones_a - ones_b
    if strategy == MR3:
        if identical or not coin:
            return ACT_MUTATE
        if mr3_condition(n, i, delta):
            return ACT_ONE_DIFF_BIT
        return ACT_MUTATE
    c1a = lo_a < lo_b or (delta == 0 and lo_a != lo_b)
    c1b = lo_a > lo_b and 0 < delta <= 2
    if strategy == MR1A:
        return ACT_FIRST_DIFF_BIT if c1a else ACT_MUTATE
    if strategy == MR1B:
        return ACT_FIRST_DIFF_BIT if c1b else ACT_MUTATE
    if strategy == MR1:
        return ACT_FIRST_DIFF_BIT if (c1a or c1b) else ACT_MUTATE
    if c1a:
        return ACT_FIRST_DIFF_BIT
    if lo_a > lo_b and delta != 0:
        return ACT_FIRST_DIFF_POINT
    return ACT_MUTATE


@_jit
def mr_decide(strategy, s1, s2, rng):
    n = s1.size
    o1 = one_max(s1)
    o2 = one_max(s2)
    l1 = leading_ones(s1)
    l2 = leading_ones(s2)
    identical = first_diff(s1, s2) < 0
    coin = False
    if strategy == MR3 and not identical:
        coin = rng.random() < 0.5
    if o1 > o2 or (o1 == o2 and l1 >= l2):
        return mr_action(strategy, n, o1, l1, o2, l2, identical, coin)
    return mr_action(strategy, n, o2, l2, o1, l1, identical, coin)


@_jit
def action_crossover(action):
    if action == ACT_FIRST_DIFF_BIT:
        return XO_FIRST_DIFF_BIT
    if action == ACT_FIRST_DIFF_POINT:
        return XO_FIRST_DIFF_POINT
    return XO_ONE_DIFF_BIT


@_jit
def step(alg, problem, mut, xo, strategy, pc, tie, s1, s2, f1, f2, o1, o2, rng):
    """One reproduction+selection iteration in place; returns new fitnesses."""
    if alg == OPO or alg == OPO_STRICT:
        o1[:] = s1
        mutate_inplace(mut, o1, rng)
        g = fitness(problem, o1)
        if g > f1 or (alg == OPO and g == f1):
            s1[:] = o1
            f1 = g
        return f1, f2

    o1[:] = s1
    o2[:] = s2
    if strategy >= 0:
        act = mr_decide(strategy, s1, s2, rng)
        if act == ACT_MUTATE:
            mutate_inplace(MUT_ONE_BIT, o1, rng)
            mutate_inplace(MUT_ONE_BIT, o2, rng)
        else:
            crossover_inplace(action_crossover(act), o1, o2, rng)
    elif rng.random() < pc:
        crossover_inplace(xo, o1, o2, rng)
    else:
        mutate_inplace(mut, o1, rng)
        mutate_inplace(mut, o2, rng)
    g1 = fitness(problem, o1)
    g2 = fitness(problem, o2)

    if alg == TWO_COLON_TWO:
        if g1 > f1 or (tie == TIE_PREFER and g1 == f1):
            s1[:] = o1
            f1 = g1
        if g2 > f2 or (tie == TIE_PREFER and g2 == f2):
            s2[:] = o2
            f2 = g2
        return f1, f2

    # (2+2): keep the best two of (s1, s2, o1, o2), stable on ties,
    # survivors stay in candidate order.
    fits = (f1, f2, g1, g2)
    first = -1
    second = -1
    for k in range(4):
        beaten = 0
        for c in range(4):
            if fits[c] > fits[k] or (fits[c] == fits[k] and c < k):
                beaten += 1
        if beaten < 2:
            if first < 0:
                first = k
            else:
                second = k
    if first == 1:
        s1[:] = s2
    elif first == 2:
        s1[:] = o1
    if second == 2:
        s2[:] = o1
    elif second == 3:
        s2[:] = o2
    return fits[first], fits[second]


@_jit
def run(alg, problem, mut, xo, strategy, pc, tie, s1, s2, cutoff, rng):
    """Iterate until an optimum appears; returns (steps, censored)."""
    n = s1.size
    f1 = fitness(problem, s1)
    f2 = -1
    if alg == TWO_COLON_TWO or alg == TWO_PLUS_TWO:
        f2 = fitness(problem, s2)
    if f1 == n or f2 == n:
        return 0, False
    o1 = np.empty_like(s1)
    o2 = np.empty_like(s2)
    for t in range(1, cutoff + 1):
        f1, f2 = step(alg, problem, mut, xo, strategy, pc, tie,
                      s1, s2, f1, f2, o1, o2, rng)
        if f1 == n or f2 == n:
            return t, False
    return cutoff, True


@_jit
def action_table(strategy, n, ones1, lo1, ones2, lo2, identical):
    """Per-state action under a successful coin (only MR3 reads the coin)."""
    out = np.empty(ones1.size, dtype=np.int64)
    for k in range(ones1.size):
        o1, l1, o2, l2 = ones1[k], lo1[k], ones2[k], lo2[k]
        if o1 > o2 or (o1 == o2 and l1 >= l2):
            out[k] = mr_action(strategy, n, o1, l1, o2, l2, identical[k], True)
        else:
            out[k] = mr_action(strategy, n, o2, l2, o1, l1, identical[k], True)
    return out


@_jit
def random_bits(n, rng):
    s = np.empty(n, dtype=np.uint8)
    for k in range(n):
        s[k] = rng.integers(0, 2)
    return s


@_jit
def run_random(alg, problem, mut, xo, strategy, pc, tie, n, cutoff, rng):
    """Uniform random start (slot 1 then slot 2), then ``run``."""
    s1 = random_bits(n, rng)
    if alg == TWO_COLON_TWO or alg == TWO_PLUS_TWO:
        s2 = random_bits(n, rng)
    else:
        s2 = s1.copy()
    return run(alg, problem, mut, xo, strategy, pc, tie, s1, s2, cutoff, rng)
