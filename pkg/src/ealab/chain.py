"""Exact Markov chains of the small EAs.

A solution is encoded as an integer whose bit ``n - a`` holds position ``a``,
so ``"1101"`` is 13 and integer order is lexicographic order.  A population
state of arity 2 is ``s1 * 2**n + s2``.

Rows are built by enumerating every operator outcome at once for all states
(vectorized over the state index), followed by deterministic selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernel as K
from .core import (Algorithm, Crossover, EaConfig, Mutation, Problem,
                   Strategy, TiePolicy, bits)
from .errors import InvalidConfig, MappingInvalid, NotAbsorbing, SizeLimit

DEFAULT_CAP = 2 ** 20
DENSE_MAX = 4096
ENUMERATION_MAX_N = 6


# ---------------------------------------------------------------- states

def lo_table(n: int) -> np.ndarray:
    """LeadingOnes value of every integer-encoded string of length n."""
    x = np.arange(2 ** n, dtype=np.int64)
    lo = np.zeros_like(x)
    alive = np.ones_like(x)
    for a in range(1, n + 1):
        alive &= (x >> (n - a)) & 1
        lo += alive
    return lo


def om_table(n: int) -> np.ndarray:
    x = np.arange(2 ** n, dtype=np.int64)
    ones = np.zeros_like(x)
    for b in range(n):
        ones += (x >> b) & 1
    return ones


def fitness_table(problem: Problem, n: int) -> np.ndarray:
    return lo_table(n) if problem == Problem.LEADING_ONES else om_table(n)


def encode(s) -> int:
    """Integer code of a bit string (str or array)."""
    arr = bits(s) if isinstance(s, str) else np.asarray(s)
    v = 0
    for b in arr:
        v = (v << 1) | int(b)
    return v


def decode(v: int, n: int) -> str:
    return format(int(v), f"0{n}b")


@dataclass(frozen=True)
class StateSpace:
    n: int
    arity: int

    @property
    def size(self) -> int:
        return 2 ** (self.n * self.arity)

    @cached_property
    def s1(self) -> np.ndarray:
        idx = np.arange(self.size, dtype=np.int64)
        return idx >> self.n if self.arity == 2 else idx

    @cached_property
    def s2(self) -> Optional[np.ndarray]:
        if self.arity == 1:
            return None
        return np.arange(self.size, dtype=np.int64) & (2 ** self.n - 1)

    @cached_property
    def optimal(self) -> np.ndarray:
        full = 2 ** self.n - 1
        opt = self.s1 == full
        if self.arity == 2:
            opt |= self.s2 == full
        return opt

    def index(self, *solutions) -> int:
        if len(solutions) != self.arity:
            raise ValueError(f"expected {self.arity} solution(s)")
        codes = [encode(s) for s in solutions]
        for s, c in zip(solutions, codes):
            if len(s) != self.n:
                raise ValueError("solution length does not match n")
        return codes[0] if self.arity == 1 else (codes[0] << self.n) | codes[1]

    def state(self, idx: int) -> tuple:
        if self.arity == 1:
            return (decode(idx, self.n),)
        return decode(idx >> self.n, self.n), decode(idx & (2 ** self.n - 1), self.n)

    def states(self) -> list:
        return [self.state(i) for i in range(self.size)]


def enumerate_population_space(n: int, arity: int, cap: int = DEFAULT_CAP) -> StateSpace:
    if n < 1 or arity not in (1, 2):
        raise ValueError("need n >= 1 and arity 1 or 2")
    if 2 ** (n * arity) > cap:
        raise SizeLimit(f"{2 ** (n * arity)} states exceed the cap of {cap}")
    return StateSpace(n, arity)


# ---------------------------------------------------------------- building

@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    space: StateSpace
    matrix: sp.csr_matrix
    config: Optional[EaConfig] = None

    @property
    def n(self) -> int:
        return self.space.n

    @cached_property
    def transposed(self) -> sp.csr_matrix:
        return self.matrix.T.tocsr()

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def row(self, i: int) -> np.ndarray:
        return self.matrix.getrow(i).toarray().ravel()


class _Accumulator:
    """Collects (state -> outcome, weight) for every state at once.  Each
    call adds exactly one outcome per row, so dense fancy-index updates
    never hit duplicate cells."""

    def __init__(self, size: int):
        self.size = size
        self.rows = np.arange(size, dtype=np.int64)
        self.dense = np.zeros((size, size)) if size <= DENSE_MAX else None
        self.parts = []

    def add(self, cols: np.ndarray, w) -> None:
        w = np.broadcast_to(np.asarray(w, dtype=float), cols.shape)
        if self.dense is not None:
            self.dense[self.rows, cols] += w
            return
        keep = w > 0
        self.parts.append((self.rows[keep], cols[keep], w[keep]))

    def result(self) -> sp.csr_matrix:
        # summed outcome weights can overshoot 1 by an ulp
        if self.dense is not None:
            return sp.csr_matrix(np.minimum(self.dense, 1.0))
        r = np.concatenate([p[0] for p in self.parts])
        c = np.concatenate([p[1] for p in self.parts])
        v = np.concatenate([p[2] for p in self.parts])
        m = sp.coo_matrix((v, (r, c)), shape=(self.size, self.size)).tocsr()
        m.sum_duplicates()
        np.minimum(m.data, 1.0, out=m.data)
        return m


def _mask_weight(n: int, mask: int) -> float:
    k = bin(mask).count("1")
    p = 1.0 / n
    return p ** k * (1.0 - p) ** (n - k)


def _flips(kind: Mutation, n: int):
    """(weight, xor mask) pairs of a mutation operator."""
    if kind == Mutation.ONE_BIT:
        return [(1.0 / n, 1 << b) for b in range(n)]
    return [(_mask_weight(n, m), m) for m in range(2 ** n)]


def _swap(x1, x2, mask):
    d = (x1 ^ x2) & mask
    return x1 ^ d, x2 ^ d


def _highest_diff(x1, x2, n):
    diff = x1 ^ x2
    hb = np.zeros_like(diff)
    for b in range(n):
        m = 1 << b
        hb = np.where(diff & m, m, hb)
    return hb


def _crossover_outcomes(kind: Crossover, n: int, x1, x2):
    """Yield (weight, child1, child2) covering the operator's distribution."""
    if kind == Crossover.ONE_POINT:
        for cut in range(1, n):
            yield (1.0 / (n - 1), *_swap(x1, x2, (1 << (n - cut)) - 1))
    elif kind == Crossover.UNIFORM:
        for m in range(2 ** n):
            yield (_mask_weight(n, m), *_swap(x1, x2, m))
    elif kind == Crossover.ONE_BIT:
        for b in range(n):
            yield (1.0 / n, *_swap(x1, x2, 1 << b))
    elif kind == Crossover.ONE_DIFF_BIT:
        diff = x1 ^ x2
        d = np.zeros_like(diff)
        for b in range(n):
            d += (diff >> b) & 1
        safe = np.maximum(d, 1)
        for b in range(n):
            hit = (diff >> b) & 1
            yield (hit / safe, *_swap(x1, x2, hit << b))
        yield ((d == 0).astype(float), x1, x2)
    else:
        hb = _highest_diff(x1, x2, n)
        mask = hb if kind == Crossover.FIRST_DIFF_BIT else np.where(hb > 0, 2 * hb - 1, 0)
        yield (1.0, *_swap(x1, x2, mask))


def _select_pair(config: EaConfig, fit, n, x1, x2, o1, o2):
    f1, f2, g1, g2 = fit[x1], fit[x2], fit[o1], fit[o2]
    if config.algorithm == Algorithm.TWO_COLON_TWO:
        if config.tie_policy == TiePolicy.PREFER_OFFSPRING:
            t1, t2 = g1 >= f1, g2 >= f2
        else:
            t1, t2 = g1 > f1, g2 > f2
        return (np.where(t1, o1, x1) << n) | np.where(t2, o2, x2)
    cand = np.stack([x1, x2, o1, o2])
    fits = np.stack([f1, f2, g1, g2])
    beaten = np.zeros_like(fits)
    for k in range(4):
        for c in range(4):
            if c == k:
                continue
            beaten[k] += (fits[c] > fits[k]) | ((fits[c] == fits[k]) & (c < k))
    sel = beaten < 2
    first = np.argmax(sel, axis=0)
    second = 3 - np.argmax(sel[::-1], axis=0)
    cols = np.arange(x1.size)
    return (cand[first, cols] << n) | cand[second, cols]


def _reproduction_weights(config: EaConfig, space: StateSpace):
    """Per-state probabilities of (mutation, {crossover kind: weight})."""
    if config.strategy is None:
        xo = {} if config.crossover is None or config.pc == 0 else {config.crossover: config.pc}
        return 1.0 - config.pc, xo
    n = space.n
    ones, lo = om_table(n), lo_table(n)
    x1, x2 = space.s1, space.s2
    act = K.action_table(int(config.strategy), n, ones[x1], lo[x1], ones[x2],
                         lo[x2], x1 == x2)
    if config.strategy == Strategy.MR3:
        w_odb = 0.5 * (act == K.ACT_ONE_DIFF_BIT)
        return 1.0 - w_odb, {Crossover.ONE_DIFF_BIT: w_odb}
    return (act == K.ACT_MUTATE).astype(float), {
        Crossover.FIRST_DIFF_BIT: (act == K.ACT_FIRST_DIFF_BIT).astype(float),
        Crossover.FIRST_DIFF_POINT: (act == K.ACT_FIRST_DIFF_POINT).astype(float),
    }


def build_chain(config: EaConfig, n: int, cap: int = DEFAULT_CAP) -> TransitionMatrix:
    """Exact one-step transition matrix of ``config`` on strings of length n."""
    config.validate(n)
    arity = config.algorithm.arity
    space = enumerate_population_space(n, arity, cap)
    heavy = config.mutation == Mutation.BITWISE or (
        config.crossover == Crossover.UNIFORM and config.pc > 0)
    if heavy and n > ENUMERATION_MAX_N:
        raise SizeLimit(f"bitwise/uniform enumeration is limited to n <= {ENUMERATION_MAX_N}")
    fit = fitness_table(config.problem, n)
    acc = _Accumulator(space.size)

    if arity == 1:
        x = space.s1
        for w, m in _flips(config.mutation, n):
            o = x ^ m
            ok = fit[o] >= fit[x] if config.algorithm == Algorithm.ONE_PLUS_ONE else fit[o] > fit[x]
            acc.add(np.where(ok, o, x), w)
        return TransitionMatrix(space, acc.result(), config)

    x1, x2 = space.s1, space.s2
    w_mut, xo_weights = _reproduction_weights(config, space)
    mutation = Mutation.ONE_BIT if config.strategy is not None else config.mutation
    if np.any(np.asarray(w_mut) > 0):
        flips = _flips(mutation, n)
        for wa, ma in flips:
            for wb, mb in flips:
                o1, o2 = x1 ^ ma, x2 ^ mb
                acc.add(_select_pair(config, fit, n, x1, x2, o1, o2), w_mut * wa * wb)
    for kind, wk in xo_weights.items():
        if not np.any(np.asarray(wk) > 0):
            continue
        for w, o1, o2 in _crossover_outcomes(kind, n, x1, x2):
            acc.add(_select_pair(config, fit, n, x1, x2, o1, o2), wk * w)
    return TransitionMatrix(space, acc.result(), config)


# ---------------------------------------------------------------- solving

def _reaches_optimum(chain: TransitionMatrix) -> np.ndarray:
    reach = chain.space.optimal.copy()
    adj = chain.matrix.copy()
    adj.data = (adj.data > 0).astype(float)
    while True:
        nxt = reach | (adj @ reach.astype(float) > 0)
        if np.array_equal(nxt, reach):
            return reach
        reach = nxt


def cfht_solve(chain: TransitionMatrix, tol: float = 1e-9) -> np.ndarray:
    """Conditional first hitting time from every state (zero on X*)."""
    opt = chain.space.optimal
    reach = _reaches_optimum(chain)
    if not reach.all():
        bad = np.flatnonzero(~reach)[0]
        raise NotAbsorbing(f"state {chain.space.state(bad)} never reaches the optimum")
    trans = np.flatnonzero(~opt)
    h = np.zeros(chain.space.size)
    if trans.size == 0:
        return h
    q = chain.matrix[trans][:, trans]
    a = sp.identity(trans.size, format="csr") - q
    ones = np.ones(trans.size)
    if trans.size <= DENSE_MAX:
        ht = scipy.linalg.solve(a.toarray(), ones)
    else:
        ht = spla.spsolve(a.tocsc(), ones)
    for _ in range(3):
        r = ones - a @ ht
        if np.max(np.abs(r)) <= tol:
            break
        ht = ht + (scipy.linalg.solve(a.toarray(), r) if trans.size <= DENSE_MAX
                   else spla.spsolve(a.tocsc(), r))
    h[trans] = ht
    return h


def cfht_residual(chain: TransitionMatrix, h: np.ndarray) -> float:
    """max |h - 1 - P h| over transient states."""
    trans = ~chain.space.optimal
    r = h - 1.0 - chain.matrix @ h
    return float(np.max(np.abs(r[trans]), initial=0.0))


def efht_uniform(chain: TransitionMatrix, h: Optional[np.ndarray] = None) -> float:
    if h is None:
        h = cfht_solve(chain)
    return float(np.mean(h))


def uniform_distribution(space: StateSpace) -> np.ndarray:
    return np.full(space.size, 1.0 / space.size)


def evolve(chain: TransitionMatrix, pi: np.ndarray, steps: int) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if abs(pi.sum() - 1.0) > 1e-12:
        raise ValueError("distribution must sum to 1")
    for _ in range(steps):
        pi = chain.transposed @ pi
    return pi


def trajectory(chain: TransitionMatrix, pi: np.ndarray, steps: int) -> list:
    """[pi_0, pi_1, ..., pi_steps]."""
    out = [np.asarray(pi, dtype=float)]
    for _ in range(steps):
        out.append(evolve(chain, out[-1], 1))
    return out


# ---------------------------------------------------------------- observables

def position_marginals(space: StateSpace, pi: np.ndarray, position: int) -> tuple:
    """(P(s1(a)=0, s2(a)=0), P(s1(a)=0, s2(a)=1)) at 1-based position a."""
    shift = space.n - position
    b1 = (space.s1 >> shift) & 1
    b2 = (space.s2 >> shift) & 1
    return float(pi[(b1 == 0) & (b2 == 0)].sum()), float(pi[(b1 == 0) & (b2 == 1)].sum())


def equal_lo_mass(space: StateSpace, pi: np.ndarray) -> float:
    """pi(LO_1 = LO_2 < n)."""
    lo = lo_table(space.n)
    l1, l2 = lo[space.s1], lo[space.s2]
    return float(pi[(l1 == l2) & (l1 < space.n)].sum())


def pair_counts(space: StateSpace) -> tuple:
    """(N(0,0), N(0,1), N(1,0)) for every state."""
    n = space.n
    n00 = np.zeros(space.size, dtype=np.int64)
    n01 = np.zeros_like(n00)
    n10 = np.zeros_like(n00)
    for b in range(n):
        b1 = (space.s1 >> b) & 1
        b2 = (space.s2 >> b) & 1
        n00 += (b1 == 0) & (b2 == 0)
        n01 += (b1 == 0) & (b2 == 1)
        n10 += (b1 == 1) & (b2 == 0)
    return n00, n01, n10


def n01_fraction(space: StateSpace, pi: np.ndarray, zero_over_zero: float = 1.0) -> float:
    """E[N(0,1) / (N(0,1) + N(0,0))] with 0/0 replaced by ``zero_over_zero``."""
    n00, n01, _ = pair_counts(space)
    den = n00 + n01
    frac = np.where(den > 0, n01 / np.maximum(den, 1), zero_over_zero)
    return float(pi @ frac)


# ---------------------------------------------------------------- mappings

def phi_indices(problem: Problem, space: StateSpace) -> np.ndarray:
    """Index in the 1-solution space of phi(x) for every pair state x."""
    if space.arity != 2:
        raise ValueError("phi maps pair states")
    n = space.n
    x1, x2 = space.s1, space.s2
    if problem == Problem.LEADING_ONES:
        lo = lo_table(n)
        m = np.maximum(lo[x1], lo[x2])
        return ((1 << m) - 1) << (n - m)
    ones = om_table(n)
    return np.where(ones[x1] >= ones[x2], x1, x2)


def phi_map(problem: Problem, s1, s2) -> str:
    """phi of a single population given as two bit strings."""
    n = len(s1)
    space = StateSpace(n, 2)
    idx = space.index(s1, s2)
    return decode(phi_indices(problem, space)[idx], n)


# ---------------------------------------------------------------- GMCST

@dataclass
class GmcstReport:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    rho: np.ndarray
    residual_mass: np.ndarray
    horizon: int
    residual: float
    truncated: bool
    e_tau: float
    e_tau_ref: float
    max_ref_cfht: float
    analytic_rho: Optional[np.ndarray] = None
    direction: str = "le"
    step_failures: list = field(default_factory=list)

    @property
    def rho_sum(self) -> float:
        return float(self.rho.sum())

    @property
    def truncation_bound(self) -> float:
        return self.residual * self.max_ref_cfht

    @property
    def le_holds(self) -> bool:
        slack = self.truncation_bound + 1e-9 * max(1.0, self.e_tau)
        return self.e_tau <= self.e_tau_ref + np.maximum(self.rho, 0).sum() + slack

    @property
    def ge_holds(self) -> bool:
        slack = self.truncation_bound + 1e-9 * max(1.0, self.e_tau)
        return self.e_tau >= self.e_tau_ref + np.minimum(self.rho, 0).sum() - slack

    @property
    def steps_pass(self) -> bool:
        return not self.step_failures

    @property
    def analytic_conclusion(self) -> Optional[bool]:
        """E[tau] against E[tau'] + sum of the analytic slack over the
        computed horizon (conservative for a slack of matching sign)."""
        if self.analytic_rho is None:
            return None
        bound = self.e_tau_ref + self.analytic_rho.sum()
        tol = 1e-9 * max(1.0, self.e_tau)
        if self.direction == "le":
            return self.e_tau <= bound + tol
        return self.e_tau >= bound - tol


def gmcst_check(chain_a: TransitionMatrix, chain_b: TransitionMatrix,
                phi: np.ndarray, pi0: np.ndarray, horizon: int = 1_000_000,
                tail_eps: float = 1e-12,
                rho: Optional[Callable[[int, float], float]] = None,
                direction: str = "le") -> GmcstReport:
    """Numerically evaluate both sides of the switching condition.

    ``rho(t, absorbed_mass)`` is an optional analytic slack; each step is
    then checked as lhs - rhs <= rho (direction "le") or >= rho ("ge").
    """
    if direction not in ("le", "ge"):
        raise ValueError("direction is 'le' or 'ge'")
    phi = np.asarray(phi, dtype=np.int64)
    opt_a, opt_b = chain_a.space.optimal, chain_b.space.optimal
    if phi.shape != (chain_a.space.size,) or not np.array_equal(opt_a, opt_b[phi]):
        raise MappingInvalid("phi must map X* onto Y* and the rest off it")
    h_b = cfht_solve(chain_b)
    h_a = cfht_solve(chain_a)
    pa_g = chain_a.matrix @ h_b[phi]
    pb_h = chain_b.matrix @ h_b
    nb = chain_b.space.size

    pi = np.asarray(pi0, dtype=float)
    rec_t, rec_l, rec_r, rec_m, rec_an = [], [], [], [], []
    failures = []
    truncated = False
    t = 0
    while True:
        absorbed = float(pi[opt_a].sum())
        residual = max(0.0, 1.0 - absorbed)
        if residual < tail_eps:
            break
        if t >= horizon:
            truncated = True
            break
        lhs = float(pi @ pa_g)
        rhs = float(np.bincount(phi, weights=pi, minlength=nb) @ pb_h)
        rec_t.append(t)
        rec_l.append(lhs)
        rec_r.append(rhs)
        rec_m.append(residual)
        if rho is not None:
            r = float(rho(t, absorbed))
            rec_an.append(r)
            tol = 1e-12 * max(1.0, abs(lhs), abs(rhs))
            diff = lhs - rhs
            if (direction == "le" and diff > r + tol) or (direction == "ge" and diff < r - tol):
                failures.append((t, diff, r))
        pi = chain_a.transposed @ pi
        t += 1

    pi0 = np.asarray(pi0, dtype=float)
    lhs_a, rhs_a = np.array(rec_l), np.array(rec_r)
    return GmcstReport(
        t=np.array(rec_t, dtype=np.int64), lhs=lhs_a, rhs=rhs_a, rho=lhs_a - rhs_a,
        residual_mass=np.array(rec_m), horizon=t, residual=residual,
        truncated=truncated, e_tau=float(pi0 @ h_a),
        e_tau_ref=float(np.bincount(phi, weights=pi0, minlength=nb) @ h_b),
        max_ref_cfht=float(h_b.max()),
        analytic_rho=np.array(rec_an) if rho is not None else None,
        direction=direction, step_failures=failures)


# ---------------------------------------------------------------- audit

@dataclass(frozen=True)
class Discrepancy:
    check: str
    state: tuple
    target: str
    expected: float
    actual: float


def _first_zero_flip(x: int, n: int, lo: int) -> int:
    return x | (1 << (n - lo - 1))


def _lo_expected_row(n: int, pc: float, x1: int, x2: int, l1: int, l2: int) -> dict:
    """Predicted transition law for the (2:2)-EA, one-bit operators, LO."""
    y1, y2 = _first_zero_flip(x1, n, l1), _first_zero_flip(x2, n, l2)
    q = 1.0 - pc
    row = {
        (y1, x2): q * (n - 1) / n ** 2,
        (x1, y2): q * (n - 1) / n ** 2,
        (y1, y2): q / n ** 2,
        (x1, x2): q * (n - 1) ** 2 / n ** 2,
    }
    if l1 == l2:
        row[(x1, x2)] += pc
        return row
    # a is the slot with fewer leading ones, b the other one
    if l1 < l2:
        xa, lb, key_a, key_b = x1, l2, (y1, x2), (x1, y2)
    else:
        xa, lb, key_a, key_b = x2, l1, (x1, y2), (y1, x2)
    row[key_a] += pc / n
    if (xa >> (n - lb - 1)) & 1:
        row[key_b] += pc / n
        row[(x1, x2)] += pc * (n - 2) / n
    else:
        row[(x1, x2)] += pc * (n - 1) / n
    return row


def transition_audit(config: EaConfig, n: int, steps: int = 20,
                     tol: float = 1e-12, uniform_tol: float = 1e-9) -> list:
    """Compare chain rows of the (2:2)-EA with one-bit operators against the
    stated transition laws; on LeadingOnes also check that, given
    (LO_1, LO_2), the evolved law is uniform over the free suffix bits."""
    if config.algorithm != Algorithm.TWO_COLON_TWO or config.mutation != Mutation.ONE_BIT \
            or config.strategy is not None or config.crossover not in (None, Crossover.ONE_BIT):
        raise InvalidConfig("the audit covers the (2:2)-EA with one-bit operators")
    if n > ENUMERATION_MAX_N:
        raise SizeLimit("the audit is limited to n <= 6")
    chain = build_chain(config, n)
    space = chain.space
    pc = config.pc if config.crossover is not None else 0.0
    p = chain.dense()
    out = []
    lo, ones = lo_table(n), om_table(n)
    full = 2 ** n - 1

    for idx in np.flatnonzero(~space.optimal):
        x1, x2 = int(space.s1[idx]), int(space.s2[idx])
        state = space.state(idx)
        if config.problem == Problem.LEADING_ONES:
            expected = _lo_expected_row(n, pc, x1, x2, int(lo[x1]), int(lo[x2]))
            row = p[idx].copy()
            for (a, b), v in expected.items():
                j = (a << n) | b
                if abs(row[j] - v) > tol:
                    out.append(Discrepancy("lo_row", state, str(space.state(j)), v, row[j]))
                row[j] = 0.0
            for j in np.flatnonzero(np.abs(row) > tol):
                out.append(Discrepancy("lo_row", state, str(space.state(j)), 0.0, row[j]))
        else:
            i, j_ = n - int(ones[x1]), n - int(ones[x2])
            k = bin(~x1 & x2 & full).count("1")
            ups1 = {x1 | (1 << b) for b in range(n) if not (x1 >> b) & 1}
            ups2 = {x2 | (1 << b) for b in range(n) if not (x2 >> b) & 1}
            sets = {
                "X1": (1 - pc) * i * j_ / n ** 2,
                "X2": pc * (j_ - i + k) / n + (1 - pc) * (n - i) * j_ / n ** 2,
                "X3": pc * k / n + (1 - pc) * (n - j_) * i / n ** 2,
                "stay": pc * (n + i - j_ - 2 * k) / n + (1 - pc) * (n - i) * (n - j_) / n ** 2,
            }
            mass = dict.fromkeys(sets, 0.0)
            other = 0.0
            for col in np.flatnonzero(p[idx]):
                a, b = int(space.s1[col]), int(space.s2[col])
                v = p[idx, col]
                if a in ups1 and b in ups2:
                    mass["X1"] += v
                elif a == x1 and b in ups2:
                    mass["X2"] += v
                elif a in ups1 and b == x2:
                    mass["X3"] += v
                elif a == x1 and b == x2:
                    mass["stay"] += v
                else:
                    other += v
            for key, v in sets.items():
                if abs(mass[key] - v) > tol:
                    out.append(Discrepancy("om_row", state, key, v, mass[key]))
            if other > tol:
                out.append(Discrepancy("om_row", state, "other", 0.0, other))

    if config.problem == Problem.LEADING_ONES:
        l1, l2 = lo[space.s1], lo[space.s2]
        live = (l1 < n) & (l2 < n)
        group = l1 * (n + 1) + l2
        counts = np.bincount(group[live], minlength=(n + 1) ** 2)
        pi = uniform_distribution(space)
        for t in range(steps + 1):
            sums = np.bincount(group[live], weights=pi[live], minlength=(n + 1) ** 2)
            mean = sums[group] / np.maximum(counts[group], 1)
            dev = np.where(live, np.abs(pi - mean), 0.0)
            worst = int(np.argmax(dev))
            if dev[worst] > uniform_tol:
                out.append(Discrepancy(f"lo_uniform_t{t}", space.state(worst),
                                       f"LO=({l1[worst]},{l2[worst]})",
                                       float(mean[worst]), float(pi[worst])))
            pi = chain.transposed @ pi
    return out


def lo_slot_uniformity(chain: TransitionMatrix, steps: int = 20) -> float:
    """Largest deviation from uniformity of one slot's law given that
    slot's own LO (< n), over both slots and t = 0..steps.  This is the
    per-solution form of the suffix-uniformity claim."""
    space = chain.space
    n = space.n
    lo = lo_table(n)
    strings = np.arange(2 ** n)
    live = lo[strings] < n
    counts = np.bincount(lo[strings][live], minlength=n + 1)
    pi = uniform_distribution(space)
    worst = 0.0
    for _ in range(steps + 1):
        for slot in (space.s1, space.s2):
            law = np.bincount(slot, weights=pi, minlength=2 ** n)
            sums = np.bincount(lo[strings][live], weights=law[live], minlength=n + 1)
            mean = sums[lo[strings]] / np.maximum(counts[lo[strings]], 1)
            worst = max(worst, float(np.max(np.abs(law - mean)[live])))
        pi = chain.transposed @ pi
    return worst


# ---------------------------------------------------------------- export

def export_chain(chain: TransitionMatrix, fh) -> None:
    """Write the sparse triplet format: header 'n arity optimal_count', then
    one 'i j p' line per nonzero entry in row-major order."""
    space = chain.space
    fh.write(f"{space.n} {space.arity} {int(space.optimal.sum())}\n")
    m = chain.matrix.tocsr()
    m.sort_indices()
    for i in range(space.size):
        for k in range(m.indptr[i], m.indptr[i + 1]):
            fh.write(f"{i} {m.indices[k]} {float(m.data[k])!r}\n")


def read_chain(fh) -> tuple:
    """Parse the triplet format back into (n, arity, optimal_count, csr)."""
    n, arity, opt = (int(v) for v in fh.readline().split())
    size = 2 ** (n * arity)
    data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        m = sp.csr_matrix((size, size))
    else:
        m = sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                          shape=(size, size))
    return n, arity, opt, m
