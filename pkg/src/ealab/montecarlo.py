"""Monte Carlo estimation of expected hitting times.

Trial ``k`` draws from ``PCG64(SeedSequence(master_seed, spawn_key=stream + (k,)))``,
so every trial is an independent stream that depends only on its index.
Results are stored by index and reduced in index order, which makes the
estimate independent of the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernel as K
from .core import EaConfig, Strategy

THREADS_ENV = "EA_LAB_THREADS"


def default_cutoff(n: int) -> int:
    return 1000 * n * n


def worker_count(workers: Optional[int] = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def trial_seed(master_seed: int, stream: tuple, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=tuple(stream) + (trial,))


@dataclass(frozen=True)
class EfhtEstimate:
    mean: float
    stderr: float
    runs: int
    censored: int
    cutoff: int
    fingerprint: str
    master_seed: int
    n: int

    @property
    def flagged(self) -> bool:
        """True when some trial hit the cutoff."""
        return self.censored > 0

    @property
    def degenerate(self) -> bool:
        """True for a single-run sample (stderr is reported as 0)."""
        return self.runs == 1


def run_trials(config: EaConfig, n: int, runs: int, master_seed: int = 0,
               cutoff: Optional[int] = None, stream: tuple = (),
               workers: Optional[int] = None) -> tuple:
    """Raw per-trial (steps, censored) arrays in trial order."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    config.validate(n)
    cutoff = default_cutoff(n) if cutoff is None else int(cutoff)
    steps = np.zeros(runs, dtype=np.int64)
    cens = np.zeros(runs, dtype=bool)

    codes = config.codes()

    def work(lo: int, hi: int) -> None:
        # same computation as core.run_trial, minus per-call validation
        for k in range(lo, hi):
            rng = np.random.Generator(np.random.PCG64(trial_seed(master_seed, stream, k)))
            steps[k], cens[k] = K.run_random(*codes, n, cutoff, rng)

    w = min(worker_count(workers), runs)
    if w == 1:
        work(0, runs)
    else:
        bounds = np.linspace(0, runs, 4 * w + 1).astype(int)
        with ThreadPoolExecutor(max_workers=w) as pool:
            list(pool.map(lambda ab: work(*ab), zip(bounds[:-1], bounds[1:])))
    return steps, cens


def estimate_efht(config: EaConfig, n: int, runs: int, master_seed: int = 0,
                  cutoff: Optional[int] = None, stream: tuple = (),
                  workers: Optional[int] = None) -> EfhtEstimate:
    cutoff = default_cutoff(n) if cutoff is None else int(cutoff)
    steps, cens = run_trials(config, n, runs, master_seed, cutoff, stream, workers)
    x = steps.astype(float)
    se = float(x.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return EfhtEstimate(float(x.mean()), se, runs, int(cens.sum()), cutoff,
                        config.fingerprint(), master_seed, n)


def gap_statistic(efht_cross: float, efht_mut: float, n: int, pc: float) -> float:
    """(E_cross - E_mut) / n * (1 - p_c) / p_c."""
    if pc == 0:
        raise ZeroDivisionError("gap statistic undefined at p_c = 0")
    return (efht_cross - efht_mut) / n * (1.0 - pc) / pc


def ratio_statistic(efht_cross: float, efht_mut: float, pc: float) -> float:
    """E_cross / E_mut * (1 - p_c)."""
    if efht_mut == 0:
        raise ZeroDivisionError("ratio statistic undefined for E_mut = 0")
    return efht_cross / efht_mut * (1.0 - pc)


def gap_stderr(se_cross: float, se_mut: float, n: int, pc: float) -> float:
    return math.hypot(se_cross, se_mut) / n * (1.0 - pc) / pc


def ratio_stderr(cross: EfhtEstimate, mut: EfhtEstimate, pc: float) -> float:
    """Delta-method standard error of the ratio statistic."""
    m, c = mut.mean, cross.mean
    return (1.0 - pc) * math.sqrt((cross.stderr / m) ** 2 + (c * mut.stderr / m ** 2) ** 2)


@dataclass(frozen=True)
class ComparisonRecord:
    """One grid point; gap and ratio are filled against the p_c = 0
    baseline at the same n when the point uses crossover."""
    n: int
    pc: Optional[float]
    strategy: Optional[Strategy]
    estimate: EfhtEstimate
    baseline: Optional[EfhtEstimate] = None
    gap: Optional[float] = None
    gap_se: Optional[float] = None
    ratio: Optional[float] = None
    ratio_se: Optional[float] = None


def grid_stream(config: EaConfig, n: int) -> tuple:
    return (config.fingerprint_key(), n)


def sweep(base: EaConfig, ns: Sequence[int], pcs: Sequence[float] = (),
          strategies: Sequence[Strategy] = (), runs: int = 1000,
          master_seed: int = 0, cutoff: Optional[int] = None,
          workers: Optional[int] = None) -> list:
    """Estimate every grid point of (n) x (p_c values + strategies).

    ``base`` supplies algorithm, problem, mutation and crossover kind.  A
    p_c of 0 is the mutation-only baseline.  Seeds depend on the grid point
    alone, so any subset of the grid re-runs identically.
    """
    if not ns or not (pcs or strategies):
        raise ValueError("empty grid")
    out = []
    for n in ns:
        cut = default_cutoff(n) if cutoff is None else cutoff
        points = []
        for pc in pcs:
            cfg = EaConfig(base.algorithm, base.problem, base.mutation,
                           base.crossover if pc > 0 else None, float(pc),
                           None, base.tie_policy)
            points.append((pc, None, cfg))
        for st in strategies:
            cfg = EaConfig(base.algorithm, base.problem, strategy=st,
                           tie_policy=base.tie_policy)
            points.append((None, st, cfg))
        ests = [estimate_efht(cfg, n, runs, master_seed, cut, grid_stream(cfg, n), workers)
                for _, _, cfg in points]
        baseline = next((e for (pc, _, _), e in zip(points, ests) if pc == 0), None)
        for (pc, st, _), est in zip(points, ests):
            rec = ComparisonRecord(n, pc, st, est)
            if pc and baseline is not None:
                ratio = ratio_se = None
                if baseline.mean > 0:
                    ratio = ratio_statistic(est.mean, baseline.mean, pc)
                    ratio_se = ratio_stderr(est, baseline, pc)
                rec = ComparisonRecord(
                    n, pc, st, est, baseline,
                    gap_statistic(est.mean, baseline.mean, n, pc),
                    gap_stderr(est.stderr, baseline.stderr, n, pc), ratio, ratio_se)
            out.append(rec)
    return out
