"""Brute-force checkers that share no code path with the engine.

* :func:`grid_argmin` scans ``x`` on a uniform grid (plus the kinks of the
  objective) with float arithmetic;
* :func:`exact_envelope` evaluates the finitely many candidate minimizers of
  the window problem exactly;
* :func:`enumerate_sequences` tries every job-class sequence and solves the
  processing-time subproblem of each as a small linear program.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .pwl import DeviationCost, PwlFunction

MAX_ENUM_JOBS = 7


@dataclass(frozen=True)
class GridSpec:
    steps: int = 10_000
    t_samples: int = 1_000
    seed: int = 0

    def __post_init__(self):
        if self.steps < 10:
            raise ValueError("steps must be >= 10")
        if self.t_samples < 10:
            raise ValueError("t_samples must be >= 10")


def _f_numpy(f: PwlFunction):
    """Vectorized float evaluator for ``f``."""
    if not f.breakpoints:
        c = float(f.initial_value)
        return lambda x: np.full(np.shape(x), c)
    xs = np.array([float(b) for b, _ in f.knots()])
    ys = np.array([float(v) for _, v in f.knots()])
    tail = float(f.slopes[-1])

    def ev(x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, xs, ys)
        return np.where(x > xs[-1], ys[-1] + tail * (x - xs[-1]), out)

    return ev


def _g_numpy(g: DeviationCost):
    x1, x2, nu = float(g.x1), float(g.x2), float(g.nu)
    return lambda x: np.where((x >= x1) & (x < x2), -nu * (x - x2), 0.0)


def grid_argmin(f: PwlFunction, g: DeviationCost, t, grid: GridSpec = GridSpec()) -> tuple[float, float]:
    """Float scan of ``f(x + t) + g(x)`` over ``x`` in ``[x1, x2]``.

    Candidates are the uniform grid plus every breakpoint of ``f(. + t)``
    inside the window. Returns ``(x, value)`` for the smallest value, the
    smallest ``x`` on ties.
    """
    x1, x2 = float(g.x1), float(g.x2)
    t = float(t)
    xs = np.linspace(x1, x2, grid.steps + 1)
    extra = [float(b) - t for b in f.breakpoints if x1 <= float(b) - t <= x2]
    if extra:
        xs = np.unique(np.concatenate([xs, extra]))
    vals = _f_numpy(f)(xs + t) + _g_numpy(g)(xs)
    k = int(np.argmin(vals))
    return float(xs[k]), float(vals[k])


def grid_argmin_batch(f: PwlFunction, g: DeviationCost, ts, steps: int = 10_000) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """:func:`grid_argmin` for many ``t`` at once on the plain uniform grid.

    Returns ``(x_at_min, min_value, second_x)`` where ``second_x`` is the
    farthest grid point whose value is within 1e-9 of the minimum (used to
    detect non-unique minimizers).
    """
    x1, x2 = float(g.x1), float(g.x2)
    xs = np.linspace(x1, x2, steps + 1)
    ts = np.asarray(ts, dtype=float)
    fe, ge = _f_numpy(f), _g_numpy(g)
    gv = ge(xs)
    xmin = np.empty(len(ts))
    vmin = np.empty(len(ts))
    spread = np.empty(len(ts))
    for n, t in enumerate(ts):
        cand = np.concatenate([xs, [float(b) - t for b in f.breakpoints if x1 <= float(b) - t <= x2]])
        vals = fe(cand + t) + np.concatenate([gv, ge(cand[len(xs):])])
        k = int(np.argmin(vals))
        near = cand[vals <= vals[k] + 1e-9]
        xmin[n], vmin[n] = cand[k], vals[k]
        spread[n] = near.max() - near.min()
    return xmin, vmin, spread


def exact_envelope(f: PwlFunction, g: DeviationCost, t) -> tuple[Fraction, Fraction]:
    """Exact minimum of ``f(x + t) + g(x)`` on ``[x1, x2]``.

    The objective is piecewise linear in ``x`` and continuous on ``(x1, x2]``,
    so the minimum is at ``x1``, ``x2`` or a kink ``gamma_i - t``. Ties go to
    the largest ``x``.
    """
    t = Fraction(t)
    cands = {g.x1, g.x2}
    cands.update(b - t for b in f.breakpoints if g.x1 < b - t < g.x2)
    best = None
    for x in sorted(cands, reverse=True):
        v = f.eval(x + t) + g(x)
        if best is None or v < best[1]:
            best = (x, v)
    return best


# ---------------------------------------------------------------------------
# sequence enumeration


def _class_sequences(counts):
    pool = [c for c, n in enumerate(counts, start=1) for _ in range(n)]
    return sorted(set(itertools.permutations(pool)))


def sequence_cost(inst, seq, t0, tol: float = 1e-9) -> float:
    """Optimal total cost of a fixed class sequence, via an LP.

    Variables are the processing times and tardiness slacks; the objective
    is linear and the constraints are the completion-time recursions.
    """
    n = len(seq)
    t0 = float(t0)
    # x = [tau_1..tau_n, s_1..s_n]
    c = np.zeros(2 * n)
    const = 0.0
    bounds = []
    A, bvec = [], []
    done = [0] * (inst.n_classes + 1)
    last = 0
    offset = t0
    for k, cls in enumerate(seq):
        cd = inst.classes[cls - 1]
        job = cd.jobs[done[cls]]
        done[cls] += 1
        st = float(inst.setup_time[last][cls - 1]) if inst.has_setup else 0.0
        sc = float(inst.setup_cost[last][cls - 1]) if inst.has_setup else 0.0
        last = cls
        offset += st
        const += sc + float(cd.beta) * float(cd.pt_nom)
        c[k] = -float(cd.beta)
        c[n + k] = float(job.alpha)
        bounds.append((float(cd.pt_low), float(cd.pt_nom)))
        # t0 + sum(st) + sum_{i<=k} tau_i - dd_k <= s_k
        row = np.zeros(2 * n)
        row[: k + 1] = 1.0
        row[n + k] = -1.0
        A.append(row)
        bvec.append(float(job.dd) - offset)
    bounds += [(0, None)] * n
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(bvec), bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"LP failed for sequence {seq}: {res.message}")
    return float(res.fun) + const


def enumerate_sequences(inst, t0, grid: Optional[GridSpec] = None) -> tuple[float, tuple]:
    """Best total cost over all class sequences and the sequence attaining it.

    ``grid`` is accepted for interface symmetry; the per-sequence subproblem
    is solved by linear programming rather than a grid scan.
    """
    total = sum(len(c.jobs) for c in inst.classes)
    if total > MAX_ENUM_JOBS:
        raise ValueError(f"enumeration capped at {MAX_ENUM_JOBS} jobs, got {total}")
    best = (math.inf, ())
    for seq in _class_sequences([len(c.jobs) for c in inst.classes]):
        v = sequence_cost(inst, seq, t0)
        if v < best[0]:
            best = (v, seq)
    return best


# ---------------------------------------------------------------------------
# random instances


def _small_rational(rng: random.Random, lo: int, hi: int, dens=(1, 2, 4)) -> Fraction:
    d = rng.choice(dens)
    return Fraction(rng.randint(lo * d, hi * d), d)


def random_pwl(rng: random.Random, max_bp: int = 8, start=(0, 20)) -> PwlFunction:
    """Random canonical function with 1..max_bp breakpoints."""
    m = rng.randint(1, max_bp)
    x = _small_rational(rng, *start)
    bps, mus = [], []
    for _ in range(m):
        bps.append(x)
        mus.append(_small_rational(rng, 0, 4))
        x += _small_rational(rng, 1, 6) if rng.random() < 0.8 else Fraction(rng.randint(1, 3), 4)
    f = PwlFunction.from_pieces(_small_rational(rng, 0, 5), bps, mus)
    if not f.breakpoints:
        return PwlFunction(f.initial_value, (bps[0],), (Fraction(1),))
    return f


def random_window_pair(rng: random.Random, max_bp: int = 8) -> tuple[PwlFunction, DeviationCost]:
    """Random ``(f, g)``; ``nu`` is picked among f's slopes half the time so
    that both crossing directions occur often."""
    f = random_pwl(rng, max_bp)
    x1 = _small_rational(rng, 0, 6)
    x2 = x1 + _small_rational(rng, 1, 8)
    pos = [m for m in f.slopes if m > 0]
    if rng.random() < 0.5 and len(pos) > 1:
        lo, hi = min(pos), max(pos)
        nu = (lo + hi) / 2 if lo < hi else lo
        if rng.random() < 0.3:
            nu = rng.choice(pos)
    else:
        nu = _small_rational(rng, 0, 4)
        if nu == 0:
            nu = Fraction(1, 2)
    return f, DeviationCost(x1, x2, nu)


def random_instance(rng: random.Random, max_jobs: int = 5, n_classes: Optional[int] = None, setup: Optional[bool] = None):
    """Random scheduling instance with at most ``max_jobs`` jobs."""
    from .scheduler import ClassData, Job, ProblemInstance

    C = n_classes or rng.randint(1, 3)
    C = min(C, max_jobs)
    counts = [1] * C
    for _ in range(rng.randint(0, max_jobs - C)):
        counts[rng.randrange(C)] += 1
    classes = []
    for c in range(C):
        lo = _small_rational(rng, 1, 4)
        nom = lo + _small_rational(rng, 1, 4)
        dd = _small_rational(rng, 2, 10)
        jobs = []
        for _ in range(counts[c]):
            jobs.append(Job(_small_rational(rng, 1, 8, (4,)), dd))
            dd += _small_rational(rng, 0, 8)
        classes.append(ClassData(tuple(jobs), _small_rational(rng, 1, 6, (4,)), lo, nom))
    if setup is None:
        setup = rng.random() < 0.5
    if setup:
        st = [[_small_rational(rng, 0, 2) for _ in range(C)] for _ in range(C + 1)]
        sc = [[_small_rational(rng, 0, 2) for _ in range(C)] for _ in range(C + 1)]
        return ProblemInstance(tuple(classes), st, sc)
    return ProblemInstance(tuple(classes))
