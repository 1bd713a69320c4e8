"""Parametric minimization of ``f(x + t) + g(x)`` over ``x1 <= x <= x2``.

Three pieces:

* :func:`omega` computes the upward jump instants of the minimizer, one per
  slope drop below ``nu`` (a row-by-row port of the reference jump-time
  algorithm, with optional row trace);
* :func:`argmin_policy` assembles the minimizer ``x(t)`` from those instants;
* :func:`value_function` builds the optimal value ``h(t)`` as a
  :class:`~pwlsched.pwl.PwlFunction`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .pwl import INF, DeviationCost, PwlFunction, fmt_rational

log = logging.getLogger(__name__)

TraceSink = Callable[[int, str, object], None]


@dataclass(frozen=True)
class CrossingSets:
    """1-based breakpoint indices where the slope of f crosses ``nu``.

    ``A`` holds upward crossings (``mu_{i-1} < nu <= mu_i``), ``B`` downward
    ones (``mu_{i-1} >= nu > mu_i``), with ``mu_0 = 0``.
    """

    A: tuple
    B: tuple

    def __post_init__(self):
        A, B = self.A, self.B
        if len(A) - len(B) not in (0, 1):
            raise ValueError("crossing sets must interleave")
        for j, b in enumerate(B):
            if not A[j] < b:
                raise ValueError("a_j < b_j violated")
            if j + 1 < len(A) and not b < A[j + 1]:
                raise ValueError("b_j < a_{j+1} violated")


def crossing_sets(f: PwlFunction, nu) -> CrossingSets:
    nu = Fraction(nu)
    A, B = [], []
    prev = Fraction(0)
    for i, mu in enumerate(f.slopes, start=1):
        if prev < nu <= mu:
            A.append(i)
        elif prev >= nu > mu:
            B.append(i)
        prev = mu
    return CrossingSets(tuple(A), tuple(B))


@dataclass(frozen=True)
class JumpTimes:
    """All ``omega_j`` plus the finite ones (``tstars``) and the map ``l``."""

    omegas: tuple
    tstars: tuple
    l: tuple  # l[q-1] = j (1-based) with omega_j = tstar_q

    @classmethod
    def from_omegas(cls, omegas) -> "JumpTimes":
        omegas = tuple(omegas)
        pairs = [(w, j) for j, w in enumerate(omegas, start=1) if w != INF]
        return cls(omegas, tuple(w for w, _ in pairs), tuple(j for _, j in pairs))

    @property
    def Q(self) -> int:
        return len(self.tstars)


@dataclass(frozen=True)
class PolicySegment:
    """``x(t)`` on ``[lo, hi)``: constant ``value`` or, if ``descending``, ``-t + value``."""

    lo: object
    hi: object
    value: Fraction
    descending: bool = False

    def at(self, t) -> Fraction:
        return self.value - t if self.descending else self.value

    def contains(self, t) -> bool:
        return self.lo <= t < self.hi

    def describe(self) -> str:
        expr = f"-t+{fmt_rational(self.value)}" if self.descending else fmt_rational(self.value)
        return f"[{fmt_rational(self.lo)}, {fmt_rational(self.hi)}) {expr}"


@dataclass(frozen=True)
class ArgminPolicy:
    """Minimizer ``x(t)`` as ordered half-open segments covering the real line."""

    segments: tuple
    jump_times: JumpTimes
    bounds: tuple
    crossings: CrossingSets
    f: PwlFunction = field(repr=False)
    g: DeviationCost = field(repr=False)

    def __call__(self, t) -> Fraction:
        return self.segment_at(t).at(t)

    def segment_at(self, t) -> PolicySegment:
        for seg in self.segments:
            if seg.contains(t):
                return seg
        raise ValueError(f"t={t} not covered")  # unreachable for a valid policy

    def table(self) -> list[tuple]:
        """``(lo, hi, kind, value)`` rows; kind is ``'const'`` or ``'desc'``."""
        return [(s.lo, s.hi, "desc" if s.descending else "const", s.value) for s in self.segments]


# ---------------------------------------------------------------------------
# jump times


class _Tracer:
    def __init__(self, sink: Optional[TraceSink]):
        self.sink = sink

    def __call__(self, row: int, var: str, value):
        if self.sink is not None:
            self.sink(row, var, value)


def format_trace_line(row: int, var: str, value) -> str:
    return f"row={row} var={var} value={fmt_rational(value)}"


def omega(f: PwlFunction, g: DeviationCost, j: int, trace: Optional[TraceSink] = None, cs: Optional[CrossingSets] = None):
    """Jump instant ``omega_j`` (a Fraction) or ``INF`` when no jump occurs.

    ``trace`` receives ``(row, variable, value)`` for every assignment, using
    the row numbering of the reference listing.
    """
    cs = cs or crossing_sets(f, g.nu)
    A, B = list(cs.A), list(cs.B)
    if not 1 <= j <= len(B):
        raise ValueError(f"j={j} out of range 1..{len(B)}")
    x1, x2, nu = g.x1, g.x2, g.nu
    M = f.M
    w = x2 - x1
    tr = _Tracer(trace)

    gam = [-INF] + list(f.breakpoints) + [INF]  # gam[0], gam[1..M], gam[M+1]
    mu_t = [Fraction(0) - nu] + [m - nu for m in f.slopes]  # mu~_p = mu_p - nu, p = 0..M

    def span_mul(coef, length):
        # coef * length where length may be +inf (coef is never 0 there)
        if length == INF:
            return INF if coef > 0 else -INF
        return coef * length

    a = [0] + A  # 1-based a_r, with a_0 = 0
    b = [0] + B
    if j == len(B) and len(A) == len(B):
        a.append(M + 1)
    bj, aj1 = b[j], a[j + 1]

    tr(1, "gamma_0", -INF)
    h = max(p for p in range(0, M + 1) if gam[p] <= gam[bj] - w)
    tr(2, "h", h)
    i = bj
    tr(3, "i", i)
    tr(4, f"gamma_{M + 1}", INF)
    k = max(p for p in range(0, M + 1) if gam[p] < gam[bj] + w)
    tr(5, "k", k)
    if j == len(B) and len(A) == len(B):
        tr(7, f"a_{j + 1}", M + 1)
    for p in range(h, k + 1):
        tr(10, f"mu_tilde_{p}", mu_t[p])
    tau = gam[bj] - w
    tr(12, "tau", tau)
    theta = gam[bj]
    tr(13, "theta", theta)
    d = max(Fraction(0), mu_t[h] * (gam[h + 1] - tau))
    tr(14, "d", d)
    for p in range(h + 1, bj):
        d = max(Fraction(0), d + mu_t[p] * (gam[p + 1] - gam[p]))
        tr(17, "d", d)
    lam = h
    tr(20, "lambda", lam)
    xi = i
    tr(21, "xi", xi)

    # Section B
    while h < bj and i < aj1:
        left, right = gam[h + 1] - tau, gam[i + 1] - theta
        psi = min(left, right)
        tr(23, "psi", psi)
        if left <= right:
            lam = h + 1
            tr(25, "lambda", lam)
        if left >= right:
            xi = i + 1
            tr(28, "xi", xi)
        delta = max(Fraction(0), mu_t[lam] * (gam[lam + 1] - (tau + psi)))
        tr(30, "delta", delta)
        for p in range(lam + 1, bj):
            delta = max(Fraction(0), delta + mu_t[p] * (gam[p + 1] - gam[p]))
            tr(33, "delta", delta)
        if xi == bj:
            delta = delta + mu_t[xi] * ((theta + psi) - gam[xi])
            tr(37, "delta", delta)
        elif xi == aj1:
            delta = delta + sum((span_mul(mu_t[p], gam[p + 1] - gam[p]) for p in range(bj, xi)), Fraction(0))
            tr(39, "delta", delta)
        else:
            delta = (delta + sum((mu_t[p] * (gam[p + 1] - gam[p]) for p in range(bj, xi)), Fraction(0))
                     + mu_t[xi] * ((theta + psi) - gam[xi]))
            tr(41, "delta", delta)

        if delta <= 0:
            tr(44, "a_0", 0)
            r = next(r for r in range(1, len(a)) if a[r - 1] <= h < a[r])
            tr(45, "r", r)
            if r <= j:
                m = None
                for q in range(r, j + 1):
                    chi = mu_t[h] * (gam[h + 1] - tau)
                    tr(48, "chi", chi)
                    if h < a[q] - 1:
                        chi = chi + sum((mu_t[p] * (gam[p + 1] - gam[p]) for p in range(h + 1, a[q])), Fraction(0))
                        tr(50, "chi", chi)
                    m = chi if q == r else min(m, chi)
                    tr(53 if q == r else 55, "m", m)
                if m <= 0:
                    res = tau - x1 - d / mu_t[i]
                    tr(59, "omega", res)
                elif mu_t[h] == 0 or -(d - m) / mu_t[i] <= m / mu_t[h]:
                    # mu~_h = 0 (slope exactly nu): m / mu~_h reads as +inf
                    res = tau - x1 + d / (mu_t[h] - mu_t[i])
                    tr(61, "omega", res)
                else:
                    res = tau - x1 - (d - m) / mu_t[i]
                    tr(64, "omega", res)
            else:
                res = tau - x1 + d / (mu_t[h] - mu_t[i])
                tr(68, "omega", res)
            return res
        h = lam
        tr(72, "h", h)
        i = xi
        tr(73, "i", i)
        tau = tau + psi
        tr(74, "tau", tau)
        theta = theta + psi
        tr(75, "theta", theta)
        d = delta
        tr(76, "d", d)

    # Section C
    while h < bj:
        psi = gam[h + 1] - tau
        tr(80, "psi", psi)
        lam = h + 1
        tr(81, "lambda", lam)
        if lam < bj:
            delta = max(Fraction(0), mu_t[lam] * (gam[lam + 1] - (tau + psi)))
            tr(83, "delta", delta)
            for p in range(lam + 1, bj):
                delta = max(Fraction(0), delta + mu_t[p] * (gam[p + 1] - gam[p]))
                tr(86, "delta", delta)
        else:
            delta = Fraction(0)
            tr(90, "delta", delta)
        delta = delta + sum((span_mul(mu_t[p], gam[p + 1] - gam[p]) for p in range(bj, aj1)), Fraction(0))
        tr(92, "delta", delta)
        if delta <= 0:
            if d != 0:
                tau = tau + d / mu_t[h]
            tr(94, "tau", tau)
            theta = tau + w
            tr(95, "theta", theta)
            k = max(p for p in range(0, M + 1) if gam[p] < theta)
            tr(96, "k", k)
            r = aj1
            tr(97, "r", r)
            phi = Fraction(0)
            tr(98, "phi", phi)
            while r <= k:
                if r < k:
                    phi = phi + mu_t[r] * (gam[r + 1] - gam[r])
                    tr(101, "phi", phi)
                else:
                    phi = phi + mu_t[r] * (theta - gam[r])
                    tr(103, "phi", phi)
                if phi < 0:
                    tr(106, "omega", INF)
                    return INF
                r += 1
                tr(109, "r", r)
            res = tau - x1
            tr(112, "omega", res)
            return res
        h = lam
        tr(115, "h", h)
        tau = tau + psi
        tr(116, "tau", tau)
        d = delta
        tr(117, "d", d)

    # The listing guarantees an exit before the window passes gamma_{b_j}.
    raise RuntimeError(f"jump-time scan for j={j} ended without a result")


def jump_times(f: PwlFunction, g: DeviationCost, cs: Optional[CrossingSets] = None) -> JumpTimes:
    cs = cs or crossing_sets(f, g.nu)
    return JumpTimes.from_omegas(omega(f, g, j, cs=cs) for j in range(1, len(cs.B) + 1))


# ---------------------------------------------------------------------------
# minimizer assembly


def _pieces(spec, lo, hi) -> list[PolicySegment]:
    """Clip a list of ``(start, kind, value)`` pieces to ``[lo, hi)``.

    Each piece runs from its start to the next piece's start; the first starts
    at ``lo`` regardless of its own start.
    """
    out = []
    for n, (start, desc, val) in enumerate(spec):
        s = lo if n == 0 else max(lo, start)
        e = spec[n + 1][0] if n + 1 < len(spec) else hi
        e = min(e, hi)
        if s < e:
            out.append(PolicySegment(s, e, val, desc))
    return out


def argmin_policy(f: PwlFunction, g: DeviationCost) -> ArgminPolicy:
    """Minimizer of ``f(x + t) + g(x)`` on ``[x1, x2]`` as a function of ``t``.

    At a jump instant the post-jump value is taken (right-continuous).
    """
    cs = crossing_sets(f, g.nu)
    jt = jump_times(f, g, cs)
    x1, x2 = g.x1, g.x2
    gam = f.breakpoints
    A = cs.A
    Q = jt.Q
    ts = jt.tstars
    l = jt.l

    def G(idx):  # gamma of a_idx, idx 1-based
        return gam[A[idx - 1] - 1]

    segs: list[PolicySegment] = []

    if Q >= 1:
        g1 = G(1)
        t1 = ts[0]
        if t1 > g1 - x1:
            spec = [(-INF, False, x2), (g1 - x2, True, g1), (g1 - x1, False, x1)]
        else:
            spec = [(-INF, False, x2), (g1 - x2, True, g1)]
        segs += _pieces(spec, -INF, t1)

    for q in range(1, Q):
        Gq = G(l[q - 1] + 1)
        tq, tq1 = ts[q - 1], ts[q]
        early = tq < Gq - x2
        late = tq1 > Gq - x1
        if early and late:
            spec = [(tq, False, x2), (Gq - x2, True, Gq), (Gq - x1, False, x1)]
        elif late:
            spec = [(tq, True, Gq), (Gq - x1, False, x1)]
        elif early:
            spec = [(tq, False, x2), (Gq - x2, True, Gq)]
        else:
            spec = [(tq, True, Gq)]
        segs += _pieces(spec, tq, tq1)

    lQ = l[-1] if Q else 0
    tQ = ts[-1] if Q else -INF
    if lQ < len(A):
        Ge = G(lQ + 1)
        if tQ < Ge - x2:
            spec = [(tQ, False, x2), (Ge - x2, True, Ge), (Ge - x1, False, x1)]
        else:
            spec = [(tQ, True, Ge), (Ge - x1, False, x1)]
    else:
        spec = [(tQ, False, x2)]
    segs += _pieces(spec, tQ, INF)

    # merge touching pieces that continue the same rule
    merged: list[PolicySegment] = []
    for s in segs:
        if merged and merged[-1].hi == s.lo and merged[-1].descending == s.descending and merged[-1].value == s.value:
            merged[-1] = PolicySegment(merged[-1].lo, s.hi, s.value, s.descending)
        else:
            merged.append(s)
    return ArgminPolicy(tuple(merged), jt, (x1, x2), cs, f, g)


def value_function(f: PwlFunction, g: DeviationCost, policy: ArgminPolicy) -> PwlFunction:
    """Optimal value ``h(t) = f(x(t) + t) + g(x(t))`` as a PWL function.

    ``h`` follows ``f(x2 + t)`` where the minimizer sits at ``x2``,
    ``f(x1 + t) + nu (x2 - x1)`` where it sits at ``x1`` and a line of slope
    ``nu`` where it descends.
    """
    if policy.f != f or policy.g != g:
        raise ValueError("policy was built for a different (f, g)")

    def piece_value(seg: PolicySegment, t):
        x = seg.at(t)
        return f.eval(x + t) + g(x)

    knots = []
    for n, seg in enumerate(policy.segments):
        pts = set()
        if seg.lo != -INF:
            pts.add(seg.lo)
        if not seg.descending:
            pts.update(b - seg.value for b in f.breakpoints if seg.lo <= b - seg.value < seg.hi)
        for t in pts:
            knots.append((t, piece_value(seg, t)))
        if seg.hi != INF:
            # continuity of h across a policy boundary (a jump in x keeps the value)
            left = piece_value(seg, seg.hi)
            right = piece_value(policy.segments[n + 1], seg.hi)
            if left != right:
                raise AssertionError(f"h discontinuous at t={seg.hi}: {left} vs {right}")
    last = policy.segments[-1]
    if last.descending:
        raise AssertionError("policy cannot end descending")
    tail_x = (max(t for t, _ in knots) if knots else Fraction(0)) + 1 + last.value
    if not knots:
        return PwlFunction.constant(f.eval(last.value) + g(last.value))
    return PwlFunction.from_knots(knots, f.slope_right(tail_x))


def descending_pieces(policy: ArgminPolicy) -> list[tuple]:
    """``(lo, hi, slope, intercept)`` of the slope-``nu`` parts of ``h``.

    On a descending segment ``x = -t + G`` the value is
    ``nu t + f(G) - nu (G - x2)``.
    """
    f, g = policy.f, policy.g
    out = []
    for s in policy.segments:
        if s.descending:
            out.append((s.lo, s.hi, g.nu, f.eval(s.value) - g.nu * (s.value - g.x2)))
    return out


@dataclass(frozen=True)
class ArgminResult:
    policy: ArgminPolicy
    h: PwlFunction


def solve_window(f: PwlFunction, g: DeviationCost) -> ArgminResult:
    """Convenience: policy and value function together."""
    pol = argmin_policy(f, g)
    return ArgminResult(pol, value_function(f, g, pol))
