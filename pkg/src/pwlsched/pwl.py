"""Exact continuous nondecreasing piecewise-linear functions.

Everything here works on :class:`fractions.Fraction` so that breakpoints such
as 40/3 survive every operation without rounding. Infinite abscissae (used for
interval ends) are plain ``math.inf`` floats, which compare correctly against
fractions.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction
Number = Union[int, str, Fraction, float]

INF = math.inf

_FRACTION_RE = re.compile(r"^\s*[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?(\s*/\s*[-+]?\d+)?\s*$")


def as_rational(value: Number) -> Fraction:
    """Convert ``value`` to an exact fraction.

    Strings may be integers, decimals or ``p/q``. Floats are converted through
    their shortest repr, so ``0.1`` becomes ``1/10`` rather than the binary
    expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} is not a rational")
        return Fraction(repr(value))
    if isinstance(value, str):
        if not _FRACTION_RE.match(value):
            raise ValueError(f"cannot parse {value!r} as a rational")
        return Fraction(value.replace(" ", ""))
    raise TypeError(f"unsupported numeric type {type(value).__name__}")


def fmt_rational(q) -> str:
    """Fraction rendering used in serialization and traces (``40/3``, ``-inf``)."""
    if isinstance(q, float):
        if q == INF:
            return "inf"
        if q == -INF:
            return "-inf"
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_extended(text: str):
    """Parse a rational or ``inf``/``-inf``."""
    s = text.strip().lower()
    if s in ("inf", "+inf", "infinity", "+infinity"):
        return INF
    if s in ("-inf", "-infinity"):
        return -INF
    return as_rational(text)


@dataclass(frozen=True)
class PwlFunction:
    """Continuous nondecreasing piecewise-linear function of one variable.

    The function equals ``initial_value`` on ``(-inf, breakpoints[0])`` and has
    slope ``slopes[i]`` on ``[breakpoints[i], breakpoints[i+1])``; the last
    slope extends to ``+inf``. The slope left of the first breakpoint is 0.

    Instances are always in canonical form: breakpoints strictly increasing,
    slopes nonnegative, adjacent slopes distinct and the first slope nonzero.
    Use :meth:`from_pieces` to build from unnormalized data.
    """

    initial_value: Fraction = Fraction(0)
    breakpoints: tuple = ()
    slopes: tuple = ()
    _knot_values: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        init = as_rational(self.initial_value)
        bps = tuple(as_rational(b) for b in self.breakpoints)
        mus = tuple(as_rational(m) for m in self.slopes)
        if len(bps) != len(mus):
            raise ValueError("breakpoints and slopes must have equal length")
        for a, b in zip(bps, bps[1:]):
            if not b > a:
                raise ValueError("breakpoints must be strictly increasing")
        prev = Fraction(0)
        for m in mus:
            if m < 0:
                raise ValueError("slopes must be nonnegative")
            if m == prev:
                raise ValueError("adjacent slopes must differ (use PwlFunction.from_pieces to normalize)")
            prev = m
        vals = []
        v = init
        for k, b in enumerate(bps):
            if k:
                v += mus[k - 1] * (b - bps[k - 1])
            vals.append(v)
        object.__setattr__(self, "initial_value", init)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", mus)
        object.__setattr__(self, "_knot_values", tuple(vals))

    # -- construction -------------------------------------------------------

    @classmethod
    def from_pieces(cls, initial_value: Number, breakpoints: Iterable[Number], slopes: Iterable[Number]) -> "PwlFunction":
        """Build a function, merging equal-slope neighbours and zero-length pieces.

        Repeated breakpoints keep the last slope given for them.
        """
        bps = [as_rational(b) for b in breakpoints]
        mus = [as_rational(m) for m in slopes]
        if len(bps) != len(mus):
            raise ValueError("breakpoints and slopes must have equal length")
        dedup: list[list[Fraction]] = []
        for b, m in zip(bps, mus):
            if dedup and b < dedup[-1][0]:
                raise ValueError("breakpoints must be nondecreasing")
            if dedup and b == dedup[-1][0]:
                dedup[-1][1] = m
            else:
                dedup.append([b, m])
        out_b, out_m = [], []
        prev = Fraction(0)
        for b, m in dedup:
            if m != prev:
                out_b.append(b)
                out_m.append(m)
                prev = m
        return cls(as_rational(initial_value), tuple(out_b), tuple(out_m))

    @classmethod
    def constant(cls, c: Number = 0) -> "PwlFunction":
        return cls(as_rational(c))

    @classmethod
    def from_knots(cls, knots: Sequence[tuple], final_slope: Number) -> "PwlFunction":
        """Interpolate through ``(x, y)`` knots.

        The function is flat left of the first knot, linear between knots and
        has ``final_slope`` right of the last one.
        """
        knots = sorted((as_rational(x), as_rational(y)) for x, y in knots)
        if not knots:
            raise ValueError("need at least one knot")
        bps, mus = [], []
        for (x0, y0), (x1, y1) in zip(knots, knots[1:]):
            if x1 == x0:
                if y1 != y0:
                    raise ValueError(f"discontinuity at {x0}")
                continue
            bps.append(x0)
            mus.append((y1 - y0) / (x1 - x0))
        bps.append(knots[-1][0])
        mus.append(as_rational(final_slope))
        return cls.from_pieces(knots[0][1], bps, mus)

    # -- queries ------------------------------------------------------------

    @property
    def M(self) -> int:
        return len(self.breakpoints)

    def __call__(self, x) -> Fraction:
        return self.eval(x)

    def eval(self, x) -> Fraction:
        """Value at ``x`` (exact for rational ``x``)."""
        if isinstance(x, float):
            if x == INF:
                return INF if self.slopes and self.slopes[-1] > 0 else self._tail_value()
            if x == -INF:
                return self.initial_value
        x = as_rational(x)
        k = bisect_right(self.breakpoints, x)
        if k == 0:
            return self.initial_value
        return self._knot_values[k - 1] + self.slopes[k - 1] * (x - self.breakpoints[k - 1])

    def _tail_value(self) -> Fraction:
        return self._knot_values[-1] if self.breakpoints else self.initial_value

    def slope_right(self, x) -> Fraction:
        """Slope on the piece starting at or containing ``x`` (right derivative)."""
        k = bisect_right(self.breakpoints, x)
        return Fraction(0) if k == 0 else self.slopes[k - 1]

    def knots(self) -> list[tuple[Fraction, Fraction]]:
        """``(breakpoint, value)`` pairs."""
        return list(zip(self.breakpoints, self._knot_values))

    def segments(self) -> list[tuple]:
        """Linear pieces as ``(lo, hi, slope, value_at_lo)``; ``lo`` of the first is ``-inf``."""
        out = []
        lo = -INF
        val = self.initial_value
        slope = Fraction(0)
        for b, v, m in zip(self.breakpoints, self._knot_values, self.slopes):
            out.append((lo, b, slope, val))
            lo, val, slope = b, v, m
        out.append((lo, INF, slope, val))
        return out

    # -- algebra -------------------------------------------------------------

    def shift(self, t: Number) -> "PwlFunction":
        return shift(self, t)

    def add_constant(self, c: Number) -> "PwlFunction":
        return add_constant(self, c)

    def __add__(self, other):
        if isinstance(other, PwlFunction):
            return pwl_sum(self, other)
        return add_constant(self, other)

    __radd__ = __add__

    # -- serialization -------------------------------------------------------

    def serialize(self) -> str:
        parts = [f"init {fmt_rational(self.initial_value)}"]
        parts += [f"bp {fmt_rational(b)} {fmt_rational(m)}" for b, m in zip(self.breakpoints, self.slopes)]
        return "; ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "PwlFunction":
        """Inverse of :meth:`serialize`; the input must already be canonical."""
        init = None
        bps, mus = [], []
        for raw in text.split(";"):
            tok = raw.split()
            if not tok:
                continue
            if tok[0] == "init" and len(tok) == 2 and init is None:
                init = as_rational(tok[1])
            elif tok[0] == "bp" and len(tok) == 3:
                bps.append(as_rational(tok[1]))
                mus.append(as_rational(tok[2]))
            else:
                raise ValueError(f"bad PWL entry {raw.strip()!r}")
        if init is None:
            raise ValueError("missing 'init' entry")
        return cls(init, tuple(bps), tuple(mus))

    def __str__(self) -> str:
        return self.serialize()


@dataclass(frozen=True)
class DeviationCost:
    """Window cost ``g(x) = -nu (x - x2)`` on ``[x1, x2)`` and 0 elsewhere."""

    x1: Fraction
    x2: Fraction
    nu: Fraction

    def __post_init__(self):
        x1, x2, nu = as_rational(self.x1), as_rational(self.x2), as_rational(self.nu)
        if not x1 < x2:
            raise ValueError("DeviationCost needs x1 < x2")
        if not nu > 0:
            raise ValueError("DeviationCost needs nu > 0")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "nu", nu)

    def __call__(self, x) -> Fraction:
        x = as_rational(x)
        if self.x1 <= x < self.x2:
            return -self.nu * (x - self.x2)
        return Fraction(0)


@dataclass(frozen=True)
class WinnerInterval:
    """Half-open interval ``[lo, hi)`` on which ``winners`` attain the minimum."""

    lo: object
    hi: object
    winners: tuple

    @property
    def is_tie(self) -> bool:
        return len(self.winners) > 1

    def contains(self, t) -> bool:
        return self.lo <= t < self.hi


def shift(f: PwlFunction, t: Number) -> PwlFunction:
    """``x -> f(x + t)``."""
    t = as_rational(t)
    if t == 0:
        return f
    return PwlFunction(f.initial_value, tuple(b - t for b in f.breakpoints), f.slopes)


def add_constant(f: PwlFunction, c: Number) -> PwlFunction:
    return PwlFunction(f.initial_value + as_rational(c), f.breakpoints, f.slopes)


def ramp(threshold: Number, slope: Number) -> PwlFunction:
    """``x -> slope * max(x - threshold, 0)``."""
    slope = as_rational(slope)
    if slope <= 0:
        raise ValueError("ramp slope must be positive")
    return PwlFunction(Fraction(0), (as_rational(threshold),), (slope,))


def pwl_sum(f1: PwlFunction, f2: PwlFunction) -> PwlFunction:
    """Pointwise sum."""
    xs = sorted(set(f1.breakpoints) | set(f2.breakpoints))
    return PwlFunction.from_pieces(
        f1.initial_value + f2.initial_value,
        xs,
        [f1.slope_right(x) + f2.slope_right(x) for x in xs],
    )


def lower_envelope(fs: Sequence[PwlFunction]) -> tuple[PwlFunction, list[WinnerInterval]]:
    """Pointwise minimum of several functions with the minimizer sets.

    Returns the minimum and an ordered partition of the real line into
    half-open intervals tagged by the indices of all functions attaining it.
    A crossing point belongs to the interval on its right.
    """
    if not fs:
        raise ValueError("need at least one function")
    grid = sorted(set().union(*(f.breakpoints for f in fs)))
    cuts = set(grid)
    # extra pairwise crossings inside each elementary interval
    spans = list(zip([None] + grid, grid + [None]))
    for lo, hi in spans:
        if lo is None:
            continue  # every function is flat left of the first breakpoint
        lines = [(f.eval(lo), f.slope_right(lo)) for f in fs]
        for a in range(len(lines)):
            for b in range(a + 1, len(lines)):
                (va, sa), (vb, sb) = lines[a], lines[b]
                if sa == sb:
                    continue
                x = lo + (vb - va) / (sa - sb)
                if x > lo and (hi is None or x < hi):
                    cuts.add(x)
    pts = sorted(cuts)
    if not pts:
        vals = [f.initial_value for f in fs]
        best = min(vals)
        win = tuple(k for k, v in enumerate(vals) if v == best)
        return PwlFunction.constant(best), [WinnerInterval(-INF, INF, win)]
    probes = [pts[0] - 1] + [(a + b) / 2 for a, b in zip(pts, pts[1:])] + [pts[-1] + 1]
    bounds = [-INF] + pts + [INF]
    intervals: list[WinnerInterval] = []
    for k, p in enumerate(probes):
        vals = [f.eval(p) for f in fs]
        best = min(vals)
        win = tuple(i for i, v in enumerate(vals) if v == best)
        lo, hi = bounds[k], bounds[k + 1]
        if intervals and intervals[-1].winners == win:
            intervals[-1] = WinnerInterval(intervals[-1].lo, hi, win)
        else:
            intervals.append(WinnerInterval(lo, hi, win))
    knots = [(x, min(f.eval(x) for f in fs)) for x in pts]
    last = pts[-1] + 1
    final_slope = min(fs, key=lambda f: (f.eval(last), f.slope_right(last))).slope_right(last)
    return PwlFunction.from_knots(knots, final_slope), intervals


def min_of(f1: PwlFunction, f2: PwlFunction) -> tuple[PwlFunction, list[WinnerInterval]]:
    """Pointwise minimum of two functions; winners are indices 0 and 1."""
    return lower_envelope([f1, f2])
