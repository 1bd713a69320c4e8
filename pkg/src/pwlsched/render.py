"""Text rendering of exact numbers."""

from __future__ import annotations

from fractions import Fraction

from .pwl import INF, fmt_rational

OVERLINE = "̅"


def repeating_decimal(q, overline: bool = True) -> str:
    """Decimal expansion with the repetend marked.

    ``40/3`` gives ``13.3̄`` (combining overline on each repeating digit) or
    ``13.(3)`` with ``overline=False``. Terminating expansions are plain.
    """
    if isinstance(q, float) and q in (INF, -INF):
        return fmt_rational(q)
    q = Fraction(q)
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, rem = divmod(q.numerator, q.denominator)
    if rem == 0:
        return f"{sign}{whole}"
    digits = []
    seen = {}
    while rem and rem not in seen:
        seen[rem] = len(digits)
        rem *= 10
        digits.append(str(rem // q.denominator))
        rem %= q.denominator
    if not rem:
        return f"{sign}{whole}." + "".join(digits)
    start = seen[rem]
    head, cycle = "".join(digits[:start]), digits[start:]
    if overline:
        tail = "".join(d + OVERLINE for d in cycle)
    else:
        tail = "(" + "".join(cycle) + ")"
    return f"{sign}{whole}.{head}{tail}"


def render(q, style: str = "fraction") -> str:
    """``style`` is ``fraction`` (default), ``decimal`` (overline) or ``paren``."""
    if style == "fraction":
        return fmt_rational(q)
    if style == "decimal":
        return repeating_decimal(q, overline=True)
    if style == "paren":
        return repeating_decimal(q, overline=False)
    raise ValueError(f"unknown number style {style!r}")
