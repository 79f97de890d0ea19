"""Significant-figure rendering for tables."""

from __future__ import annotations

import math
from decimal import ROUND_HALF_UP, Decimal

# float noise below this many significant digits is discarded before rounding,
# so an exact half such as 8.205 (stored as 8.2049999...) rounds up
_CLEAN_DIGITS = 12


def round_sig(x: float, sig: int = 3) -> Decimal:
    if sig < 1:
        raise ValueError("sig must be >= 1")
    if x == 0 or not math.isfinite(x):
        return Decimal(x)
    cleaned = Decimal(f"{x:.{_CLEAN_DIGITS - 1}e}")
    exponent = cleaned.adjusted() - sig + 1
    return cleaned.quantize(Decimal(1).scaleb(exponent), rounding=ROUND_HALF_UP)


def format_sig(x: float, sig: int = 3) -> str:
    """Render ``x`` with ``sig`` significant figures, keeping trailing zeros.

    >>> format_sig(25.0), format_sig(166.666), format_sig(8.205)
    ('25.0', '167', '8.21')
    """
    if not math.isfinite(x):
        return str(x)
    d = round_sig(x, sig)
    if d.adjusted() >= sig:
        # more integer digits than significant figures: write it out in full
        return str(int(d))
    return f"{d:f}"
