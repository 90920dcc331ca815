"""Global working precision for the arbitrary-precision routines.

All reals are :class:`mpmath.mpf`. The default working precision is 256 bits
and can be changed process-wide with :func:`set_bits`. Routines that need
extra headroom (Gram solves, Vandermonde solves, noiseless peeling) raise the
precision locally with :func:`workbits`.
"""

from __future__ import annotations

import contextlib
import math

from mpmath import mp, mpf

DEFAULT_BITS = 256

_bits = DEFAULT_BITS


def get_bits() -> int:
    return _bits


def set_bits(bits: int) -> None:
    """Set the process-wide working precision (in bits)."""
    global _bits
    if bits < 53:
        raise ValueError("precision must be at least 53 bits")
    _bits = int(bits)
    mp.prec = _bits


@contextlib.contextmanager
def workbits(bits: int | None = None):
    """Run a block at ``bits`` of precision (default: the global setting)."""
    with mp.workprec(int(bits or _bits)):
        yield


def to_mpf(x) -> mpf:
    """Convert floats, ints, strings and mpf values to mpf at current precision."""
    if isinstance(x, str):
        return mp.mpf(x)
    return mp.mpf(x)


def digits_for(bits: int) -> int:
    """Decimal digits that round-trip a ``bits``-bit binary mantissa."""
    return int(math.ceil(bits * math.log10(2))) + 2


def mpf_to_str(x, bits: int | None = None) -> str:
    """Decimal string that parses back to the same mpf at ``bits`` precision."""
    n = digits_for(bits or max(mp.prec, _bits))
    return mp.nstr(mp.mpf(x), n, strip_zeros=True, min_fixed=-5, max_fixed=n)


mp.prec = _bits
