"""Working-precision plumbing on top of mpmath.

Analytic values are plain ``mpmath.mpc`` / ``mpmath.mpf`` objects.  mpmath
keeps precision on the context rather than on the value, so a computation
is "at p bits" when it runs inside ``working_precision(p)``.
"""

from __future__ import annotations

import math
import re
from contextlib import contextmanager
from fractions import Fraction

import mpmath as mp

DEFAULT_PRECISION_BITS = 256

HPComplex = mp.mpc


@contextmanager
def working_precision(bits: int | None):
    """Run the enclosed block with ``bits`` of binary precision (None keeps the current one)."""
    if bits is None:
        yield
        return
    if int(bits) < 16:
        raise ValueError("precision_bits must be at least 16")
    with mp.workprec(int(bits)):
        yield


def current_precision() -> int:
    return mp.mp.prec


def default_tolerance(bits: int | None = None) -> mp.mpf:
    """Tolerance policy 2^(-bits/4)."""
    bits = current_precision() if bits is None else bits
    return mp.ldexp(mp.mpf(1), -(int(bits) // 4))


def hp(value) -> mp.mpc:
    """Convert ints, Fractions, floats, strings or mpmath numbers to an mpc at the current precision."""
    if isinstance(value, Fraction):
        return mp.mpc(mp.mpf(value.numerator) / value.denominator)
    if isinstance(value, str):
        return parse_complex(value)
    return mp.mpc(value)


def real(value) -> mp.mpf:
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    return mp.mpf(value)


def expjpi_rational(r: Fraction) -> mp.mpc:
    """exp(pi*i*r) for rational r, with r reduced mod 2 exactly first."""
    r = Fraction(r)
    num = r.numerator % (2 * r.denominator)
    x = mp.mpf(num) / r.denominator
    return mp.mpc(mp.cospi(x), mp.sinpi(x))


def bits_for_tolerance(tol, guard: int = 40, floor: int = 64) -> int:
    """Bits needed to resolve ``tol`` with ``guard`` spare bits, capped by the current precision."""
    tol = mp.mpf(tol)
    if tol <= 0:
        return current_precision()
    need = int(math.ceil(-float(mp.log(tol, 2)))) + guard
    return max(floor, min(current_precision(), need))


_COMPLEX_RE = re.compile(
    r"""^\s*
    (?P<re>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?
    \s*
    (?:(?P<sign>[+-])\s*(?P<im>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?\s*[ij])?
    \s*$""",
    re.VERBOSE,
)


def parse_complex(text: str) -> mp.mpc:
    """Parse literals such as ``6-2i``, ``10``, ``-3.5+0.25i`` or ``4-i``.

    Decimal parts are read by mpmath at the current precision, so no
    binary64 rounding is introduced.
    """
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty complex literal")
    pure_imag = re.fullmatch(r"([+-]?)((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)?[ij]", s)
    if pure_imag:
        sign = -1 if pure_imag.group(1) == "-" else 1
        mag = mp.mpf(pure_imag.group(2)) if pure_imag.group(2) else mp.mpf(1)
        return mp.mpc(0, sign * mag)
    m = _COMPLEX_RE.match(s)
    if not m or (m.group("re") is None and m.group("sign") is None):
        raise ValueError(f"malformed complex literal: {text!r}")
    re_part = mp.mpf(m.group("re")) if m.group("re") else mp.mpf(0)
    im_part = mp.mpf(0)
    if m.group("sign"):
        mag = mp.mpf(m.group("im")) if m.group("im") else mp.mpf(1)
        im_part = mag if m.group("sign") == "+" else -mag
    return mp.mpc(re_part, im_part)


def format_complex(z, digits: int = 40) -> str:
    """Deterministic text form ``a+bi`` used in reports."""
    z = mp.mpc(z)
    re_s = mp.nstr(z.real, digits, min_fixed=-5, max_fixed=5)
    im = z.imag
    sign = "-" if im < 0 else "+"
    im_s = mp.nstr(abs(im), digits, min_fixed=-5, max_fixed=5)
    return f"{re_s}{sign}{im_s}i"


def format_real(x, digits: int = 20) -> str:
    return mp.nstr(mp.mpf(x), digits, min_fixed=-5, max_fixed=5)
