"""Seifert loop surgery data, validation, and the closed-form constants attached to it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import mpmath as mp

from .numerics.series import TwoPiIM, s_div, s_mul


class LoopError(ValueError):
    """Invalid surgery data."""


class PoleError(ValueError):
    """Evaluation requested at a pole."""


@dataclass(frozen=True)
class SeifertLoop:
    pairs: tuple

    @property
    def n(self) -> int:
        return len(self.pairs)

    @property
    def ps(self) -> tuple:
        return tuple(p for p, _ in self.pairs)

    @property
    def qs(self) -> tuple:
        return tuple(q for _, q in self.pairs)

    @property
    def P(self) -> int:
        return math.prod(self.ps)

    def __str__(self) -> str:
        return ",".join(f"{p}/{q}" for p, q in self.pairs)


def parse_loop(text: str) -> list:
    """'2/1,3/1,5/-4' -> [(2, 1), (3, 1), (5, -4)]."""
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            p_s, q_s = chunk.split("/")
            pairs.append((int(p_s), int(q_s)))
        except ValueError as exc:
            raise LoopError(f"malformed loop entry {chunk!r}; expected p/q") from exc
    if not pairs:
        raise LoopError("empty loop")
    return pairs


def make_loop(pairs) -> SeifertLoop:
    """Validate surgery data (string or iterable of (p, q)) and build a loop."""
    if isinstance(pairs, SeifertLoop):
        return pairs
    if isinstance(pairs, str):
        pairs = parse_loop(pairs)
    pairs = tuple((int(p), int(q)) for p, q in pairs)
    if not pairs:
        raise LoopError("a loop needs at least one singular fiber")
    for p, q in pairs:
        if p < 2:
            raise LoopError(f"p_j must be >= 2 (got {p})")
        if math.gcd(p, q) != 1:
            raise LoopError(f"gcd(p, q) must be 1 (got {p}/{q})")
    ps = [p for p, _ in pairs]
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if math.gcd(ps[i], ps[j]) != 1:
                raise LoopError(f"p's must be pairwise coprime ({ps[i]}, {ps[j]})")
    P = math.prod(ps)
    if P * sum(Fraction(q, p) for p, q in pairs) != 1:
        raise LoopError("integral homology condition P * sum(q_j/p_j) = 1 fails")
    return SeifertLoop(pairs)


def dedekind_sum(q: int, p: int) -> Fraction:
    """s(q, p) from the cotangent sum, snapped to the lattice (1/6p)Z.

    6p*s(q,p) is an integer, so a high-precision evaluation of the cotangent
    sum determines the value exactly once the rounding distance is checked.
    """
    if p < 1:
        raise ValueError("p must be positive")
    if math.gcd(q, p) != 1:
        raise ValueError(f"gcd({q}, {p}) != 1")
    if p == 1:
        return Fraction(0)
    bits = max(mp.mp.prec, 128)
    with mp.workprec(bits + 2 * p.bit_length() + 16):
        total = mp.mpf(0)
        for l in range(1, p):
            total += mp.cot(mp.pi * l / p) * mp.cot(mp.pi * ((l * q) % p) / p)
        value = total / (4 * p)
        scaled = value * 6 * p
        nearest = int(mp.nint(scaled))
        if abs(scaled - nearest) >= mp.ldexp(mp.mpf(1), -(bits // 2)):
            raise ArithmeticError("Dedekind sum failed to snap to (1/6p)Z")
    return Fraction(nearest, 6 * p)


@lru_cache(maxsize=None)
def theta0(loop: SeifertLoop) -> Fraction:
    value = 3 - Fraction(1, loop.P) + 12 * sum(dedekind_sum(q, p) for p, q in loop.pairs)
    if (value * loop.P).denominator != 1:
        raise ArithmeticError(f"Theta_0 = {value} has denominator not dividing P = {loop.P}")
    return value


def c_const(loop: SeifertLoop, N: int) -> Fraction:
    """c(N) = Theta_0 + (N^2 - 1) P."""
    return theta0(loop) + (N * N - 1) * loop.P


def b_const(loop: SeifertLoop) -> mp.mpc:
    """B = -exp(3 pi i / 4) / (4 sqrt P)."""
    return -mp.expjpi(mp.mpf(3) / 4) / (4 * mp.sqrt(loop.P))


@dataclass(frozen=True)
class DerivedConstants:
    P: int
    theta0: Fraction
    B: mp.mpc
    N: int
    c: Fraction


def derived_constants(loop: SeifertLoop, N: int = 1) -> DerivedConstants:
    if N < 1:
        raise ValueError("N must be >= 1")
    return DerivedConstants(P=loop.P, theta0=theta0(loop), B=b_const(loop), N=N, c=c_const(loop, N))


def g0(kappa) -> mp.mpc:
    """G_0(kappa) = sqrt(kappa/2) / sin(pi/kappa), principal square root."""
    kappa = mp.mpc(kappa)
    if kappa == 0:
        raise ZeroDivisionError("kappa = 0")
    inv = 1 / kappa
    if mp.im(inv) == 0 and mp.re(inv) == mp.nint(mp.re(inv)):
        raise ZeroDivisionError("sin(pi/kappa) = 0: G_0 has a pole here")
    s = mp.sin(mp.pi * inv)
    if abs(s) < mp.ldexp(mp.mpf(1), -mp.mp.prec + 8):
        raise ZeroDivisionError("sin(pi/kappa) = 0: G_0 has a pole here")
    return mp.sqrt(kappa / 2) / s


def sign_vectors(n: int):
    """All eps in {+1,-1}^n in a fixed order."""
    return list(product((1, -1), repeat=n))


def half_integer_range(N: int):
    """2*ell for ell = -(N-1)/2, ..., (N-1)/2."""
    return list(range(-(N - 1), N, 2))


def a_coeff(loop: SeifertLoop, ell, eps: Sequence[int]) -> int:
    """a_{ell,eps} = P (2 ell + n - 2 + sum eps_j / p_j); ell may be a half-integer or an integer m."""
    ell = Fraction(ell)
    if (2 * ell).denominator != 1:
        raise ValueError("2*ell must be an integer")
    if len(eps) != loop.n or any(e not in (1, -1) for e in eps):
        raise ValueError("eps must be a sign vector of length n")
    value = loop.P * (2 * ell + loop.n - 2 + sum(Fraction(e, p) for e, p in zip(eps, loop.ps)))
    if value.denominator != 1:
        raise ArithmeticError("a_{ell,eps} is not an integer")
    return int(value)


def binom_weight(m: int, n: int) -> int:
    """binom(m+n-3, n-3), with the n <= 2 convention (1 at m = 0, else 0)."""
    if n <= 2:
        return 1 if m == 0 else 0
    return math.comb(m + n - 3, n - 3)


def sign_product(eps: Iterable[int]) -> int:
    return math.prod(eps)


def pole_order(loop: SeifertLoop, m: int) -> int:
    """Order of the pole of F_N at y = 2 pi i m (<= 0 means regular); exact zero counting."""
    if m == 0:
        return 0
    numerator_zeros = 1 + sum(1 for p in loop.ps if m % p == 0)
    return (loop.n - 1) - numerator_zeros


# ---------------------------------------------------------------------------
# F_N(y)

@lru_cache(maxsize=None)
def F_taylor(loop: SeifertLoop, N: int, order: int) -> tuple:
    """Exact Taylor coefficients of F_N at 0 through y^order."""
    if order < 2:
        raise ValueError("order must be >= 2")
    n = loop.n
    width = order + n
    def two_sinh(a: Fraction):
        out = [Fraction(0)] * width
        for k in range(1, width, 2):
            out[k] = 2 * a ** k / math.factorial(k)
        return out
    num = two_sinh(Fraction(N, 2))
    for p in loop.ps:
        num = s_mul(num, two_sinh(Fraction(1, 2 * p)), width)
    den = [Fraction(1)] + [Fraction(0)] * (width - 1)
    for _ in range(n - 1):
        den = s_mul(den, two_sinh(Fraction(1, 2)), width)
    shift = n - 1
    q = s_div(num[shift:], den[shift:], order + 1)
    return tuple(Fraction(c) for c in q)


def _two_sinh_series(rate, center, terms: int) -> list:
    """Taylor coefficients of 2 sinh(rate * y) about center (exact zeros at 2 pi i m when they occur)."""
    if isinstance(center, TwoPiIM):
        x = Fraction(rate) * 2 * center.m
        s0 = mp.mpc(0, 2 * mp.sinpi(mp.mpf(x.numerator) / x.denominator))
        c0 = 2 * mp.cospi(mp.mpf(x.numerator) / x.denominator)
        r = mp.mpf(Fraction(rate).numerator) / Fraction(rate).denominator
    else:
        r = mp.mpf(Fraction(rate).numerator) / Fraction(rate).denominator
        y0 = mp.mpc(center)
        s0 = 2 * mp.sinh(r * y0)
        c0 = 2 * mp.cosh(r * y0)
    out = []
    fact = mp.mpf(1)
    power = mp.mpf(1)
    for k in range(terms):
        if k:
            power *= r
            fact *= k
        out.append((s0 if k % 2 == 0 else c0) * power / fact)
    return out


def F_numerator_series(loop: SeifertLoop, N: int):
    def factory(center, terms):
        out = _two_sinh_series(Fraction(N, 2), center, terms)
        for p in loop.ps:
            out = s_mul(out, _two_sinh_series(Fraction(1, 2 * p), center, terms), terms)
        return out
    return factory


def F_denominator_series(loop: SeifertLoop):
    def factory(center, terms):
        base = _two_sinh_series(Fraction(1, 2), center, terms)
        out = [mp.mpf(1)] + [0] * (terms - 1)
        for _ in range(loop.n - 1):
            out = s_mul(out, base, terms)
        return out
    return factory


def _nearest_pole_index(y) -> int:
    return int(mp.nint(mp.im(y) / (2 * mp.pi)))


def F_eval(loop: SeifertLoop, N: int, y) -> mp.mpc:
    """F_N(y) = 2sinh(Ny/2) prod 2sinh(y/2p_j) / (2sinh(y/2))^(n-1)."""
    y = mp.mpc(y)
    prec = mp.mp.prec
    tiny = mp.ldexp(mp.mpf(1), -prec // 2)
    m = _nearest_pole_index(y)
    if m != 0 and abs(y - TwoPiIM(m).value()) < tiny:
        if pole_order(loop, m) >= 1:
            raise PoleError(f"F_N has a pole at y = 2*pi*i*{m}")
        from .numerics.series import laurent_series
        v, coeffs = laurent_series(F_numerator_series(loop, N), F_denominator_series(loop),
                                   TwoPiIM(m), 2)
        return mp.mpc(coeffs[0]) if v == 0 else mp.mpc(0)
    if abs(y) < mp.ldexp(mp.mpf(1), -16):
        order = 2 * (prec // 32) + 6
        coeffs = F_taylor(loop, N, order)
        total = mp.mpc(0)
        for c in reversed(coeffs):
            total = total * y + mp.mpf(c.numerator) / c.denominator
        return total
    with mp.workprec(prec + 24):
        half = y / 2
        num = 2 * mp.sinh(N * half)
        for p in loop.ps:
            num *= 2 * mp.sinh(half / p)
        result = num / (2 * mp.sinh(half)) ** (loop.n - 1)
    return +result


def integrand(loop: SeifertLoop, N: int, kappa, y) -> mp.mpc:
    """exp(kappa * i y^2 / (8 pi P)) * F_N(y)."""
    y = mp.mpc(y)
    return mp.exp(mp.mpc(kappa) * mp.mpc(0, 1) * y * y / (8 * mp.pi * loop.P)) * F_eval(loop, N, y)
