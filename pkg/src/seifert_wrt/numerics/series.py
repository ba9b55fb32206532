"""Truncated power series and local Laurent expansion.

A series is a plain list ``c`` with ``c[k]`` the coefficient of ``h**k``.
The helpers are generic over the coefficient ring, so the same code runs on
``Fraction`` (exact Taylor data) and on mpmath numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath as mp


def s_add(a: Sequence, b: Sequence, n: int) -> list:
    return [(a[k] if k < len(a) else 0) + (b[k] if k < len(b) else 0) for k in range(n)]


def s_scale(a: Sequence, c, n: int) -> list:
    return [(a[k] * c if k < len(a) else 0) for k in range(n)]


def s_mul(a: Sequence, b: Sequence, n: int) -> list:
    out = [0] * n
    lb = len(b)
    for i in range(min(len(a), n)):
        ai = a[i]
        if ai == 0:
            continue
        for j in range(min(lb, n - i)):
            bj = b[j]
            if bj != 0:
                out[i + j] += ai * bj
    return out


def s_inv(a: Sequence, n: int) -> list:
    if not a or a[0] == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    a0 = a[0]
    inv0 = Fraction(1, 1) / a0 if isinstance(a0, (int, Fraction)) else 1 / a0
    out = [0] * n
    out[0] = inv0
    for k in range(1, n):
        acc = 0
        for j in range(1, min(k, len(a) - 1) + 1):
            if a[j] != 0:
                acc += a[j] * out[k - j]
        out[k] = -acc * inv0
    return out


def s_div(a: Sequence, b: Sequence, n: int) -> list:
    return s_mul(a, s_inv(b, n), n)


def s_pow(a: Sequence, e: int, n: int) -> list:
    """Integer power, negative exponents allowed when a[0] != 0."""
    if e < 0:
        return s_pow(s_inv(a, n), -e, n)
    result = [1] + [0] * (n - 1)
    base = list(a[:n]) + [0] * max(0, n - len(a))
    while e:
        if e & 1:
            result = s_mul(result, base, n)
        e >>= 1
        if e:
            base = s_mul(base, base, n)
    return result


def s_exp(a: Sequence, n: int) -> list:
    """exp of a series with mpmath coefficients (constant term allowed)."""
    a = list(a[:n]) + [0] * max(0, n - len(a))
    out = [0] * n
    out[0] = mp.exp(a[0])
    for k in range(1, n):
        acc = 0
        for j in range(1, k + 1):
            if a[j] != 0:
                acc += j * a[j] * out[k - j]
        out[k] = acc / k
    return out


def s_compose(outer: Sequence, inner: Sequence, n: int) -> list:
    """outer(inner(h)) for inner with zero constant term."""
    if inner and inner[0] != 0:
        raise ValueError("inner series must vanish at 0")
    result = [0] * n
    for c in reversed(list(outer[:n])):
        result = s_mul(result, inner, n)
        result[0] += c
    return result


def exp_linear(rate, n: int, at=None, value_at=None) -> list:
    """Taylor coefficients of exp(rate*y) about y0: value_at * rate^k / k!."""
    v = value_at if value_at is not None else mp.exp(rate * at)
    out = [0] * n
    term = v
    for k in range(n):
        out[k] = term
        term = term * rate / (k + 1)
    return out


@dataclass(frozen=True)
class TwoPiIM:
    """Exact marker for the point 2*pi*i*m."""

    m: int

    def value(self) -> mp.mpc:
        return mp.mpc(0, 2 * mp.pi * self.m)


@dataclass(frozen=True)
class LaurentPart:
    """Principal part sum_{j=1..order} coefficients[j-1] * (y - center)^(-j)."""

    center: object
    coefficients: tuple
    order: int

    @property
    def residue(self):
        return self.coefficients[0] if self.order > 0 else mp.mpc(0)


SeriesFactory = Callable[[object, int], list]


def _valuation(coeffs: Sequence, threshold) -> int | None:
    for k, c in enumerate(coeffs):
        if c != 0 and abs(c) > threshold:
            return k
    return None


def _zero_threshold(coeffs: Sequence):
    scale = max([abs(c) for c in coeffs] + [mp.mpf(1)])
    return scale * mp.ldexp(mp.mpf(1), -(3 * mp.mp.prec) // 4)


def laurent_series(num: SeriesFactory, den: SeriesFactory, center, terms: int,
                   den_valuation: int | None = None, num_valuation: int | None = None):
    """Laurent expansion of num/den about ``center``.

    Returns ``(v, coeffs)`` with num/den = sum_k coeffs[k] h^(v+k).
    Valuations are detected from the coefficients unless supplied exactly.
    """
    width = max(terms, 1) + (den_valuation if den_valuation is not None else 4)
    d = den(center, width)
    if den_valuation is None:
        vd = _valuation(d, _zero_threshold(d))
        while vd is None and width < 256:
            width *= 2
            d = den(center, width)
            vd = _valuation(d, _zero_threshold(d))
        if vd is None:
            raise ZeroDivisionError("denominator vanishes to the expansion order")
    else:
        vd = den_valuation
        if width < vd + terms:
            width = vd + terms
            d = den(center, width)
        if d[vd] == 0:
            raise ZeroDivisionError("stated denominator valuation is wrong")
    nwidth = vd + terms + (num_valuation or 0)
    a = num(center, nwidth)
    if num_valuation is None:
        vn = _valuation(a, _zero_threshold(a))
        if vn is None:
            return 0, [0] * terms
    else:
        vn = num_valuation
    if len(d) < vd + terms:
        d = den(center, vd + terms)
    if len(a) < vn + terms:
        a = num(center, vn + terms)
    q = s_div(a[vn:vn + terms], d[vd:vd + terms], terms)
    return vn - vd, q


def laurent_principal(num: SeriesFactory, den: SeriesFactory, center, max_order: int,
                      den_valuation: int | None = None) -> LaurentPart:
    """Principal part of num/den at ``center`` (order capped by ``max_order``)."""
    v, q = laurent_series(num, den, center, max_order + 1, den_valuation=den_valuation)
    order = max(0, -v)
    if order > max_order:
        raise ValueError(f"pole order {order} exceeds max_order {max_order}")
    coeffs = tuple(q[order - j] for j in range(1, order + 1))
    return LaurentPart(center=center, coefficients=coeffs, order=order)
