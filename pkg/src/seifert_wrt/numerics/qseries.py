"""Exact q-series on a rational exponent lattice.

A term ``e -> c`` stands for ``c * q**(e / D)``.  ``cutoff`` is an exponent
(not a lattice index): every term with exponent <= cutoff is present and
exact.  Fully known series carry ``cutoff = math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Protocol

import mpmath as mp
import numpy as np


class LatticeMismatch(ValueError):
    pass


class MissingCertificate(ValueError):
    pass


class TailCertificate(Protocol):
    def tail_bound(self, log_q) -> mp.mpf:
        ...


def _as_cutoff(x):
    if x is None or x == math.inf:
        return math.inf
    return Fraction(x)


@dataclass(frozen=True)
class QSeries:
    lattice_denominator: int
    terms: Mapping[int, Fraction]
    cutoff: object = math.inf
    certificate: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        D = int(self.lattice_denominator)
        if D <= 0:
            raise ValueError("lattice denominator must be positive")
        cut = _as_cutoff(self.cutoff)
        clean = {}
        cut_lat = None if cut == math.inf else math.floor(cut * D)
        for e, c in self.terms.items():
            if not isinstance(c, Fraction):
                c = Fraction(c)
            if c == 0:
                continue
            if cut_lat is not None and e > cut_lat:
                continue
            clean[int(e)] = c
        object.__setattr__(self, "lattice_denominator", D)
        object.__setattr__(self, "cutoff", cut)
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, D: int, cutoff=math.inf):
        return cls(D, {}, cutoff)

    @classmethod
    def monomial(cls, D: int, exponent, coeff=1):
        e = Fraction(exponent) * D
        if e.denominator != 1:
            raise LatticeMismatch(f"exponent {exponent} is not on the lattice (1/{D})Z")
        return cls(D, {int(e): Fraction(coeff)}, math.inf)

    # -- views ---------------------------------------------------------
    def exponent(self, e: int) -> Fraction:
        return Fraction(e, self.lattice_denominator)

    def items(self):
        """(exponent, coefficient) pairs in increasing exponent order."""
        D = self.lattice_denominator
        return [(Fraction(e, D), c) for e, c in self.terms.items()]

    def min_exponent(self):
        if not self.terms:
            return None
        return Fraction(next(iter(self.terms)), self.lattice_denominator)

    def lowest_possible(self):
        """Lowest exponent that may carry a nonzero coefficient (stored or beyond the cutoff)."""
        v = self.min_exponent()
        if v is None:
            return self.cutoff
        if self.cutoff == math.inf:
            return v
        return min(v, self.cutoff)

    def truncate(self, cutoff) -> "QSeries":
        cut = _as_cutoff(cutoff)
        if self.cutoff != math.inf and cut != math.inf and cut > self.cutoff:
            raise ValueError("cannot raise the cutoff of a truncated series")
        if cut == math.inf and self.cutoff != math.inf:
            raise ValueError("cannot raise the cutoff of a truncated series")
        return QSeries(self.lattice_denominator, self.terms, cut, self.certificate)

    def scale(self, c) -> "QSeries":
        c = Fraction(c)
        return QSeries(self.lattice_denominator, {e: v * c for e, v in self.terms.items()}, self.cutoff)

    def shift(self, exponent) -> "QSeries":
        """Multiply by q**exponent (exponent on the lattice)."""
        D = self.lattice_denominator
        s = Fraction(exponent) * D
        if s.denominator != 1:
            raise LatticeMismatch(f"shift {exponent} is not on the lattice (1/{D})Z")
        s = int(s)
        cut = self.cutoff if self.cutoff == math.inf else self.cutoff + Fraction(exponent)
        return QSeries(D, {e + s: v for e, v in self.terms.items()}, cut)

    def __add__(self, other):
        return qs_combine(self, other, "add")

    def __sub__(self, other):
        return qs_combine(self, other.scale(-1), "add")

    def __mul__(self, other):
        return qs_combine(self, other, "mul")

    def __neg__(self):
        return self.scale(-1)

    def is_zero(self) -> bool:
        return not self.terms


def _cutoff_add(x, y):
    if x == math.inf or y == math.inf:
        return math.inf
    return x + y


def _to_integer_classes(s: QSeries, limit: Optional[int]):
    """Split terms by residue mod D into dense integer arrays (common denominator scaling)."""
    D = s.lattice_denominator
    den = 1
    for c in s.terms.values():
        den = den * c.denominator // math.gcd(den, c.denominator)
    classes: dict = {}
    for e, c in s.terms.items():
        if limit is not None and e > limit:
            break
        r, k = e % D, e // D
        classes.setdefault(r, {})[k] = c.numerator * (den // c.denominator)
    packed = {}
    for r, kv in classes.items():
        lo, hi = min(kv), max(kv)
        arr = [0] * (hi - lo + 1)
        for k, v in kv.items():
            arr[k - lo] = v
        packed[r] = (lo, arr)
    return packed, den


def _convolve(a: list, b: list) -> list:
    ma = max(abs(x) for x in a)
    mb = max(abs(x) for x in b)
    if ma * mb * min(len(a), len(b)) < (1 << 62):
        return np.convolve(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)).tolist()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _multiply(a: QSeries, b: QSeries, cutoff) -> dict:
    D = a.lattice_denominator
    if cutoff == math.inf:
        lim_a = lim_b = None
        cut_lat = None
    else:
        cut_lat = math.floor(cutoff * D)
        vb = b.min_exponent()
        va = a.min_exponent()
        lim_a = None if vb is None else math.floor((cutoff - vb) * D)
        lim_b = None if va is None else math.floor((cutoff - va) * D)
    ca, den_a = _to_integer_classes(a, lim_a)
    cb, den_b = _to_integer_classes(b, lim_b)
    acc: dict = {}
    for ra, (lo_a, arr_a) in ca.items():
        for rb, (lo_b, arr_b) in cb.items():
            conv = _convolve(arr_a, arr_b)
            base = ra + rb + D * (lo_a + lo_b)
            for i, v in enumerate(conv):
                if v:
                    e = base + D * i
                    if cut_lat is not None and e > cut_lat:
                        break
                    acc[e] = acc.get(e, 0) + v
    den = den_a * den_b
    return {e: Fraction(v, den) for e, v in acc.items() if v}


def qs_combine(a: QSeries, b: QSeries, mode: str) -> QSeries:
    """Sum or product of two series on the same lattice, with exact cutoff bookkeeping."""
    if a.lattice_denominator != b.lattice_denominator:
        raise LatticeMismatch(f"lattice mismatch: 1/{a.lattice_denominator} vs 1/{b.lattice_denominator}")
    D = a.lattice_denominator
    if mode == "add":
        cut = min(a.cutoff, b.cutoff)
        terms = dict(a.terms)
        for e, c in b.terms.items():
            terms[e] = terms.get(e, 0) + c
        return QSeries(D, terms, cut)
    if mode == "mul":
        if (not a.terms and a.cutoff == math.inf) or (not b.terms and b.cutoff == math.inf):
            return QSeries(D, {}, math.inf)
        cut = min(_cutoff_add(a.cutoff, b.lowest_possible()), _cutoff_add(b.cutoff, a.lowest_possible()))
        return QSeries(D, _multiply(a, b, cut), cut)
    raise ValueError(f"unknown mode {mode!r}")


def rescale(s: QSeries, D_new: int) -> QSeries:
    """Re-express a series on the finer lattice (1/D_new)Z."""
    if D_new % s.lattice_denominator:
        raise LatticeMismatch("new lattice must refine the old one")
    f = D_new // s.lattice_denominator
    return QSeries(D_new, {e * f: c for e, c in s.terms.items()}, s.cutoff, s.certificate)


@dataclass(frozen=True)
class EnvelopeCertificate:
    """Coefficients beyond the cutoff obey |c_e| <= amplitude * (1 + e)^degree."""

    amplitude: object
    degree: int
    cutoff: object
    lattice_denominator: int

    def tail_bound(self, log_q):
        lam = -mp.re(mp.mpc(log_q))
        D = self.lattice_denominator
        u = Fraction(math.floor(Fraction(self.cutoff) * D) + 1, D)
        u_hp = mp.mpf(u.numerator) / u.denominator
        if 1 + u_hp <= 0:
            raise ValueError("envelope certificate needs cutoff > -1")
        excess = lam - mp.mpf(self.degree) / (1 + u_hp)
        if excess <= 0:
            raise ValueError("envelope not decreasing beyond the cutoff at this |q|")
        first = mp.mpf(self.amplitude) * (1 + u_hp) ** self.degree * mp.exp(-lam * u_hp)
        return first * (1 + D / excess)


def qs_eval(s: QSeries, log_q, certificate=None, want_bound: bool = True):
    """Evaluate sum c_e exp((e/D) log_q); returns (value, tail_bound).

    The branch of every fractional power is fixed by ``log_q`` itself.
    """
    log_q = mp.mpc(log_q)
    if mp.re(log_q) >= 0:
        raise ValueError("evaluation requires |q| < 1 (Re log_q < 0)")
    D = s.lattice_denominator
    step = log_q / D
    value = mp.mpc(0)
    for e, c in s.terms.items():
        value += (mp.mpf(c.numerator) / c.denominator) * mp.exp(e * step)
    bound = mp.mpf(0)
    if want_bound and s.cutoff != math.inf:
        cert = certificate if certificate is not None else s.certificate
        if cert is None:
            raise MissingCertificate("a tail bound was requested but no tail certificate was supplied")
        bound = mp.mpf(cert.tail_bound(log_q))
    return value, bound
