"""Polynomial extrapolation of sampled values to t = 0 (Neville's scheme)."""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Sequence

import mpmath as mp

from .precision import real


class Extrapolation(NamedTuple):
    value: mp.mpc
    spread: mp.mpf


def _neville_at_zero(ts: Sequence, vs: Sequence):
    p = list(vs)
    n = len(ts)
    for j in range(1, n):
        for i in range(n - j):
            p[i] = (ts[i + j] * p[i] - ts[i] * p[i + 1]) / (ts[i + j] - ts[i])
    return p[0]


def extrapolate(samples: Sequence, degree: int = 6) -> Extrapolation:
    """Extrapolate (t, v) samples to t = 0 with a degree-``degree`` interpolant.

    The interpolant uses the ``degree + 1`` samples closest to zero.  The
    spread is |P_degree(0) - P_(degree-1)(0)|, the latter built on the
    ``degree`` smallest samples.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if len(samples) < degree + 1:
        raise ValueError(f"need at least {degree + 1} samples, got {len(samples)}")
    ts = [real(Fraction(t)) if isinstance(t, (int, Fraction)) else mp.mpf(t) for t, _ in samples]
    vs = [mp.mpc(v) for _, v in samples]
    for t in ts:
        if t <= 0:
            raise ValueError("sample points must be positive")
    for a, b in zip(ts, ts[1:]):
        if not b < a:
            raise ValueError("sample points must be strictly decreasing")
    top = _neville_at_zero(ts[-(degree + 1):], vs[-(degree + 1):])
    if degree == 0:
        return Extrapolation(top, mp.mpf(0))
    lower = _neville_at_zero(ts[-degree:], vs[-degree:])
    return Extrapolation(top, abs(top - lower))
