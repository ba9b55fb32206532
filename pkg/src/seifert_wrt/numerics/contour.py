"""Contour integration along piecewise straight paths.

Finite pieces are integrated with a nested tanh-sinh rule whose level is
raised until successive estimates agree to the piece's share of ``tol``,
or with Gauss-Legendre rules of doubling size compared the same way; a
piece that does not settle is bisected.  Rays are cut at a radius taken
from the caller's Gaussian decay certificate, so the discarded tail is
bounded analytically rather than estimated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import mpmath as mp

from .precision import bits_for_tolerance


class QuadratureError(RuntimeError):
    """Raised when the node budget is exhausted before reaching the tolerance."""


@dataclass(frozen=True)
class GaussianDecay:
    """|f(anchor + s*direction)| <= amplitude * exp(-rate*s^2 + drift*s) for s >= start."""

    amplitude: object
    rate: object
    drift: object = 0
    start: object = 0

    def tail(self, radius):
        """Upper bound for the integral of the envelope over [radius, inf)."""
        a, g, b = mp.mpf(self.amplitude), mp.mpf(self.rate), mp.mpf(self.drift)
        r = mp.mpf(radius)
        slope = 2 * g * r - b
        if r < mp.mpf(self.start) or slope <= 0:
            return mp.inf
        return a * mp.exp(-g * r * r + b * r) / slope

    def radius_for(self, tol):
        """Smallest convenient radius whose envelope tail is below tol."""
        g, b = mp.mpf(self.rate), mp.mpf(self.drift)
        if g <= 0:
            raise ValueError("decay certificate needs a positive Gaussian rate")
        r = max(mp.mpf(self.start), b / g + 1, mp.mpf(1))
        while self.tail(r) > tol:
            r *= mp.mpf(1.25)
        return r


@dataclass(frozen=True)
class Segment:
    start: mp.mpc
    end: mp.mpc

    def point(self, s):
        return self.start + (self.end - self.start) * s


@dataclass(frozen=True)
class Ray:
    """Half line anchor + s*direction, s >= 0.

    ``incoming`` rays are traversed from infinity toward the anchor (they
    open a contour); outgoing rays close it.
    """

    anchor: mp.mpc
    direction: mp.mpc
    decay: GaussianDecay
    incoming: bool = False


@dataclass(frozen=True)
class Contour:
    pieces: tuple

    def __post_init__(self):
        pieces = self.pieces
        if not pieces:
            raise ValueError("empty contour")
        for i, p in enumerate(pieces):
            if isinstance(p, Ray):
                if p.incoming and i != 0:
                    raise ValueError("an incoming ray may only open the contour")
                if not p.incoming and i != len(pieces) - 1:
                    raise ValueError("an outgoing ray may only close the contour")
        for a, b in zip(pieces, pieces[1:]):
            end = a.anchor if isinstance(a, Ray) else a.end
            start = b.anchor if isinstance(b, Ray) else b.start
            if abs(mp.mpc(end) - mp.mpc(start)) > mp.ldexp(mp.mpf(1), -mp.mp.prec // 2) * (1 + abs(mp.mpc(end))):
                raise ValueError("consecutive contour pieces must share endpoints")


def line(anchor, direction, decay_in: GaussianDecay, decay_out: GaussianDecay) -> Contour:
    """The full line anchor + s*direction, s in R, oriented by increasing s."""
    d = mp.mpc(direction)
    d = d / abs(d)
    return Contour((Ray(mp.mpc(anchor), -d, decay_in, incoming=True),
                    Ray(mp.mpc(anchor), d, decay_out, incoming=False)))


# ---------------------------------------------------------------------------
# tanh-sinh node tables

_NODE_CACHE: dict = {}
_MAX_LEVEL = 8


def _level_nodes(level: int, prec: int):
    """Nodes added at ``level`` for step h = 2^-level on [-1, 1].

    Each entry is (t, gap, weight) with gap = 1 - |x| kept separately so
    points near the endpoints are formed without cancellation.
    """
    key = (level, prec)
    hit = _NODE_CACHE.get(key)
    if hit is not None:
        return hit
    with mp.workprec(prec + 20):
        h = mp.ldexp(mp.mpf(1), -level)
        eps = mp.ldexp(mp.mpf(1), -(prec + 10))
        half_pi = mp.pi / 2
        out = []
        j = 0 if level == 0 else 1
        step = 1 if level == 0 else 2
        while True:
            t = j * h
            u = half_pi * mp.sinh(t)
            e2u = mp.exp(2 * u)
            gap = 2 / (1 + e2u)
            ch = mp.cosh(u)
            w = half_pi * mp.cosh(t) / (ch * ch)
            if w < eps and j > 0:
                break
            out.append((t, +gap, +w))
            j += step
    _NODE_CACHE[key] = tuple(out)
    return _NODE_CACHE[key]


def _ts_piece(f, a, b, tol, prec, min_level=3):
    """tanh-sinh estimate on the straight piece [a, b]; returns (value, converged)."""
    half = (b - a) / 2
    total = mp.mpc(0)
    prev = None
    for level in range(0, _MAX_LEVEL + 1):
        h = mp.ldexp(mp.mpf(1), -level)
        acc = mp.mpc(0)
        for t, gap, w in _level_nodes(level, prec):
            if t == 0:
                acc += w * f(a + half)
            else:
                off = half * gap
                acc += w * (f(b - off) + f(a + off))
        total += acc
        est = total * h * half
        if prev is not None and level >= min_level and abs(est - prev) <= tol:
            return est, True
        prev = est
    return prev, False


_GL = mp.calculus.quadrature.GaussLegendre(mp.mp)
_GL_CACHE: dict = {}


def _gl_nodes(degree: int, prec: int):
    """Gauss-Legendre nodes and weights on [-1, 1], 3 * 2^(degree-1) points."""
    key = (degree, prec)
    if key not in _GL_CACHE:
        with mp.workprec(prec + 20):
            _GL_CACHE[key] = tuple(_GL.calc_nodes(degree, prec + 20))
    return _GL_CACHE[key]


def _gl_piece(f, a, b, tol, prec, degrees=(3, 4, 5)):
    """Gauss-Legendre estimates of increasing degree on [a, b]; returns (value, converged)."""
    half = (b - a) / 2
    mid = (a + b) / 2
    prev = None
    for degree in degrees:
        est = half * mp.fsum(w * f(mid + half * x) for x, w in _gl_nodes(degree, prec))
        if prev is not None and abs(est - prev) <= tol:
            return est, True
        prev = est
    return prev, False


_RULES = {"tanh-sinh": _ts_piece, "gauss-legendre": _gl_piece}


def _integrate_piece(f, a, b, tol, prec, depth=0, max_depth=12, rule="tanh-sinh"):
    val, ok = _RULES[rule](f, a, b, tol, prec)
    if ok:
        return val
    if depth >= max_depth:
        raise QuadratureError(f"{rule} failed to reach tol={mp.nstr(tol, 3)} on [{mp.nstr(a, 5)}, {mp.nstr(b, 5)}]")
    mid = (a + b) / 2
    return (_integrate_piece(f, a, mid, tol / 2, prec, depth + 1, max_depth, rule)
            + _integrate_piece(f, mid, b, tol / 2, prec, depth + 1, max_depth, rule))


def _partition(a, b, spacing, h_min, h_max):
    """Break points along [a, b] following the local length scale ``spacing``."""
    length = abs(b - a)
    if length == 0:
        return [a, b]
    unit = (b - a) / length
    pts = [a]
    s = mp.mpf(0)
    while True:
        local = spacing(a + unit * s) if spacing is not None else h_max
        step = min(max(mp.mpf(local), h_min), h_max)
        if s + step >= length - h_min / 4:
            pts.append(b)
            return pts
        s += step
        pts.append(a + unit * s)


def contour_integrate(f: Callable, contour: Contour, tol, spacing: Optional[Callable] = None,
                      h_min=None, h_max=2, precision_bits: Optional[int] = None, rule: str = "tanh-sinh"):
    """Integral of f along ``contour`` with absolute error target ``tol``.

    ``spacing(y)`` may return a local length scale (for instance the distance
    to the nearest singularity); pieces are cut no longer than that.  The
    integrand is called with mpc arguments at the quadrature precision.
    """
    tol = mp.mpf(tol)
    prec = precision_bits or bits_for_tolerance(tol)
    with mp.workprec(prec):
        h_max = mp.mpf(h_max)
        h_min = mp.mpf(h_min) if h_min is not None else h_max / 2000
        spans = []
        for piece in contour.pieces:
            if isinstance(piece, Segment):
                spans.append((mp.mpc(piece.start), mp.mpc(piece.end)))
            else:
                radius = piece.decay.radius_for(tol / (8 * len(contour.pieces)))
                far = piece.anchor + piece.direction * radius
                if piece.incoming:
                    spans.append((mp.mpc(far), mp.mpc(piece.anchor)))
                else:
                    spans.append((mp.mpc(piece.anchor), mp.mpc(far)))
        grid = []
        for a, b in spans:
            pts = _partition(a, b, spacing, h_min, h_max)
            grid.extend(zip(pts, pts[1:]))
        total_len = sum(abs(b - a) for a, b in grid) or mp.mpf(1)
        budget = tol / 2
        result = mp.mpc(0)
        for a, b in grid:
            share = budget * abs(b - a) / total_len
            result += _integrate_piece(f, a, b, share, prec, rule=rule)
        return +result
