"""The colored WRT q-series Phi(q;N), its evaluation inside the disk, and radial limits.

Phi(q;N) = (-1)^n / (2(q^(1/2) - q^(-1/2))) * q^(-c(N)/4)
           * sum_{ell, eps} eps_1...eps_n sum_{m>=0} binom(m+n-3, n-3) q^(x^2/(4P)),
with x = 2Pm + a_{ell,eps}.  Every exponent lies on (1/4P)Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .exact_sums import _check_K, _ZetaTable, b0_closed, gauss_G, tau
from .numerics.extrapolate import extrapolate
from .numerics.precision import real
from .numerics.qseries import QSeries, qs_eval
from .report import VerificationReport
from .seifert_core import (SeifertLoop, a_coeff, binom_weight, c_const, half_integer_range,
                           sign_product, sign_vectors)


def _blocks(loop: SeifertLoop, N: int):
    """(sign, a) for every (ell, eps) pair, in a fixed order."""
    if N < 1:
        raise ValueError("N must be >= 1")
    out = []
    for two_ell in half_integer_range(N):
        ell = Fraction(two_ell, 2)
        for eps in sign_vectors(loop.n):
            out.append((sign_product(eps), a_coeff(loop, ell, eps)))
    return out


def _m_range_finite(n: int) -> bool:
    return n <= 2


def _ratio_bound(m: int, n: int, step) -> mp.mpf:
    """Upper bound for term(m+1)/term(m) and all later ratios, given the exponential step decrement."""
    binom_ratio = Fraction(m + n - 2, m + 1) if n >= 3 else Fraction(0)
    return real(binom_ratio) * mp.exp(-step)


def _block_tail(a: int, m_start: int, P: int, n: int, log_mag, step, max_terms: int = 100000):
    """Certified bound on sum_{m >= m_start} binom(m) exp(log_mag(x)), x = 2Pm + a.

    ``step(x)`` must lower-bound log_mag(x) - log_mag(x + 2P) and be non-decreasing in x.
    """
    if _m_range_finite(n):
        return mp.mpf(0) if m_start > 0 else mp.exp(log_mag(a))
    total = mp.mpf(0)
    m = m_start
    for _ in range(max_terms):
        x = 2 * P * m + a
        w = binom_weight(m, n)
        if x > 0:
            rho = _ratio_bound(m, n, step(x))
            if rho < mp.mpf(1) / 2:
                return total + w * mp.exp(log_mag(x)) / (1 - rho)
        total += w * mp.exp(log_mag(x))
        m += 1
    return mp.inf


# ---------------------------------------------------------------------------
# Phi as an exact q-series

@dataclass(frozen=True)
class PhiTailCertificate:
    """Tail of the truncated Phi series, valid for every |q| < 1.

    Generated inner terms reach the omitted region only through the geometric
    factor 1/(1-q); inner terms never generated are bounded blockwise.
    """

    P: int
    n: int
    cutoff: Fraction
    shift: Fraction
    generated_weight: int
    block_starts: tuple

    def tail_bound(self, log_q) -> mp.mpf:
        lam = -mp.re(mp.mpc(log_q))
        if lam <= 0:
            raise ValueError("tail bound needs |q| < 1")
        r = mp.exp(-lam)
        P = self.P
        shift = real(self.shift)

        def log_mag(x):
            return -lam * (mp.mpf(x) ** 2 / (4 * P) + shift)

        def step(x):
            return lam * (x + P)

        rest = mp.mpf(0)
        for a, m_start in self.block_starts:
            rest += _block_tail(a, m_start, P, self.n, log_mag, step)
        cut = real(self.cutoff)
        return (self.generated_weight * r ** cut + rest) / (2 * (1 - r))


@dataclass(frozen=True)
class PhiSeries:
    loop: SeifertLoop
    N: int
    series: QSeries

    @property
    def cutoff(self):
        return self.series.cutoff

    def to_csv(self) -> str:
        return series_to_csv(self.series)


def phi_prefactor_shift(loop: SeifertLoop, N: int) -> Fraction:
    """Exponent 1/2 - c(N)/4 carried by the prefactor after expanding 1/(1-q)."""
    return Fraction(1, 2) - c_const(loop, N) / 4


def phi_series(loop: SeifertLoop, N: int, cutoff) -> PhiSeries:
    """All terms of Phi(q;N) with exponent <= cutoff, exact, on the lattice (1/4P)Z."""
    cutoff = Fraction(cutoff)
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    P, n = loop.P, loop.n
    D = 4 * P
    shift = phi_prefactor_shift(loop, N)
    shift_lat = shift * D
    if shift_lat.denominator != 1:
        raise ArithmeticError("prefactor exponent is off the (1/4P) lattice")
    shift_lat = int(shift_lat)
    cut_lat = math.floor(cutoff * D)
    overall = Fraction((-1) ** n, -2)

    inner: dict = {}
    generated_weight = 0
    starts = []
    for sign, a in _blocks(loop, N):
        m = 0
        first_skipped = None
        while True:
            if _m_range_finite(n) and m > 0:
                break
            x = 2 * P * m + a
            e = x * x + shift_lat
            if e > cut_lat:
                if first_skipped is None:
                    first_skipped = m
                if x >= 0 or _m_range_finite(n):
                    break
                m += 1
                continue
            w = binom_weight(m, n)
            inner[e] = inner.get(e, 0) + sign * w
            generated_weight += w
            m += 1
        starts.append((a, m if first_skipped is None else min(m, first_skipped)))

    by_class: dict = {}
    for e, v in inner.items():
        if v:
            by_class.setdefault(e % D, []).append((e, v))
    terms = {}
    for r, items in by_class.items():
        items.sort()
        running = 0
        pos = 0
        e = items[0][0]
        while e <= cut_lat:
            while pos < len(items) and items[pos][0] == e:
                running += items[pos][1]
                pos += 1
            if running:
                terms[e] = overall * running
            elif pos == len(items):
                break
            e += D
    cert = PhiTailCertificate(P=P, n=n, cutoff=cutoff, shift=shift,
                              generated_weight=generated_weight, block_starts=tuple(starts))
    return PhiSeries(loop, N, QSeries(D, terms, cutoff, cert))


def series_to_csv(s: QSeries) -> str:
    lines = ["exponent_numerator,exponent_denominator,coeff_numerator,coeff_denominator"]
    for exp_, c in s.items():
        lines.append(f"{exp_.numerator},{exp_.denominator},{c.numerator},{c.denominator}")
    return "\n".join(lines) + "\n"


def torus_knot_jones_series(p1: int, p2: int, N: int, cutoff) -> QSeries:
    """q-integer [N] times the torus-knot colored Jones sum, expanded on (1/(4 p1 p2))Z.

    [N] J = q^(P(1-N^2)/4) / (q^(1/2) - q^(-1/2)) * sum_ell (q^(P l^2 - (p1+p2) l + 1/2) - q^(P l^2 - (p1-p2) l - 1/2)).
    """
    P = p1 * p2
    D = 4 * P
    cutoff = Fraction(cutoff)
    base = Fraction(P * (1 - N * N), 4)
    numerator: dict = {}
    for two_ell in half_integer_range(N):
        l = Fraction(two_ell, 2)
        for exp_, sgn in ((P * l * l - (p1 + p2) * l + Fraction(1, 2), 1),
                          (P * l * l - (p1 - p2) * l - Fraction(1, 2), -1)):
            key = (base + exp_) * D
            numerator[int(key)] = numerator.get(int(key), 0) + sgn
    # 1/(q^(1/2) - q^(-1/2)) = -q^(1/2) sum_k q^k
    cut_lat = math.floor(cutoff * D)
    terms: dict = {}
    for e0, v in numerator.items():
        if not v:
            continue
        e = e0 + D // 2
        while e <= cut_lat:
            terms[e] = terms.get(e, 0) - v
            e += D
    return QSeries(D, terms, cutoff)


# ---------------------------------------------------------------------------
# Evaluation inside the disk

def _phi_prefactor(loop: SeifertLoop, N: int, log_q) -> mp.mpc:
    """(-1)^n / (2 (q^(1/2) - q^(-1/2))) q^(-c/4), branch fixed by log_q."""
    c = real(c_const(loop, N))
    half = mp.exp(log_q / 2)
    return (-1) ** loop.n / (2 * (half - 1 / half)) * mp.exp(-c * log_q / 4)


def _blocks_for_ells(loop: SeifertLoop, ells):
    out = []
    for ell in ells:
        for eps in sign_vectors(loop.n):
            out.append((sign_product(eps), a_coeff(loop, Fraction(ell), eps)))
    return out


def theta_block_sum(loop: SeifertLoop, ells, log_q, tol=None, absolute: bool = False):
    """sum over ell in ``ells``, eps, m of sign binom q^((2Pm + a_{ell,eps})^2/4P); returns (value, bound).

    With ``absolute`` the moduli of the terms are summed instead (a cancellation gauge).
    """
    log_q = mp.mpc(log_q)
    if mp.re(log_q) >= 0:
        raise ValueError("evaluation requires |q| < 1 (Re log_q < 0)")
    if tol is None:
        tol = mp.ldexp(mp.mpf(1), -mp.mp.prec // 2)
    return _inner_sum(loop, None, log_q, tol=tol, blocks=_blocks_for_ells(loop, ells), absolute=absolute)


def _inner_sum(loop: SeifertLoop, N, log_q, *, x_limit=None, tol=None, blocks=None, absolute=False):
    """sum_{ell,eps,m} sign binom q^(x^2/4P) with a certified omitted-tail bound."""
    P, n = loop.P, loop.n
    lam = -mp.re(log_q)
    if blocks is None:
        blocks = _blocks(loop, N)
    per_block = None if tol is None else mp.mpf(tol) / len(blocks)

    def log_mag(x):
        return -lam * mp.mpf(x) ** 2 / (4 * P)

    def step(x):
        return lam * (x + P)

    scale = log_q / (4 * P)
    total = mp.mpc(0)
    bound = mp.mpf(0)
    for sign, a in blocks:
        m = 0
        while True:
            if _m_range_finite(n) and m > 0:
                break
            x = 2 * P * m + a
            w = binom_weight(m, n)
            if x > 0 and not _m_range_finite(n):
                rho = _ratio_bound(m, n, step(x))
                if x_limit is not None and x * x > x_limit:
                    bound += w * mp.exp(log_mag(x)) / (1 - rho) if rho < 1 else _block_tail(
                        a, m, P, n, log_mag, step)
                    break
                if per_block is not None and rho < 1:
                    tail = w * mp.exp(log_mag(x)) / (1 - rho)
                    if tail < per_block:
                        bound += tail
                        break
            if absolute:
                total += w * mp.exp(log_mag(x))
            else:
                total += sign * w * mp.exp(x * x * scale)
            m += 1
    return total, bound


def phi_eval(loop: SeifertLoop, N: int, log_q, cutoff=None, tol=None, method: str = "factored"):
    """Phi(q;N) at q = exp(log_q), |q| < 1; returns (value, tail_bound).

    ``factored`` keeps the prefactor in closed form and sums the inner theta-like
    series to ``cutoff`` (an exponent) or until the certified tail is below ``tol``.
    ``series`` builds the exact truncated q-series and evaluates it term by term.
    """
    log_q = mp.mpc(log_q)
    if mp.re(log_q) >= 0:
        raise ValueError("evaluation requires |q| < 1 (Re log_q < 0)")
    if method == "series":
        if cutoff is None:
            raise ValueError("series evaluation needs a cutoff")
        ps = phi_series(loop, N, cutoff)
        return qs_eval(ps.series, log_q)
    if method != "factored":
        raise ValueError(f"unknown method {method!r}")
    if cutoff is None and tol is None:
        tol = mp.ldexp(mp.mpf(1), -mp.mp.prec // 2)
    pref = _phi_prefactor(loop, N, log_q)
    x_limit = None
    if cutoff is not None:
        x_limit = (Fraction(cutoff) - phi_prefactor_shift(loop, N)) * 4 * loop.P
    inner_tol = None if tol is None else mp.mpf(tol) / max(abs(pref), mp.mpf(1))
    value, bound = _inner_sum(loop, N, log_q, x_limit=x_limit, tol=inner_tol)
    return pref * value, abs(pref) * bound


# ---------------------------------------------------------------------------
# phi^(1), phi^(2) and the A/B split

def phi_k(loop: SeifertLoop, N: int, K: int, t, k: int, with_bound: bool = False, tol=None):
    """(-1)^n sum sign binom exp(pi i x^2/(2KP)) exp(-x^k t), truncated with a certified tail."""
    _check_K(K)
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    t = mp.mpc(t)
    if mp.re(t) <= 0:
        raise ValueError("phi_k needs Re t > 0")
    P, n = loop.P, loop.n
    if tol is None:
        tol = mp.ldexp(mp.mpf(1), -mp.mp.prec // 2)
    s = mp.re(t)
    zeta = _ZetaTable(2 * K * P)
    mod = 4 * K * P
    blocks = _blocks(loop, N)
    per_block = mp.mpf(tol) / len(blocks)
    if k == 1:
        def log_mag(x):
            return -s * x

        def step(x):
            return 2 * P * s
    else:
        def log_mag(x):
            return -s * mp.mpf(x) ** 2

        def step(x):
            return s * (4 * P * x + 4 * P * P)
    total = mp.mpc(0)
    bound = mp.mpf(0)
    for sign, a in blocks:
        m = 0
        while True:
            if _m_range_finite(n) and m > 0:
                break
            x = 2 * P * m + a
            w = binom_weight(m, n)
            if x > 0 and not _m_range_finite(n):
                rho = _ratio_bound(m, n, step(x))
                if rho < 1:
                    tail = w * mp.exp(log_mag(x)) / (1 - rho)
                    if tail < per_block:
                        bound += tail
                        break
            total += sign * w * zeta((x * x) % mod) * mp.exp(-(x ** k) * t)
            m += 1
    value = (-1) ** n * total
    return (value, bound) if with_bound else value


def phi_AB(loop: SeifertLoop, N: int, K: int, t):
    """(phi_A, phi_B): the k-sum of phi^(1) split by whether K divides k."""
    _check_K(K)
    t = mp.mpf(t) if not isinstance(t, mp.mpc) else t
    if isinstance(t, mp.mpc):
        if mp.im(t) != 0:
            raise ValueError("phi_AB is defined here for real t > 0 only")
        t = mp.re(t)
    if t <= 0:
        raise ValueError("phi_AB needs t > 0")
    P, n = loop.P, loop.n
    KP = K * P
    power = max(n - 2, 0)
    G, _ = gauss_G(K, P)
    blocks = _blocks(loop, N)
    zeta = _ZetaTable(2 * KP)
    damp = {a: mp.exp(-a * t) for _, a in blocks}
    decay = mp.exp(-2 * P * t)

    phi_A = mp.mpc(0)
    for k in range(2 * KP):
        if k % K == 0:
            continue
        inner = mp.mpc(0)
        for sign, a in blocks:
            inner += sign * zeta(2 * k * a) * damp[a]
        denom = (1 - zeta(4 * P * k) * decay) ** power
        phi_A += zeta(-k * k) * inner / denom
    phi_A *= (-1) ** n / G

    zeta_m = _ZetaTable(2 * P)
    phi_B = mp.mpc(0)
    for m in range(2 * P):
        inner = mp.mpc(0)
        for sign, a in blocks:
            inner += sign * damp[a] * zeta_m(2 * m * a)
        phi_B += zeta_m(-K * m * m) * inner
    phi_B *= (-1) ** n / G / (1 - decay) ** power
    return phi_A, phi_B


# ---------------------------------------------------------------------------
# Radial limits

def auto_t0(loop: SeifertLoop, K: int) -> mp.mpf:
    """Largest grid start for which the t-expansion coefficients are still shrinking.

    The coefficients grow roughly like r! (K^2 P / pi^2)^r, so the samples sit in
    the asymptotic regime only for t well below pi^2/(K^2 P).
    """
    return mp.pi ** 2 / (40 * K * K * loop.P)


def radial_limit(loop: SeifertLoop, N: int, K: int, t0=None, levels: int = 8, degree: int = 6,
                 tol=1e-6) -> VerificationReport:
    """Extrapolate Phi(e^(2 pi i/K) e^(-t); N) to t = 0 and compare with tau(K;N)."""
    _check_K(K)
    if levels < degree + 1:
        raise ValueError("levels must be at least degree + 1")
    t0_value = auto_t0(loop, K) if t0 is None else (Fraction(t0) if not isinstance(t0, (mp.mpf, float)) else mp.mpf(t0))
    target = tau(loop, K, N)
    samples = []
    eval_tol = mp.ldexp(mp.mpf(1), -mp.mp.prec // 2)
    two_pi_i_over_K = 2 * mp.pi * mp.mpc(0, 1) / K
    worst_tail = mp.mpf(0)
    for j in range(levels):
        if isinstance(t0_value, Fraction):
            t = t0_value / 2 ** j
            t_hp = real(t)
        else:
            t = t0_value / 2 ** j
            t_hp = t
        value, tail = phi_eval(loop, N, two_pi_i_over_K - t_hp, tol=eval_tol)
        worst_tail = max(worst_tail, tail)
        samples.append((t, value))
    ex = extrapolate(samples, degree)
    residual = abs(ex.value - target)
    tol_hp = mp.mpf(tol)
    return VerificationReport(
        claim="radial-limit",
        passed=bool(residual < tol_hp),
        lhs=ex.value,
        rhs=target,
        residual=residual,
        tolerance=tol_hp,
        details={"K": K, "N": N, "loop": str(loop), "t0": t0_value, "t0_auto": t0 is None,
                 "levels": levels, "degree": degree, "tau": target, "limit": ex.value,
                 "spread": ex.spread, "max_tail_bound": worst_tail},
    )


def phi_B_limit(loop: SeifertLoop, N: int, K: int, t0=Fraction(1, 8), levels: int = 8, degree: int = 6):
    """Extrapolated t -> 0 value of phi_B (expected to vanish) and the spread."""
    samples = []
    for j in range(levels):
        t = Fraction(t0) / 2 ** j
        samples.append((t, phi_AB(loop, N, K, real(t))[1]))
    return extrapolate(samples, degree)


def phi_A_limit_closed(loop: SeifertLoop, N: int, K: int) -> mp.mpc:
    return b0_closed(loop, K, N)


__all__ = [
    "PhiSeries", "PhiTailCertificate", "phi_series", "phi_eval", "phi_k", "phi_AB", "radial_limit",
    "auto_t0", "phi_B_limit", "theta_block_sum", "torus_knot_jones_series", "series_to_csv", "phi_prefactor_shift",
]
