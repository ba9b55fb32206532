"""Finite root-of-unity sums: tau(K;N), Gauss sums, reciprocity, and the sign-vector lemmas.

Every exponential here is a power of zeta = exp(pi i / (2KP)); exponents are
reduced exactly modulo 4KP before any floating-point work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath as mp

from .numerics.precision import expjpi_rational
from .report import VerificationReport
from .seifert_core import (SeifertLoop, a_coeff, b_const, c_const, g0, sign_product,
                           sign_vectors)


class KRangeError(ValueError):
    pass


def _check_K(K: int):
    if not isinstance(K, int) or K < 2:
        raise KRangeError("K must be ≥ 2")


@dataclass(frozen=True)
class RootOfUnityTerm:
    """weight * zeta^numerator_exponent with zeta = exp(pi i / (2KP))."""

    numerator_exponent: int
    weight: mp.mpc


class _ZetaTable:
    """Powers of exp(pi i / modulus_half) indexed by exponent mod 2*modulus_half."""

    def __init__(self, half_modulus: int):
        self.mod = 2 * half_modulus
        self.half = half_modulus
        self._cache: dict = {}

    def __call__(self, j: int) -> mp.mpc:
        j %= self.mod
        v = self._cache.get(j)
        if v is None:
            v = expjpi_rational(Fraction(j, self.half))
            self._cache[j] = v
        return v


def tau_summands(loop: SeifertLoop, K: int, N: int) -> list:
    """The k-sum of tau as RootOfUnityTerms (ascending k, K not dividing k)."""
    _check_K(K)
    if N < 1:
        raise ValueError("N must be >= 1")
    P, n = loop.P, loop.n
    KP = K * P
    zeta = _ZetaTable(2 * KP)
    mod = 4 * KP
    out = []
    for k in range(2 * KP):
        if k % K == 0:
            continue
        def two_sin(j):
            return zeta(j) - zeta(-j)
        weight = two_sin(2 * P * N * k)
        for p in loop.ps:
            weight *= two_sin(2 * P * k // p)
        weight /= two_sin(2 * P * k) ** (n - 1)
        out.append(RootOfUnityTerm((-k * k) % mod, weight))
    return out


def _tau_ksum(loop: SeifertLoop, K: int, N: int) -> mp.mpc:
    zeta = _ZetaTable(2 * K * loop.P)
    total = mp.mpc(0)
    for term in tau_summands(loop, K, N):
        total += term.weight * zeta(term.numerator_exponent)
    return total


def tau(loop: SeifertLoop, K: int, N: int = 1) -> mp.mpc:
    """tau(K;N) = (B G_0(K)/K) exp(-pi i c(N)/(2K)) * sum over k."""
    _check_K(K)
    c = c_const(loop, N)
    pref = b_const(loop) * g0(K) / K * expjpi_rational(-c / (2 * K))
    return pref * _tau_ksum(loop, K, N)


def z_norm(loop: SeifertLoop, K: int, N: int = 1) -> mp.mpc:
    """Z(K;N) = tau(K;N) / G_0(K)."""
    _check_K(K)
    return tau(loop, K, N) / g0(K)


def b0_closed(loop: SeifertLoop, K: int, N: int = 1) -> mp.mpc:
    """Limit of phi^(1) at t -> 0: exp(pi i/4)/sqrt(2KP) times the tau k-sum."""
    _check_K(K)
    return mp.expjpi(mp.mpf(1) / 4) / mp.sqrt(2 * K * loop.P) * _tau_ksum(loop, K, N)


# ---------------------------------------------------------------------------
# Gauss sums and reciprocity

def gauss_G(K: int, P: int):
    """(sum_{k mod 2KP} exp(-pi i k^2/(2KP)), sqrt(2KP) exp(-pi i/4))."""
    if K < 1 or P < 1:
        raise ValueError("K, P must be >= 1")
    KP = K * P
    zeta = _ZetaTable(2 * KP)
    total = mp.mpc(0)
    for k in range(2 * KP):
        total += zeta(-k * k)
    closed = mp.sqrt(2 * KP) * mp.expjpi(mp.mpf(-1) / 4)
    return total, closed


def gauss_G_shifted(K: int, P: int, L_tilde: int) -> mp.mpc:
    """exp(-pi i L~^2/(2KP)) sum_{k mod 2KP} exp(-pi i k^2/(2KP) + pi i L~ k/(KP))."""
    KP = K * P
    zeta = _ZetaTable(2 * KP)
    total = mp.mpc(0)
    for k in range(2 * KP):
        total += zeta(-k * k + 2 * L_tilde * k)
    return zeta(-L_tilde * L_tilde) * total


def reciprocity(M1: int, M2: int, L) -> tuple:
    """Both sides of the quadratic reciprocity formula for sum exp(pi i (M2/M1) k^2 + 2 pi i L k)."""
    L = Fraction(L)
    if M1 == 0 or M2 == 0:
        raise ValueError("M1 and M2 must be nonzero")
    if (M1 * M2) % 2:
        raise ValueError("M1*M2 must be even")
    if (M1 * L).denominator != 1:
        raise ValueError("M1*L must be an integer")
    lhs = mp.mpc(0)
    for k in range(abs(M1)):
        lhs += expjpi_rational(Fraction(M2 * k * k, M1) + 2 * L * k)
    inner = mp.mpc(0)
    for k in range(abs(M2)):
        inner += expjpi_rational(-Fraction(M1, M2) * (k + L) ** 2)
    sign = 1 if M1 * M2 > 0 else -1
    rhs = mp.sqrt(mp.mpf(abs(M1)) / abs(M2)) * mp.expjpi(mp.mpf(sign) / 4) * inner
    return lhs, rhs


# ---------------------------------------------------------------------------
# Sign-vector sums and the bijection between Gauss-sum exponents

@lru_cache(maxsize=None)
def _eps_power_sum_rec(ps: tuple, s: int) -> Fraction:
    if not ps:
        return Fraction(1) if s == 0 else Fraction(0)
    if s == 0:
        return Fraction(0)
    total = Fraction(0)
    for j, p in enumerate(ps):
        rest = ps[:j] + ps[j + 1:]
        inner = Fraction(0)
        for t in range(s):
            if (s - 1 - t) % 2:
                continue
            inner += math.comb(s - 1, t) * 2 * Fraction(1, p ** (s - 1 - t)) * _eps_power_sum_rec(rest, t)
        total += Fraction(1, p) * inner
    return total


def eps_power_sum(loop: SeifertLoop, s: int) -> Fraction:
    """sum over eps of eps_1...eps_n (sum eps_j/p_j)^s, by peeling off one sign at a time."""
    if s < 0:
        raise ValueError("s must be >= 0")
    return _eps_power_sum_rec(tuple(loop.ps), s)


def _strip_chain(base: int, K: int):
    """G_i = gcd(base, K_{i-1}), K_i = K_{i-1}/G_i until G_i = 1; returns ([G_i], K_d)."""
    gs = []
    cur = K
    g = math.gcd(base, cur)
    while g > 1:
        gs.append(g)
        cur //= g
        g = math.gcd(base, cur)
    return gs, cur


def factor_k(K: int, loop: SeifertLoop, pivot: int = 0) -> tuple:
    """K = K1*K2 with gcd(p_pivot, K1) = gcd(P/p_pivot, K2) = gcd(K1, K2) = 1, via iterated gcd chains."""
    if K < 1:
        raise ValueError("K must be positive")
    p = loop.ps[pivot]
    rest = loop.P // p
    g1, k1d = _strip_chain(p, K)
    g2, k2d = _strip_chain(rest, K)
    f = math.gcd(k1d, k2d)
    if k1d % math.prod(g2) or k2d % math.prod(g1):
        raise ArithmeticError("gcd chains are inconsistent")
    if f != k1d // math.prod(g2) or f != k2d // math.prod(g1):
        raise ArithmeticError("common factor f does not match the chain products")
    K1, K2 = k1d, k2d // f
    if K1 * K2 != K or math.gcd(p, K1) != 1 or math.gcd(rest, K2) != 1 or math.gcd(K1, K2) != 1:
        raise ArithmeticError(f"factor_k postconditions fail for K={K}")
    return K1, K2


def _solve_linear(coef: int, rhs: int, mod: int) -> int:
    """x with coef*x = rhs (mod mod), coef invertible."""
    if mod == 1:
        return 0
    return (rhs * pow(coef, -1, mod)) % mod


def _crt(r1: int, m1: int, r2: int, m2: int) -> int:
    if m1 == 1:
        return r2 % m2
    if m2 == 1:
        return r1 % m1
    return (r1 + m1 * ((r2 - r1) * pow(m1, -1, m2) % m2)) % (m1 * m2)


def single_flip(loop: SeifertLoop, K: int, ell, eps: Sequence[int], j: int, m: int) -> tuple:
    """m~ for flipping eps_j; returns (m~, branch) with branch in {'euclid-1', 'euclid-2', 'crt'}."""
    p = loop.ps[j]
    Q = loop.P // p
    two_ell = int(2 * Fraction(ell))
    shift = two_ell + loop.n - 2
    T = Q * sum(Fraction(e, q) for i, (e, q) in enumerate(zip(eps, loop.ps)) if i != j)
    if T.denominator != 1:
        raise ArithmeticError("Q * sum eps_i/p_i is not an integer")
    T = int(T)
    e = eps[j]
    # X1 = p(m - m~) + e_j = 0  <=>  m~ = m + e_j p^{-1}
    # X2 = Q(m + m~ + shift) + T = 0  <=>  m~ = -m - shift - T Q^{-1}
    if math.gcd(p, K) == 1:
        return (m + _solve_linear(p, e, K)) % K, "euclid-1"
    if math.gcd(Q, K) == 1:
        return (-m - shift - _solve_linear(Q, T, K)) % K, "euclid-2"
    K1, K2 = factor_k(K, loop, pivot=j)
    r1 = (m + _solve_linear(p, e, K1)) % K1
    r2 = (-m - shift - _solve_linear(Q, T, K2)) % K2
    return _crt(r1, K1, r2, K2), "crt"


def _x_value(loop, ell, eps, m):
    return (2 * loop.P * m + a_coeff(loop, ell, eps)) ** 2


def crt_pair(loop: SeifertLoop, K: int, ell, eps: Sequence[int], eps_tilde: Sequence[int], m: int) -> int:
    """The partner m~ in 0..K-1 with (2Pm + a_eps)^2 = (2Pm~ + a_eps~)^2 mod 4KP."""
    if not 0 <= m < K:
        raise ValueError("m must lie in 0..K-1")
    cur = list(eps)
    mt = m
    for j in range(loop.n):
        if cur[j] != eps_tilde[j]:
            mt, _ = single_flip(loop, K, ell, cur, j, mt)
            cur[j] = -cur[j]
    mod = 4 * K * loop.P
    if (_x_value(loop, ell, eps, m) - _x_value(loop, ell, eps_tilde, mt)) % mod:
        raise RuntimeError("internal error: constructed partner violates the congruence")
    return mt


def gauss_exponents(loop: SeifertLoop, K: int, ell, eps) -> list:
    """Sorted exponents (2Pm + a)^2 mod 4KP, m = 0..K-1."""
    mod = 4 * K * loop.P
    return sorted(_x_value(loop, ell, eps, m) % mod for m in range(K))


def vanishing_check(loop: SeifertLoop, K: int, ell, s: int) -> VerificationReport:
    """Check that sum_eps prod(eps) (sum eps/p)^s sum_{m<K} exp(pi i (2Pm+a)^2/(2PK)) vanishes, two ways."""
    if not 0 <= s <= loop.n - 1:
        raise ValueError(f"s must lie in 0..{loop.n - 1}")
    ell = Fraction(ell)
    mod = 4 * K * loop.P
    signs = sign_vectors(loop.n)
    ref = signs[0]
    ref_exps = gauss_exponents(loop, K, ell, ref)
    bijection_ok = True
    multiset_ok = True
    for eps in signs:
        image = [crt_pair(loop, K, ell, ref, eps, m) for m in range(K)]
        if sorted(image) != list(range(K)):
            bijection_ok = False
        if gauss_exponents(loop, K, ell, eps) != ref_exps:
            multiset_ok = False
    eps_sum = eps_power_sum(loop, s)
    exact_zero = bijection_ok and multiset_ok and eps_sum == 0

    zeta = _ZetaTable(2 * K * loop.P)
    total = mp.mpc(0)
    biggest = mp.mpf(0)
    count = 0
    for eps in signs:
        weight = sign_product(eps) * sum(Fraction(e, p) for e, p in zip(eps, loop.ps)) ** s
        w = mp.mpf(weight.numerator) / weight.denominator
        for m in range(K):
            term = w * zeta(_x_value(loop, ell, eps, m) % mod)
            total += term
            biggest = max(biggest, abs(term))
            count += 1
    threshold = mp.ldexp(mp.mpf(1), -mp.mp.prec // 2) * count * max(biggest, mp.mpf(1))
    numeric_zero = abs(total) <= threshold
    return VerificationReport(
        claim="vanishing-sum",
        passed=exact_zero and numeric_zero,
        lhs=total,
        rhs=mp.mpc(0),
        residual=abs(total),
        tolerance=threshold,
        details={"K": K, "ell": ell, "s": s, "exact_zero": exact_zero, "numeric_zero": numeric_zero,
                 "bijection": bijection_ok, "exponent_multisets_equal": multiset_ok,
                 "eps_sum": eps_sum},
    )
