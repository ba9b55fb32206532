"""Brute-force reference computations written straight from the definitions.

Nothing here imports the package's numerical code; only plain mpmath,
fractions and itertools.
"""

from fractions import Fraction
from itertools import product
from math import comb, gcd, prod

import mpmath as mp


def sawtooth(x: Fraction) -> Fraction:
    if x.denominator == 1:
        return Fraction(0)
    return x - (x.numerator // x.denominator) - Fraction(1, 2)


def dedekind_sawtooth(q: int, p: int) -> Fraction:
    """s(q, p) = sum_k ((k/p)) ((kq/p))."""
    return sum((sawtooth(Fraction(k, p)) * sawtooth(Fraction(k * q, p)) for k in range(1, p)), Fraction(0))


def theta0_oracle(pairs) -> Fraction:
    P = prod(p for p, _ in pairs)
    return 3 - Fraction(1, P) + 12 * sum(dedekind_sawtooth(q, p) for p, q in pairs)


def tau_direct(pairs, K: int, N: int) -> mp.mpc:
    """The displayed finite sum for tau(K;N), term by term with mp.exp."""
    ps = [p for p, _ in pairs]
    n = len(ps)
    P = prod(ps)
    th = theta0_oracle(pairs)
    c = th + (N * N - 1) * P
    B = -mp.exp(3j * mp.pi / 4) / (4 * mp.sqrt(P))
    G0 = mp.sqrt(mp.mpf(K) / 2) / mp.sin(mp.pi / K)
    total = mp.mpc(0)
    for k in range(2 * P * K):
        if k % K == 0:
            continue
        x = mp.pi * 1j * k / K
        s = mp.exp(x) - mp.exp(-x)
        term = mp.exp(-mp.pi * 1j * k * k / (2 * K * P)) * (mp.exp(N * x) - mp.exp(-N * x)) / s
        term *= prod((mp.exp(x / p) - mp.exp(-x / p)) for p in ps) / s ** (n - 2)
        total += term
    return B * G0 / K * mp.exp(-mp.pi * 1j * (mp.mpf(c.numerator) / c.denominator) / (2 * K)) * total


def _half_integers(N: int):
    return [Fraction(2 * j - (N - 1), 2) for j in range(N)]


def _weight(m: int, n: int) -> int:
    if n <= 2:
        return 1 if m == 0 else 0
    return comb(m + n - 3, n - 3)


def phi_series_brute(pairs, N: int, cutoff: Fraction) -> dict:
    """Exact coefficients {exponent: coeff} of Phi(q;N) for exponents <= cutoff.

    Uses 1/(q^(1/2) - q^(-1/2)) = -sum_{k>=0} q^(k+1/2).
    """
    ps = [p for p, _ in pairs]
    n = len(ps)
    P = prod(ps)
    c = theta0_oracle(pairs) + (N * N - 1) * P
    inner = {}
    for ell in _half_integers(N):
        for eps in product((1, -1), repeat=n):
            sign = prod(eps)
            m = 0
            while True:
                x = 2 * m + 2 * ell + n - 2 + sum(Fraction(e, p) for e, p in zip(eps, ps))
                e = Fraction(P, 4) * x * x
                w = _weight(m, n)
                low = e - c / 4 + Fraction(1, 2)
                if low > cutoff and x > 0:
                    break
                if w:
                    inner[e] = inner.get(e, 0) + sign * w
                m += 1
                if n <= 2 and m > 0:
                    break
    out = {}
    for e, coeff in inner.items():
        k = 0
        while True:
            expo = e - c / 4 + Fraction(1, 2) + k
            if expo > cutoff:
                break
            out[expo] = out.get(expo, 0) + Fraction((-1) ** n) * Fraction(-1, 2) * coeff
            k += 1
    return {e: v for e, v in sorted(out.items()) if v != 0}


def phi_direct(pairs, N: int, log_q, terms: int = 400) -> mp.mpc:
    """Phi(q;N) from the definition, q^r := exp(r log_q), m summed to ``terms``."""
    ps = [p for p, _ in pairs]
    n = len(ps)
    P = prod(ps)
    c = theta0_oracle(pairs) + (N * N - 1) * P
    log_q = mp.mpc(log_q)
    total = mp.mpc(0)
    for ell in _half_integers(N):
        for eps in product((1, -1), repeat=n):
            sign = prod(eps)
            for m in range(terms if n > 2 else 1):
                x = 2 * m + 2 * ell + n - 2 + sum(Fraction(e, p) for e, p in zip(eps, ps))
                e = Fraction(P, 4) * x * x
                total += sign * _weight(m, n) * mp.exp(mp.mpf(e.numerator) / e.denominator * log_q)
    cq = mp.mpf(c.numerator) / c.denominator
    pref = (-1) ** n / (2 * (mp.exp(log_q / 2) - mp.exp(-log_q / 2))) * mp.exp(-cq / 4 * log_q)
    return pref * total


def gauss_sum_naive(K: int, P: int) -> mp.mpc:
    return mp.fsum(mp.exp(-mp.pi * 1j * k * k / (2 * K * P)) for k in range(2 * K * P))


def eps_sum_brute(ps, s: int) -> Fraction:
    """sum over eps of prod(eps) * (sum eps_j/p_j)^s."""
    total = Fraction(0)
    for eps in product((1, -1), repeat=len(ps)):
        total += prod(eps) * sum(Fraction(e, p) for e, p in zip(eps, ps)) ** s
    return total


def coprime(a: int, b: int) -> bool:
    return gcd(a, b) == 1


def _bezout(values):
    """Integers x with sum x_i * values_i = gcd(values)."""
    g, coeffs = values[0], [1]
    for v in values[1:]:
        # extended Euclid on (g, v)
        old_r, r, old_s, s, old_t, t = g, v, 1, 0, 0, 1
        while r:
            k = old_r // r
            old_r, r = r, old_r - k * r
            old_s, s = s, old_s - k * s
            old_t, t = t, old_t - k * t
        coeffs = [c * old_s for c in coeffs] + [old_t]
        g = old_r
    return g, coeffs


def loop_pairs(ps, shifts=()):
    """Surgery pairs (p_j, q_j) with P * sum q_j/p_j = 1, moved along the kernel by ``shifts``."""
    P = prod(ps)
    g, qs = _bezout([P // p for p in ps])
    assert g == 1
    qs = list(qs)
    for i, k in enumerate(list(shifts)[:len(ps)]):
        j = (i + 1) % len(ps)
        qs[i] += k * ps[i]
        qs[j] -= k * ps[j]
    return list(zip(ps, qs))
