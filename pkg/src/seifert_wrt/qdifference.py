"""q-difference operators in (m^, l^), the structure series D, R, C~, C, and exact checks of the recursions.

Convention: (m^ F)(N) = q^(N/2) F(N) and (l^ F)(N) = F(N+1), so l^ m^ = q^(1/2) m^ l^.
Operators are kept normal-ordered: every monomial is coeff * q^a m^^b [ratio(m^)] l^^c.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import mpmath as mp

from .numerics.precision import real
from .numerics.qseries import QSeries
from .report import VerificationReport
from .seifert_core import (SeifertLoop, a_coeff, binom_weight, c_const, make_loop, sign_product,
                           sign_vectors)
from .wrt_qseries import phi_eval, phi_series, theta_block_sum


class CutoffUnderflow(ValueError):
    pass


# ---------------------------------------------------------------------------
# Operator algebra

@dataclass(frozen=True)
class Ratio:
    """Coefficient function f(q^num_shift m^^m_power) / f(q^den_shift m^^m_power), f in {C, Cprime}."""

    kind: str
    num_shift: Fraction
    den_shift: Fraction
    m_power: int = 1

    def moved_past(self, l_pow: int) -> "Ratio":
        """The ratio after commuting l^^l_pow from its right to its left."""
        by = Fraction(l_pow * self.m_power, 2)
        return Ratio(self.kind, self.num_shift + by, self.den_shift + by, self.m_power)


@dataclass(frozen=True)
class Monomial:
    coeff: Fraction
    q_exp: Fraction
    m_exp: Fraction
    l_pow: int
    ratio: Optional[Ratio] = None

    def key(self):
        return (self.m_exp, self.l_pow, self.ratio, self.q_exp)


@dataclass(frozen=True)
class QDiffOperator:
    monomials: tuple = field(default_factory=tuple)

    def __post_init__(self):
        merged: dict = {}
        for mono in self.monomials:
            if mono.l_pow < 0:
                raise ValueError("l^ powers must be non-negative")
            k = mono.key()
            merged[k] = merged.get(k, Fraction(0)) + Fraction(mono.coeff)
        ordered = sorted(((k, c) for k, c in merged.items() if c != 0),
                         key=lambda kc: (kc[0][1], kc[0][0], kc[0][3], repr(kc[0][2])))
        object.__setattr__(self, "monomials", tuple(
            Monomial(c, k[3], k[0], k[1], k[2]) for k, c in ordered))

    @classmethod
    def term(cls, coeff=1, q_exp=0, m_exp=0, l_pow=0, ratio=None):
        return cls((Monomial(Fraction(coeff), Fraction(q_exp), Fraction(m_exp), int(l_pow), ratio),))

    def __add__(self, other):
        return QDiffOperator(self.monomials + other.monomials)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return QDiffOperator(tuple(Monomial(m.coeff * c, m.q_exp, m.m_exp, m.l_pow, m.ratio)
                                   for m in self.monomials))

    def __mul__(self, other):
        return op_mul(self, other)

    def to_json(self) -> str:
        rows = []
        for m in self.monomials:
            row = {"q_exp": str(m.q_exp), "m_exp": str(m.m_exp), "l_pow": m.l_pow, "coeff": str(m.coeff)}
            if m.ratio is not None:
                row["ratio"] = {"kind": m.ratio.kind, "num_shift": str(m.ratio.num_shift),
                                "den_shift": str(m.ratio.den_shift), "m_power": m.ratio.m_power}
            rows.append(row)
        return json.dumps(rows, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "QDiffOperator":
        monos = []
        for row in json.loads(text):
            ratio = None
            if "ratio" in row:
                r = row["ratio"]
                ratio = Ratio(r["kind"], Fraction(r["num_shift"]), Fraction(r["den_shift"]),
                              int(r.get("m_power", 1)))
            monos.append(Monomial(Fraction(row["coeff"]), Fraction(row["q_exp"]), Fraction(row["m_exp"]),
                                  int(row["l_pow"]), ratio))
        return cls(tuple(monos))


def m_hat(power=1) -> QDiffOperator:
    return QDiffOperator.term(m_exp=power)


def l_hat(power: int = 1) -> QDiffOperator:
    return QDiffOperator.term(l_pow=power)


def q_scalar(exponent, coeff=1) -> QDiffOperator:
    return QDiffOperator.term(coeff=coeff, q_exp=exponent)


def op_mul(a: QDiffOperator, b: QDiffOperator) -> QDiffOperator:
    """Product a*b, normal-ordered via l^^c m^^b' = q^(c b'/2) m^^b' l^^c."""
    out = []
    for x in a.monomials:
        for y in b.monomials:
            if x.ratio is not None and y.ratio is not None:
                raise NotImplementedError("products of two ratio coefficients are not represented")
            ratio = x.ratio
            if y.ratio is not None:
                ratio = y.ratio.moved_past(x.l_pow)
            out.append(Monomial(x.coeff * y.coeff,
                                x.q_exp + y.q_exp + Fraction(x.l_pow) * y.m_exp / 2,
                                x.m_exp + y.m_exp, x.l_pow + y.l_pow, ratio))
    return QDiffOperator(tuple(out))


def _family_series(family, color: int, cutoff) -> QSeries:
    got = family(color, cutoff)
    return got.series if hasattr(got, "series") else got


def apply_operator(op: QDiffOperator, family: Callable, N: int, cutoff) -> QSeries:
    """Exact action on a family ``family(N, cutoff) -> PhiSeries | QSeries``, complete to ``cutoff``."""
    cutoff = Fraction(cutoff)
    result = None
    for mono in op.monomials:
        if mono.ratio is not None:
            raise ValueError("ratio coefficients are only applied numerically (apply_operator_numeric)")
        shift = mono.q_exp + mono.m_exp * N / 2
        need = cutoff - shift
        s = _family_series(family, N + mono.l_pow, need)
        if s.cutoff != math.inf and s.cutoff < need:
            raise CutoffUnderflow(f"family at color {N + mono.l_pow} is only complete to {s.cutoff}")
        term = s.scale(mono.coeff).shift(shift)
        result = term if result is None else result + term
    if result is None:
        return QSeries(1, {}, math.inf)
    return result.truncate(cutoff) if result.cutoff == math.inf or result.cutoff > cutoff else result


# ---------------------------------------------------------------------------
# Structure series

def _a_m(loop: SeifertLoop, m: int, eps) -> int:
    return a_coeff(loop, m, eps)


def d_series(loop: SeifertLoop, N: int, cutoff) -> QSeries:
    """D(N) = (-1)^n q^(-c(N)/4) / (2(q^(1/2) - q^(-1/2))) = (-1)^(n+1)/2 * q^(1/2 - c/4) sum_k q^k."""
    P = loop.P
    D = 4 * P
    start = Fraction(1, 2) - c_const(loop, N) / 4
    coeff = Fraction((-1) ** (loop.n + 1), 2)
    cutoff = Fraction(cutoff)
    terms = {}
    e = start
    while e <= cutoff:
        terms[int(e * D)] = coeff
        e += 1
    return QSeries(D, terms, cutoff)


def d_ratio_exponent(loop: SeifertLoop, N: int) -> Fraction:
    """Exponent of the monomial D(N+2)/D(N)."""
    return -(c_const(loop, N + 2) - c_const(loop, N)) / 4


def r_series(loop: SeifertLoop, ell, cutoff) -> QSeries:
    """R(ell) = sum_eps prod(eps) sum_m binom q^((2 ell P + a_{m,eps})^2 / 4P)."""
    P, n = loop.P, loop.n
    D = 4 * P
    ell = Fraction(ell)
    cut_lat = math.floor(Fraction(cutoff) * D)
    terms: dict = {}
    for eps in sign_vectors(n):
        sign = sign_product(eps)
        m = 0
        while True:
            if n <= 2 and m > 0:
                break
            x = 2 * ell * P + _a_m(loop, m, eps)
            if x.denominator != 1:
                raise ArithmeticError("R exponent off the lattice")
            x = int(x)
            if x * x > cut_lat:
                if x >= 0:
                    break
                m += 1
                continue
            terms[x * x] = terms.get(x * x, 0) + sign * binom_weight(m, n)
            m += 1
    return QSeries(D, terms, cutoff)


@dataclass(frozen=True)
class CBivariate:
    """Terms coeff * q^q_exp * m^m_exp of C(m) with q_exp <= cutoff."""

    P: int
    terms: dict
    cutoff: Fraction

    def specialize(self, half_power, prefactor=0) -> dict:
        """Exponent -> coeff after m = q^half_power and multiplication by q^prefactor (no truncation)."""
        out: dict = {}
        for (qe, me), c in self.terms.items():
            e = qe + me * Fraction(half_power) + Fraction(prefactor)
            out[e] = out.get(e, 0) + c
        return {e: c for e, c in out.items() if c}


def c_bivariate(loop: SeifertLoop, cutoff) -> CBivariate:
    P, n = loop.P, loop.n
    cutoff = Fraction(cutoff)
    terms: dict = {}
    for eps in sign_vectors(n):
        sign = sign_product(eps)
        m = 0
        while True:
            if n <= 2 and m > 0:
                break
            a = _a_m(loop, m, eps)
            qe = Fraction(a * a, 4 * P)
            if qe > cutoff:
                if a >= 0:
                    break
                m += 1
                continue
            w = sign * binom_weight(m, n)
            for me in (a, -a):
                terms[(qe, me)] = terms.get((qe, me), 0) + w
            m += 1
    return CBivariate(P, {k: v for k, v in terms.items() if v}, cutoff)


def c_specialized_series(loop: SeifertLoop, N: int, cutoff) -> QSeries:
    """q^(P(N+1)^2/4) C(q^((N+1)/2)) straight from the C display, complete to ``cutoff``.

    Each pair of terms q^(a^2/4P) q^(+-a(N+1)/2) contributes q^((a +- P(N+1))^2/4P).
    """
    P, n = loop.P, loop.n
    D = 4 * P
    h = Fraction(N + 1, 2)
    pref = Fraction(P * (N + 1) ** 2, 4)
    cutoff = Fraction(cutoff)
    terms: dict = {}
    for eps in sign_vectors(n):
        sign = sign_product(eps)
        m = 0
        while True:
            if n <= 2 and m > 0:
                break
            a = _a_m(loop, m, eps)
            w = sign * binom_weight(m, n)
            exps = [Fraction(a * a, 4 * P) + s * a * h + pref for s in (1, -1)]
            if min(exps) > cutoff and a >= P * (N + 1):
                break
            for e in exps:
                if e <= cutoff:
                    terms[int(e * D)] = terms.get(int(e * D), 0) + w
            m += 1
    return QSeries(D, terms, cutoff)


def ctilde_series(loop: SeifertLoop, N: int, cutoff) -> QSeries:
    """C~(N) = D(N+2) (R((N+1)/2) + R(-(N+1)/2)), complete to ``cutoff``."""
    cutoff = Fraction(cutoff)
    d_low = Fraction(1, 2) - c_const(loop, N + 2) / 4
    h = Fraction(N + 1, 2)
    r_sum = r_series(loop, h, cutoff - d_low) + r_series(loop, -h, cutoff - d_low)
    r_low = r_sum.lowest_possible()
    if r_low == math.inf:
        return QSeries(4 * loop.P, {}, cutoff)
    d = d_series(loop, N + 2, cutoff - r_low)
    return (d * r_sum).truncate(cutoff)


def ctilde_lowest(loop: SeifertLoop, N: int) -> Fraction:
    """A lower bound for every exponent of C~(N)."""
    return Fraction(1, 2) - c_const(loop, N + 2) / 4


def phi_lowest(loop: SeifertLoop, N: int) -> Fraction:
    """A lower bound for every exponent of Phi(N)."""
    return Fraction(1, 2) - c_const(loop, N) / 4


@dataclass(frozen=True)
class StructureSeries:
    N: int
    d_prefactor: QSeries
    d_ratio_exponent: Fraction
    r_plus: QSeries
    r_minus: QSeries
    ctilde: QSeries
    c_bivariate: CBivariate


def structure_series(loop: SeifertLoop, N: int, cutoff) -> StructureSeries:
    if N < 1:
        raise ValueError("N must be >= 1")
    h = Fraction(N + 1, 2)
    return StructureSeries(
        N=N,
        d_prefactor=d_series(loop, N, cutoff),
        d_ratio_exponent=d_ratio_exponent(loop, N),
        r_plus=r_series(loop, h, cutoff),
        r_minus=r_series(loop, -h, cutoff),
        ctilde=ctilde_series(loop, N, cutoff),
        c_bivariate=c_bivariate(loop, cutoff),
    )


# ---------------------------------------------------------------------------
# Exact verification of the recursions

def _default_family(loop):
    def family(N, cutoff):
        return phi_series(loop, N, max(Fraction(cutoff), Fraction(0))).series
    return family


def _first_terms(s: QSeries, count: int = 3):
    return [(str(e), str(c)) for e, c in s.items()[:count]]


def inhomogeneous_residual(phi_n: QSeries, phi_n2: QSeries, ctilde: QSeries, shift, cutoff) -> QSeries:
    """Phi(N+2) - q^shift Phi(N) - C~(N), truncated at ``cutoff``."""
    res = phi_n2 - phi_n.shift(shift) - ctilde
    return res.truncate(cutoff)


def _report_zero(claim: str, residual: QSeries, cutoff, details: dict) -> VerificationReport:
    complete = residual.cutoff >= Fraction(cutoff)
    passed = residual.is_zero() and complete
    details = dict(details)
    details.update({"cutoff": Fraction(cutoff), "residual_cutoff": residual.cutoff,
                    "nonzero_residual_terms": len(residual.terms),
                    "first_residual_terms": _first_terms(residual)})
    return VerificationReport(claim=claim, passed=passed, lhs=len(residual.terms), rhs=0,
                              residual=len(residual.terms), tolerance=0, details=details)


def verify_inhomogeneous(loop: SeifertLoop, N: int, cutoff, family: Optional[Callable] = None) -> VerificationReport:
    """Exact check of Phi(N+2) = q^(-P(N+1)) Phi(N) + C~(N) through exponent ``cutoff``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    cutoff = Fraction(cutoff)
    family = family or _default_family(loop)
    shift = d_ratio_exponent(loop, N)
    phi_n2 = _family_series(family, N + 2, cutoff)
    phi_n = _family_series(family, N, cutoff - shift)
    ct = ctilde_series(loop, N, cutoff)
    res = inhomogeneous_residual(phi_n, phi_n2, ct, shift, cutoff)
    return _report_zero("q-difference-inhomogeneous", res, cutoff,
                        {"loop": str(loop), "N": N, "shift": shift})


def verify_third_order(loop: SeifertLoop, N: int, cutoff, family: Optional[Callable] = None) -> VerificationReport:
    """Exact check of the product form
    C~(N+1)Phi(N+2) - C~(N)Phi(N+3) = q^(-P(N+1)) C~(N+1)Phi(N) - q^(-P(N+2)) C~(N)Phi(N+1)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    cutoff = Fraction(cutoff)
    family = family or _default_family(loop)
    s1 = d_ratio_exponent(loop, N)
    s2 = d_ratio_exponent(loop, N + 1)

    def product(ct_color, phi_color, target):
        ct_cut = target - phi_lowest(loop, phi_color)
        ph_cut = target - ctilde_lowest(loop, ct_color)
        ct = ctilde_series(loop, ct_color, ct_cut)
        ph = _family_series(family, phi_color, ph_cut)
        return (ct * ph).truncate(target)

    lhs = product(N + 1, N + 2, cutoff) - product(N, N + 3, cutoff)
    rhs = product(N + 1, N, cutoff - s1).shift(s1) - product(N, N + 1, cutoff - s2).shift(s2)
    res = (lhs - rhs).truncate(cutoff)
    return _report_zero("q-difference-third-order", res, cutoff, {"loop": str(loop), "N": N})


def q_integer_series(M: int, D: int) -> QSeries:
    """(q^(M/2) - q^(-M/2)) / (q^(1/2) - q^(-1/2)) = sum_j q^((M-1)/2 - j), j = 0..M-1."""
    terms = {}
    for j in range(M):
        e = Fraction(M - 1, 2) - j
        terms[int(e * D)] = Fraction(1)
    return QSeries(D, terms, math.inf)


def verify_degenerate_first_order(k: int, N_max: int = 5) -> VerificationReport:
    """Phi(N) = -q^((k+1/2)(1-2N)) Phi(N-1) + q^((k+1/2)(1-N)) [2N-1] for the (2, 2k+1) loop.

    Phi(0) is taken as 0, so the N = 1 case reads Phi(1) = [1] = 1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    loop = degenerate_loop(k)
    D = 4 * loop.P
    h = Fraction(2 * k + 1, 2)
    bad = []
    cut = Fraction(10 ** 6)
    for N in range(1, N_max + 1):
        cur = phi_series(loop, N, cut).series
        prev = phi_series(loop, N - 1, cut).series if N > 1 else QSeries(D, {}, math.inf)
        rhs = prev.shift(h * (1 - 2 * N)).scale(-1) + q_integer_series(2 * N - 1, D).shift(h * (1 - N))
        res = cur - rhs
        if not res.is_zero():
            bad.append((N, _first_terms(res)))
    return VerificationReport(claim="degenerate-first-order", passed=not bad, lhs=len(bad), rhs=0,
                              residual=len(bad), tolerance=0,
                              details={"k": k, "loop": str(loop), "N_max": N_max, "failures": bad})


def degenerate_loop(k: int) -> SeifertLoop:
    """The (2, 2k+1) loop 2/1, (2k+1)/(-k)."""
    return make_loop([(2, 1), (2 * k + 1, -k)])


# ---------------------------------------------------------------------------
# The operators themselves and numeric checks of the ratio forms

def third_order_operator(P: int) -> QDiffOperator:
    """l^3 - q^(-P/2) rho l^2 - q^(-2P) m^^(-2P) l^ + q^(-3P/2) rho m^^(-2P), rho = C(q m^)/C(q^(1/2) m^)."""
    rho = Ratio("C", Fraction(1), Fraction(1, 2))
    P = Fraction(P)
    return (QDiffOperator.term(l_pow=3)
            + QDiffOperator.term(coeff=-1, q_exp=-P / 2, l_pow=2, ratio=rho)
            + QDiffOperator.term(coeff=-1, q_exp=-2 * P, m_exp=-2 * P, l_pow=1)
            + QDiffOperator.term(coeff=1, q_exp=-3 * P / 2, m_exp=-2 * P, ratio=rho))


def degenerate_operator(k: int, form: str = "literal") -> QDiffOperator:
    """Second-order operator for the (2, 2k+1) loop, h = k + 1/2.

    ``literal``: l^2 + (q^(-3h) m^^(-4h) - q^(-h) rho') l^ - m^^(-4h) rho',
    rho' = C'(q^(3/2) m^)/C'(q^(1/2) m^), exactly as usually displayed.
    ``derived``: eliminating the inhomogeneous term from the first-order relation
    gives rho' = C'(q^(3/2) m^^2)/C'(q^(1/2) m^^2) = [2N+3]/[2N+1] and an extra
    q^(-2h) in the last coefficient.  Only this form annihilates Phi.
    """
    h = Fraction(2 * k + 1, 2)
    if form == "literal":
        rho = Ratio("Cprime", Fraction(3, 2), Fraction(1, 2), 1)
        last_q = Fraction(0)
    elif form == "derived":
        rho = Ratio("Cprime", Fraction(3, 2), Fraction(1, 2), 2)
        last_q = -2 * h
    else:
        raise ValueError(f"unknown form {form!r}")
    return (QDiffOperator.term(l_pow=2)
            + QDiffOperator.term(q_exp=-3 * h, m_exp=-4 * h, l_pow=1)
            + QDiffOperator.term(coeff=-1, q_exp=-h, l_pow=1, ratio=rho)
            + QDiffOperator.term(coeff=-1, q_exp=last_q, m_exp=-4 * h, ratio=rho))


def _c_terms(loop: SeifertLoop, s: Fraction, log_q, tol):
    """C(q^s) summed with exact rational exponents a^2/4P +- a s; returns (value, largest term)."""
    P, n = loop.P, loop.n
    total = mp.mpf(0)
    biggest = mp.mpf(0)
    for eps in sign_vectors(n):
        sign = sign_product(eps)
        m = 0
        while True:
            if n <= 2 and m > 0:
                break
            a = _a_m(loop, m, eps)
            w = sign * binom_weight(m, n)
            base = Fraction(a * a, 4 * P)
            t1 = mp.exp(real(base + a * s) * log_q)
            t2 = mp.exp(real(base - a * s) * log_q)
            total += w * (t1 + t2)
            size = abs(w) * (t1 + t2)
            biggest = max(biggest, size)
            if m > 2 and a > 0 and size < tol:
                break
            m += 1
    return total, biggest


def cancellation_bits(value, biggest) -> float:
    """Bits lost when terms of size ``biggest`` cancel down to ``value``."""
    if biggest == 0:
        return 0.0
    if value == 0:
        return math.inf
    return max(0.0, float(mp.log(biggest / abs(value), 2)))


def _exact_q(q) -> Fraction:
    q = Fraction(q)
    if not 0 < q < 1:
        raise ValueError("numeric checks take a rational q in (0, 1)")
    return q


def c_numeric(loop: SeifertLoop, s, q, max_bits: int = 8192) -> mp.mpf:
    """C(m) at m = q^s for rational q in (0, 1), accurate to about the working precision.

    The terms can exceed the result by many orders, so the sum is redone at a
    precision covering the measured cancellation, with log q and every exponent
    rebuilt exactly at that precision.
    """
    s = Fraction(s)
    q = _exact_q(q)
    target = mp.mp.prec
    bits = target
    while True:
        with mp.workprec(bits):
            log_q = mp.log(real(q))
            value, biggest = _c_terms(loop, s, log_q, mp.ldexp(mp.mpf(1), -bits + 16))
            lost = cancellation_bits(value, biggest)
        if bits - lost >= target + 8 or bits >= max_bits:
            return +value
        bits = min(max_bits, int(math.ceil(lost)) + target + 32 if lost != math.inf else 2 * bits)


def _ratio_value(ratio: Ratio, N: int, q: Fraction, loop: Optional[SeifertLoop]):
    """The ratio coefficient at m = q^(N/2)."""
    s_num = ratio.num_shift + Fraction(ratio.m_power * N, 2)
    s_den = ratio.den_shift + Fraction(ratio.m_power * N, 2)
    if ratio.kind == "C":
        if loop is None:
            raise ValueError("C ratios need the loop")
        return c_numeric(loop, s_num, q) / c_numeric(loop, s_den, q)
    if ratio.kind == "Cprime":
        log_q = mp.log(real(q))
        return mp.sinh(real(s_num) * log_q) / mp.sinh(real(s_den) * log_q)
    raise ValueError(f"unknown ratio kind {ratio.kind!r}")


def apply_operator_numeric(op: QDiffOperator, values: Callable, N: int, q,
                           loop: Optional[SeifertLoop] = None, with_scale: bool = False):
    """(op F)(N) at a rational q in (0, 1), where ``values(N)`` returns F(q;N).

    With ``with_scale`` also returns the largest single monomial contribution.
    """
    q = _exact_q(q)
    log_q = mp.log(real(q))
    total = mp.mpf(0)
    biggest = mp.mpf(0)
    for mono in op.monomials:
        f = real(mono.coeff) * mp.exp(real(mono.q_exp + mono.m_exp * N / 2) * log_q)
        if mono.ratio is not None:
            f *= _ratio_value(mono.ratio, N, q, loop)
        term = f * values(N + mono.l_pow)
        biggest = max(biggest, abs(term))
        total += term
    return (total, biggest) if with_scale else total


def ctilde_numeric(loop: SeifertLoop, N: int, q, max_bits: int = 8192):
    """C~(N) = D(N+2)(R((N+1)/2) + R(-(N+1)/2)) at rational q, D in closed form; returns (value, bound).

    The R-sum cancels far below its terms, so it is recomputed at a precision
    covering the measured loss; ``bound`` covers the omitted tails.
    """
    q = _exact_q(q)
    target = mp.mp.prec
    h = Fraction(N + 1, 2)
    bits = target
    while True:
        with mp.workprec(bits):
            log_q = mp.log(real(q))
            t = mp.ldexp(mp.mpf(1), -bits + 16)
            value, b = theta_block_sum(loop, [h, -h], log_q, t)
            gauge, _ = theta_block_sum(loop, [h, -h], log_q, t, absolute=True)
            lost = cancellation_bits(value, mp.re(gauge))
            resolved = abs(value) > b * 2 ** 40
        if (bits - lost >= target + 8 and resolved) or bits >= max_bits:
            break
        bits = min(max_bits, int(math.ceil(lost)) + target + 32 if lost != math.inf else 2 * bits)
    log_q = mp.log(real(q))
    c = real(c_const(loop, N + 2))
    d = (-1) ** loop.n * mp.exp(-c * log_q / 4) / (4 * mp.sinh(log_q / 2))
    return mp.re(d * value), abs(d) * b


def ctilde_ratio_check(loop: SeifertLoop, N: int, q=Fraction(3, 10)) -> VerificationReport:
    """C~(N+1)/C~(N) against q^(-P/2) C(q m)/C(q^(1/2) m) at m = q^(N/2), numerically."""
    q = _exact_q(q)
    top, b_top = ctilde_numeric(loop, N + 1, q)
    bottom, b_bottom = ctilde_numeric(loop, N, q)
    lhs = top / bottom
    s = Fraction(N, 2)
    rhs = mp.exp(-mp.mpf(loop.P) / 2 * mp.log(real(q))) * c_numeric(loop, s + 1, q) / c_numeric(
        loop, s + Fraction(1, 2), q)
    # truncation bounds propagated to first order, plus a rounding allowance
    bound = abs(lhs) * (2 * (b_top / abs(top) + b_bottom / abs(bottom)) + mp.ldexp(mp.mpf(1), -mp.mp.prec // 2))
    residual = abs(lhs - rhs)
    return VerificationReport(claim="ctilde-ratio", passed=bool(residual <= bound),
                              lhs=lhs, rhs=rhs, residual=residual, tolerance=bound,
                              details={"loop": str(loop), "N": N, "q": q})


def verify_degenerate_second_order(k: int, N: int = 1, q=Fraction(1, 5), tol=None,
                                   form: str = "literal") -> VerificationReport:
    """The second-order operator with C'(m) = m - 1/m applied to Phi of the (2, 2k+1) loop at real q."""
    loop = degenerate_loop(k)
    q = _exact_q(q)
    log_q = mp.log(real(q))
    if tol is None:
        tol = mp.ldexp(mp.mpf(1), -mp.mp.prec // 3)

    def values(color):
        return phi_eval(loop, color, log_q)[0]

    op = degenerate_operator(k, form)
    value, scale = apply_operator_numeric(op, values, N, q, loop, with_scale=True)
    residual = abs(value)
    return VerificationReport(claim="degenerate-second-order", passed=bool(residual <= tol * scale),
                              lhs=residual, rhs=0, residual=residual, tolerance=tol * scale,
                              details={"k": k, "N": N, "q": Fraction(q), "form": form})


def verify_third_order_numeric(loop: SeifertLoop, N: int, q=Fraction(3, 10), tol=None) -> VerificationReport:
    """The ratio form of the third-order operator applied to Phi at real q (analytic reading)."""
    q = _exact_q(q)
    log_q = mp.log(real(q))
    if tol is None:
        tol = mp.ldexp(mp.mpf(1), -mp.mp.prec // 3)

    def values(color):
        return phi_eval(loop, color, log_q)[0]

    op = third_order_operator(loop.P)
    value, scale = apply_operator_numeric(op, values, N, q, loop, with_scale=True)
    residual = abs(value)
    return VerificationReport(claim="third-order-ratio-form", passed=bool(residual <= tol * scale),
                              lhs=residual, rhs=0, residual=residual, tolerance=tol * scale,
                              details={"loop": str(loop), "N": N, "q": Fraction(q)})


# ---------------------------------------------------------------------------
# Classical limit

@dataclass(frozen=True)
class LaurentPoly2:
    """Finite sum of coeff * frak_m^i * frak_l^j keyed by (i, j)."""

    terms: dict

    def __post_init__(self):
        object.__setattr__(self, "terms", {k: Fraction(v) for k, v in sorted(self.terms.items()) if v != 0})

    def __mul__(self, other):
        out: dict = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
        return LaurentPoly2(out)

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return LaurentPoly2(out)

    def __eq__(self, other):
        return isinstance(other, LaurentPoly2) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def evaluate(self, m, l):
        total = 0
        for (i, j), c in self.terms.items():
            total += c * Fraction(m) ** i * Fraction(l) ** j if isinstance(m, (int, Fraction)) and isinstance(
                l, (int, Fraction)) else c * m ** i * l ** j
        return total

    def __str__(self):
        parts = []
        for (i, j), c in sorted(self.terms.items(), key=lambda kv: (-kv[0][1], kv[0][0])):
            mono = []
            if j:
                mono.append("l" if j == 1 else f"l^{j}")
            if i:
                mono.append(f"m^{i}" if i > 0 else f"m^({i})")
            body = "*".join(mono) or "1"
            if c == 1:
                parts.append(f"+ {body}")
            elif c == -1:
                parts.append(f"- {body}")
            else:
                parts.append(f"{'+' if c > 0 else '-'} {abs(c)}*{body}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:] if text.startswith("- ") else text


def classical_polynomial(op: QDiffOperator) -> LaurentPoly2:
    """Set q = 1 and every ratio coefficient to 1; m^ -> frak_m, l^ -> frak_l."""
    out: dict = {}
    for mono in op.monomials:
        if mono.m_exp.denominator != 1:
            raise ValueError("classical limit needs integral m^ powers")
        key = (int(mono.m_exp), mono.l_pow)
        out[key] = out.get(key, 0) + mono.coeff
    return LaurentPoly2(out)


def _linear_in_l(m_power: int, sign: int) -> LaurentPoly2:
    """frak_l + sign * frak_m^m_power."""
    return LaurentPoly2({(0, 1): 1, (m_power, 0): sign})


def classical_limit(loop: Optional[SeifertLoop] = None, k: Optional[int] = None):
    """(polynomial, factors, report): the q -> 1 image of the operator and its factorization."""
    if (loop is None) == (k is None):
        raise ValueError("give exactly one of loop or k")
    if loop is not None:
        P = loop.P
        poly = classical_polynomial(third_order_operator(P))
        factors = [_linear_in_l(0, -1), _linear_in_l(-P, -1), _linear_in_l(-P, 1)]
        roots = [(Fraction(2), Fraction(1, 2 ** P)), (Fraction(2), -Fraction(1, 2 ** P)),
                 (Fraction(7, 3), Fraction(1))]
        label = f"P={P}"
    else:
        w = 2 * (2 * k + 1)
        poly = classical_polynomial(degenerate_operator(k))
        factors = [_linear_in_l(0, -1), _linear_in_l(-w, 1)]
        roots = [(Fraction(2), -Fraction(1, 2 ** w)), (Fraction(7, 3), Fraction(1))]
        label = f"k={k}"
    product = factors[0]
    for f in factors[1:]:
        product = product * f
    roots_ok = all(poly.evaluate(m, l) == 0 for m, l in roots)
    passed = product == poly and roots_ok
    report = VerificationReport(claim="classical-limit", passed=passed, lhs=str(poly), rhs=str(product),
                                residual=0 if product == poly else 1, tolerance=0,
                                details={"case": label, "roots_annihilate": roots_ok,
                                         "factored": " * ".join(f"({f})" for f in factors)})
    return poly, factors, report
