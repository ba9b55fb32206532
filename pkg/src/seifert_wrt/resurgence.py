"""Perturbative expansion, Borel transform, lateral and median Borel sums, Stokes jumps
and the integral-plus-residues decomposition of Z(K;N).

Directional Borel sums are evaluated in the y-plane, where the Laplace
integral along arg(xi) = theta becomes a straight line through the origin
at angle pi/4 + theta/2.  This keeps every branch choice explicit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import mpmath as mp

from .exact_sums import _check_K, z_norm
from .numerics.contour import GaussianDecay, contour_integrate, line
from .numerics.precision import default_tolerance, real
from .numerics.series import (LaurentPart, TwoPiIM, laurent_series, s_exp, s_inv, s_mul)
from .report import VerificationReport
from .seifert_core import (F_denominator_series, F_eval, F_numerator_series, F_taylor,
                           SeifertLoop, c_const, g0, pole_order)
from .wrt_qseries import phi_eval

DEFAULT_DELTA = 0.2
# piecewise Gauss-Legendre needs about a third of the tanh-sinh nodes on these long lines
QUADRATURE_RULE = "gauss-legendre"


class ContourError(ValueError):
    """The requested integration line is outside its convergence sector or too close to a pole."""


def quadrature_tolerance() -> mp.mpf:
    """Tighter quadrature target 2^(-3 prec / 8), used where the check itself is near 2^(-prec/4)."""
    return mp.ldexp(mp.mpf(1), -(3 * mp.mp.prec) // 8)


def e_prefactor(loop: SeifertLoop, N: int, kappa) -> mp.mpc:
    """E(kappa) = (B / 2 pi i) exp(-pi i c(N) / (2 kappa)) as a function."""
    B = -mp.expjpi(mp.mpf(3) / 4) / (4 * mp.sqrt(loop.P))
    c = real(c_const(loop, N))
    return B / (2j * mp.pi) * mp.exp(-1j * mp.pi * c / (2 * mp.mpc(kappa)))


# ---------------------------------------------------------------------------
# perturbative series

def e_series(loop: SeifertLoop, N: int, M: int) -> list:
    """Coefficients of kappa^-j, j = 0..M, in the expansion of E(kappa)."""
    B = -mp.expjpi(mp.mpf(3) / 4) / (4 * mp.sqrt(loop.P))
    lead = B / (2j * mp.pi)
    rate = -1j * mp.pi * real(c_const(loop, N)) / 2
    out = []
    term = lead
    for j in range(M + 1):
        out.append(term)
        term = term * rate / (j + 1)
    return out


def gaussian_moment(P: int, m: int) -> mp.mpc:
    """kappa^(m+1/2) times the integral over R e^(i pi/4) of exp(i kappa y^2/(8 pi P)) y^(2m)."""
    return mp.expjpi(mp.mpf(1) / 4) * mp.mpc(0, 1) ** m * mp.gamma(m + mp.mpf(1) / 2) \
        * (8 * mp.pi * P) ** (m + mp.mpf(1) / 2)


def i_pert(loop: SeifertLoop, N: int, M: int) -> list:
    """Coefficients of kappa^(-m-1/2), m = 0..M, in the large-kappa expansion of I(kappa)."""
    if M < 0:
        raise ValueError("M must be >= 0")
    taylor = F_taylor(loop, N, max(2 * M, 2))
    return [real(taylor[2 * m]) * gaussian_moment(loop.P, m) for m in range(M + 1)]


@dataclass(frozen=True)
class PerturbativeSeries:
    """Z^pert = sum a_m kappa^(-m-1/2) with its two factor sequences kept alongside."""

    a: tuple
    e: tuple
    i: tuple

    @property
    def order(self) -> int:
        return len(self.a) - 1

    def borel_coefficients(self) -> list:
        """a_m / Gamma(m + 1/2), the coefficients of xi^(m - 1/2) in the Borel transform."""
        return [a / mp.gamma(m + mp.mpf(1) / 2) for m, a in enumerate(self.a)]

    def term(self, m: int, kappa) -> mp.mpc:
        return self.a[m] * mp.mpc(kappa) ** (-m - mp.mpf(1) / 2)

    def partial_sum(self, kappa, M: Optional[int] = None) -> mp.mpc:
        M = self.order if M is None else M
        return mp.fsum(self.term(m, kappa) for m in range(M + 1))


def cauchy_product(e: list, i: list) -> list:
    return [mp.fsum(e[j] * i[m - j] for j in range(m + 1)) for m in range(min(len(e), len(i)))]


def z_pert(loop: SeifertLoop, N: int, M: int) -> PerturbativeSeries:
    e = e_series(loop, N, M)
    i = i_pert(loop, N, M)
    return PerturbativeSeries(a=tuple(cauchy_product(e, i)), e=tuple(e), i=tuple(i))


def borel_convolution_coefficients(series: PerturbativeSeries) -> list:
    """Borel coefficients of E_B * I_B assembled from the factor Borel transforms.

    E_B = e_0 delta + sum_{j>=1} e_j xi^(j-1)/Gamma(j) and I_B = sum i_k xi^(k-1/2)/Gamma(k+1/2);
    the convolution of xi^(a-1)/Gamma(a) with xi^(b-1)/Gamma(b) is evaluated through the
    Beta integral rather than by assuming the Laplace product rule.
    """
    out = []
    half = mp.mpf(1) / 2
    for m in range(series.order + 1):
        total = series.e[0] * series.i[m] / mp.gamma(m + half)
        for j in range(1, m + 1):
            k = m - j
            a, b = mp.mpf(j), k + half
            # int_0^xi eta^(a-1)(xi-eta)^(b-1) d eta = B(a, b) xi^(a+b-1)
            total += series.e[j] * series.i[k] * mp.beta(a, b) / (mp.gamma(a) * mp.gamma(b))
        out.append(total)
    return out


# ---------------------------------------------------------------------------
# Borel transform of I^pert and its singularities

def _sqrt_xi(xi) -> mp.mpc:
    """xi^(1/2) with the cut on the positive imaginary axis: arg xi taken in (-3 pi/2, pi/2]."""
    xi = mp.mpc(xi)
    if xi == 0:
        return mp.mpc(0)
    arg = mp.arg(xi)
    if arg > mp.pi / 2:
        arg -= 2 * mp.pi
    return mp.sqrt(abs(xi)) * mp.expj(arg / 2)


def _borel_half(loop: SeifertLoop, N: int, y) -> mp.mpc:
    return 4j * mp.pi * loop.P * F_eval(loop, N, y) / y


def borel_I_closed(loop: SeifertLoop, N: int, xi) -> mp.mpc:
    """I_B(xi) = H(y) - H(-y), H(y) = 4 pi i P F_N(y)/y, y = (8 pi i P)^(1/2) xi^(1/2)."""
    xi = mp.mpc(xi)
    if xi == 0:
        raise ValueError("I_B is singular at xi = 0")
    ratio = xi / (mp.pi * 1j / (2 * loop.P))
    if abs(mp.im(ratio)) < mp.ldexp(mp.mpf(1), -mp.mp.prec // 2) and mp.re(ratio) > 0:
        m = mp.sqrt(mp.re(ratio))
        if abs(m - mp.nint(m)) < mp.ldexp(mp.mpf(1), -mp.mp.prec // 2) and pole_order(loop, int(mp.nint(m))) >= 1:
            raise ValueError(f"xi = pi i m^2/(2P) with m = {int(mp.nint(m))} is a singular point")
    y = mp.sqrt(8 * mp.pi * loop.P) * mp.expjpi(mp.mpf(1) / 4) * _sqrt_xi(xi)
    return _borel_half(loop, N, y) - _borel_half(loop, N, -y)


@dataclass(frozen=True)
class SingularityDatum:
    """A pole of I_B at omega = pi i m^2 / (2P), continued from the side Re xi > 0."""

    m: int
    omega: mp.mpc
    principal: LaurentPart
    y_order: int

    @property
    def residue(self) -> mp.mpc:
        return self.principal.residue


def _h_series_factory(loop: SeifertLoop, N: int):
    """Series factories for 8 pi i P F_N(y)/y = num/den about a point."""
    num_f = F_numerator_series(loop, N)
    den_f = F_denominator_series(loop)

    def num(center, terms):
        return [8j * mp.pi * loop.P * c for c in num_f(center, terms)]

    def den(center, terms):
        y0 = center.value() if isinstance(center, TwoPiIM) else mp.mpc(center)
        lin = [y0, mp.mpf(1)] + [0] * max(terms - 2, 0)
        return s_mul(den_f(center, terms), lin[:terms], terms)

    return num, den


def _compose_negative_powers(coeffs_h: list, valuation: int, h_of_u: list, order: int) -> list:
    """Principal part in u of sum_k coeffs_h[k] h^(valuation+k) with h = h(u), h(0) = 0."""
    # h = u * w(u), w(0) != 0
    w = h_of_u[1:order + 2]
    w_inv = s_inv(w, order + 1)
    out = [mp.mpc(0)] * (order + 1)  # out[j] = coefficient of u^-j
    for k, c in enumerate(coeffs_h):
        power = valuation + k
        if power >= 0 or c == 0:
            continue
        j = -power
        # h^-j = u^-j * w_inv^j
        wp = [mp.mpc(1)] + [mp.mpc(0)] * order
        for _ in range(j):
            wp = s_mul(wp, w_inv, order + 1)
        for r in range(j):
            out[j - r] += c * wp[r]
    return out


def singularity_at(loop: SeifertLoop, N: int, m: int) -> Optional[SingularityDatum]:
    """Principal part of I_B at pi i m^2/(2P), or None when the point is regular."""
    order = pole_order(loop, m)
    if order < 1:
        return None
    num, den = _h_series_factory(loop, N)
    y0 = TwoPiIM(m)
    terms = order + 1
    v, coeffs = laurent_series(num, den, y0, terms, den_valuation=loop.n - 1)
    if v >= 0:
        return None
    omega = mp.mpc(0, mp.pi * m * m / (2 * loop.P))
    # y(omega + u) - y0 = y0 (sqrt(1 + u/omega) - 1), continued from Re xi > 0 so y(omega) = 2 pi i m
    y0v = y0.value()
    binom_half = [mp.binomial(mp.mpf(1) / 2, r) for r in range(terms + 2)]
    h_of_u = [mp.mpc(0)] + [y0v * binom_half[r] / omega ** r for r in range(1, terms + 2)]
    principal_u = _compose_negative_powers(coeffs, v, h_of_u, -v)
    coefficients = tuple(principal_u[j] for j in range(1, -v + 1))
    tiny = mp.ldexp(mp.mpf(1), -(3 * mp.mp.prec) // 4) * max([abs(c) for c in coeffs] + [mp.mpf(1)])
    if all(abs(c) <= tiny for c in coefficients):
        return None
    top = max((j for j, c in enumerate(coefficients, 1) if abs(c) > tiny))
    return SingularityDatum(m=m, omega=omega,
                            principal=LaurentPart(center=omega, coefficients=coefficients[:top], order=top),
                            y_order=order)


def singularities(loop: SeifertLoop, N: int, m_max: int) -> list:
    """All singular points of I_B with 1 <= m <= m_max; accidental zero residues count as absent."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    out = []
    for m in range(1, m_max + 1):
        datum = singularity_at(loop, N, m)
        if datum is not None:
            out.append(datum)
    return out


# ---------------------------------------------------------------------------
# directional and median sums

def _f_growth(loop: SeifertLoop, N: int) -> mp.mpf:
    """|F_N(y)| <= amp * exp(growth * |Re y|) once |Re y| >= 2."""
    return (N + sum(mp.mpf(1) / p for p in loop.ps) - (loop.n - 1)) / 2


def _line_decay(loop: SeifertLoop, N: int, kappa, direction) -> GaussianDecay:
    """Envelope of exp(kappa g(y)) F_N(y) along y = s * direction, s >= 0."""
    P = loop.P
    rate = -mp.re(1j * kappa * direction ** 2) / (8 * mp.pi * P)
    cos_part = abs(mp.re(direction))
    growth = max(_f_growth(loop, N), 0) * cos_part
    if cos_part == 0:
        raise ContourError("use the vertical contour for the imaginary axis")
    start = 2 / cos_part
    amp = 1 / (1 - mp.exp(-2)) ** (loop.n - 1)
    return GaussianDecay(amplitude=amp, rate=rate, drift=growth, start=start)


def _pole_spacing(limit):
    """Local length scale: a fraction of the distance to the nearest point of 2 pi i Z."""
    two_pi = 2 * mp.pi

    def spacing(y):
        m = mp.nint(mp.im(y) / two_pi)
        d = abs(y - mp.mpc(0, two_pi * m))
        if m == 0:
            return limit
        return min(limit, max(d / 2, mp.mpf(1) / 64))

    return spacing


def directional_sum(loop: SeifertLoop, N: int, kappa, theta, delta=DEFAULT_DELTA, tol=None) -> mp.mpc:
    """Borel sum of Z^pert in the direction theta, as E(kappa) times a line integral in the y-plane."""
    kappa = mp.mpc(kappa)
    theta = mp.mpf(theta)
    tol = default_tolerance() if tol is None else mp.mpf(tol)
    phi = mp.pi / 4 + theta / 2
    direction = mp.expj(phi)
    if abs(mp.cos(mp.arg(kappa) + theta)) == 0 or mp.cos(mp.arg(kappa) + theta) <= 0:
        raise ContourError("kappa lies outside the convergence sector |arg kappa + theta| < pi/2")
    nearest = 2 * mp.pi * abs(mp.cos(phi))
    guard = mp.pi * mp.sin(mp.mpf(delta) / 2)
    if nearest < guard:
        raise ContourError(f"line at angle {mp.nstr(phi, 6)} passes within {mp.nstr(nearest, 3)} of 2 pi i Z")
    decay = _line_decay(loop, N, kappa, direction)
    contour = line(0, direction, decay, decay)

    def f(y):
        return mp.exp(1j * kappa * y * y / (8 * mp.pi * loop.P)) * F_eval(loop, N, y)

    scale = abs(e_prefactor(loop, N, kappa))
    value = contour_integrate(f, contour, tol / max(scale, mp.mpf(1)),
                              spacing=_pole_spacing(mp.mpf(2)), rule=QUADRATURE_RULE)
    return e_prefactor(loop, N, kappa) * value


def effective_delta(kappa, delta=DEFAULT_DELTA) -> mp.mpf:
    """Largest tilt not above ``delta`` keeping both lateral sums inside their sectors.

    The lateral directions pi/2 +- delta need -pi + delta < arg kappa < -delta;
    the tilt is shrunk to half the available margin when kappa is close to an edge.
    """
    arg = mp.arg(mp.mpc(kappa))
    if not -mp.pi < arg < 0:
        raise ContourError("lateral sums need Im kappa < 0")
    return min(mp.mpf(delta), -arg / 2, (mp.pi + arg) / 2)


def lateral_sums(loop: SeifertLoop, N: int, kappa, delta=DEFAULT_DELTA, tol=None):
    """(S^+, S^-) = Borel sums in the directions pi/2 + delta and pi/2 - delta."""
    kappa = mp.mpc(kappa)
    if mp.im(kappa) >= 0:
        raise ContourError("lateral sums need Im kappa < 0")
    d = effective_delta(kappa, delta)
    plus = directional_sum(loop, N, kappa, mp.pi / 2 + d, delta=d, tol=tol)
    minus = directional_sum(loop, N, kappa, mp.pi / 2 - d, delta=d, tol=tol)
    return plus, minus


def vertical_sum(loop: SeifertLoop, N: int, kappa, eps=1, tol=None) -> mp.mpc:
    """E(kappa) times the integral over eps + iR (upward) of exp(kappa g(y)) F_N(y)."""
    kappa = mp.mpc(kappa)
    eps = mp.mpf(eps)
    if mp.im(kappa) >= 0:
        raise ContourError("the vertical contour needs Im kappa < 0")
    if not 0 < eps:
        raise ContourError("eps must be positive")
    tol = default_tolerance() if tol is None else mp.mpf(tol)
    P, n = loop.P, loop.n
    # |exp(kappa g)| = exp((-Im k (eps^2 - s^2) - 2 Re k eps s)/(8 pi P)) on y = eps + i s
    rate = -mp.im(kappa) / (8 * mp.pi * P)
    drift = 2 * abs(mp.re(kappa)) * eps / (8 * mp.pi * P)
    bound_f = 2 * mp.cosh(N * eps / 2) * mp.fprod(2 * mp.cosh(eps / (2 * p)) for p in loop.ps) \
        / (2 * mp.sinh(eps / 2)) ** (n - 1)
    amp = bound_f * mp.exp(-mp.im(kappa) * eps * eps / (8 * mp.pi * P))
    decay = GaussianDecay(amplitude=amp, rate=rate, drift=drift)

    def f(y):
        return mp.exp(1j * kappa * y * y / (8 * mp.pi * P)) * F_eval(loop, N, y)

    contour = line(mp.mpc(eps, 0), mp.mpc(0, 1), decay, decay)
    scale = abs(e_prefactor(loop, N, kappa))
    value = contour_integrate(f, contour, tol / max(scale, mp.mpf(1)), spacing=_pole_spacing(mp.mpf(2)),
                              rule=QUADRATURE_RULE)
    return e_prefactor(loop, N, kappa) * value


@dataclass(frozen=True)
class MedianSum:
    via_average: mp.mpc
    via_vertical: mp.mpc
    delta: mp.mpf
    eps: mp.mpf


def median_sum(loop: SeifertLoop, N: int, kappa, delta=DEFAULT_DELTA, eps=1, tol=None) -> MedianSum:
    """The median sum two ways: the average of the lateral sums and one vertical line integral."""
    kappa = mp.mpc(kappa)
    if mp.im(kappa) >= 0:
        raise ContourError("the median sum is taken for Im kappa < 0")
    plus, minus = lateral_sums(loop, N, kappa, delta, tol)
    vertical = vertical_sum(loop, N, kappa, eps, tol)
    return MedianSum(via_average=(plus + minus) / 2, via_vertical=vertical,
                     delta=effective_delta(kappa, delta), eps=mp.mpf(eps))


def phi_over_g0(loop: SeifertLoop, N: int, kappa) -> mp.mpc:
    """Phi(e^(2 pi i/kappa); N) / G_0(kappa), with log q = 2 pi i / kappa."""
    kappa = mp.mpc(kappa)
    value, _ = phi_eval(loop, N, 2j * mp.pi / kappa)
    return value / g0(kappa)


def median_report(loop: SeifertLoop, N: int, kappa, tol=mp.mpf("1e-6"), agree_tol=mp.mpf("1e-8"),
                  delta=DEFAULT_DELTA, eps=1) -> VerificationReport:
    med = median_sum(loop, N, kappa, delta, eps)
    target = phi_over_g0(loop, N, kappa)
    residual = abs(med.via_average - target)
    split = abs(med.via_average - med.via_vertical)
    return VerificationReport(
        claim="median-sum", passed=bool(residual < tol and split < agree_tol),
        lhs=med.via_average, rhs=target, residual=residual, tolerance=mp.mpf(tol),
        details={"kappa": mp.mpc(kappa), "N": N, "loop": str(loop), "via_vertical": med.via_vertical,
                 "average_vs_vertical": split, "agree_tolerance": mp.mpf(agree_tol),
                 "delta": med.delta, "eps": med.eps})


# ---------------------------------------------------------------------------
# Stokes jump

def _laplace_of_principal(datum: SingularityDatum, kappa) -> mp.mpc:
    """2 pi i Res_{xi = omega} exp(-kappa xi) (principal part of I_B)."""
    total = mp.mpc(0)
    for j, c in enumerate(datum.principal.coefficients, 1):
        total += c * (-kappa) ** (j - 1) / mp.factorial(j - 1)
    return 2j * mp.pi * mp.exp(-kappa * datum.omega) * total


def _residue_tail_bound(loop: SeifertLoop, N: int, kappa, m_from: int, terms: int = 400) -> mp.mpf:
    """Bound on sum_{m >= m_from} |2 pi i Res_{y=2 pi i m} 2 exp(kappa g) F_N| via Cauchy estimates.

    Each residue is bounded by r * max |2 exp(kappa g) F_N| on the circle |y - 2 pi i m| = r,
    r = 1/2, with the maximum bounded termwise: |exp(kappa g)| by its exact value at the
    nearest point of the circle plus the Gaussian variation, and |F_N| by a constant
    depending only on r.
    """
    P, n = loop.P, loop.n
    r = mp.mpf(1) / 2
    # |2 sinh(w)| <= 2 cosh(Re w) and |2 sinh(y/2)| >= 2 |sin(Im(y)/2)| ... use the circle minimum
    lower = mp.inf
    for k in range(16):
        z = mp.mpc(0, 2 * mp.pi) + r * mp.expjpi(mp.mpf(k) / 8)
        lower = min(lower, abs(2 * mp.sinh(z / 2)))
    lower = lower / 2  # safety factor for points between the samples
    upper_num = 2 * mp.cosh(N * r / 2) * mp.fprod(2 * mp.cosh(r / (2 * p)) for p in loop.ps)
    upper_num *= mp.e ** (N * r)  # |2 sinh| growth with Im part is bounded by 2 cosh(Re), times slack
    f_bound = upper_num / lower ** (n - 1)
    total = mp.mpf(0)
    for m in range(m_from, m_from + terms):
        if pole_order(loop, m) < 1:
            continue
        y0 = mp.mpc(0, 2 * mp.pi * m)
        # |exp(kappa g(y0 + h))| <= |exp(kappa g(y0))| * exp(|kappa| (2|y0| r + r^2)/(8 pi P))
        g_mag = mp.exp(mp.re(1j * kappa * y0 * y0) / (8 * mp.pi * P)) \
            * mp.exp(abs(kappa) * (2 * abs(y0) * r + r * r) / (8 * mp.pi * P))
        term = 2 * mp.pi * r * 2 * g_mag * f_bound
        total += term
        if term < mp.ldexp(total, -mp.mp.prec) and m > m_from + 10:
            break
    return total


@dataclass(frozen=True)
class StokesJump:
    lhs: mp.mpc
    rhs: mp.mpc
    truncation_bound: mp.mpf
    singular_points: tuple
    higher_order: bool
    delta: mp.mpf

    def report(self, tol=mp.mpf("1e-6")) -> VerificationReport:
        residual = abs(self.lhs - self.rhs)
        tolerance = mp.mpf(tol) + self.truncation_bound
        return VerificationReport(
            claim="stokes-jump", passed=bool(residual < tolerance), lhs=self.lhs, rhs=self.rhs,
            residual=residual, tolerance=tolerance,
            details={"truncation_bound": self.truncation_bound, "singular_points": list(self.singular_points),
                     "higher_order_poles": self.higher_order, "delta": self.delta})


def stokes_jump(loop: SeifertLoop, N: int, kappa, m_max: int, delta=DEFAULT_DELTA, tol=None) -> StokesJump:
    """S^- - S^+ by quadrature against E(kappa) sum_omega exp(-kappa omega) (Laplace image of the principal part)."""
    kappa = mp.mpc(kappa)
    if mp.im(kappa) >= 0:
        raise ContourError("the Stokes jump is compared for Im kappa < 0")
    plus, minus = lateral_sums(loop, N, kappa, delta, tol)
    data = singularities(loop, N, m_max)
    total = mp.fsum(_laplace_of_principal(d, kappa) for d in data)
    pref = e_prefactor(loop, N, kappa)
    bound = abs(pref) * _residue_tail_bound(loop, N, kappa, m_max + 1) if loop.n > 2 else mp.mpf(0)
    return StokesJump(lhs=minus - plus, rhs=pref * total, truncation_bound=bound,
                      singular_points=tuple(d.m for d in data),
                      higher_order=any(d.principal.order > 1 for d in data),
                      delta=effective_delta(kappa, delta))


# ---------------------------------------------------------------------------
# integral plus residues

def _blr_factories(loop: SeifertLoop, N: int, K: int):
    num_f = F_numerator_series(loop, N)
    den_f = F_denominator_series(loop)
    P = loop.P

    def num(center, terms):
        y0 = center.value()
        # exp(K g(y0 + h)) = exp(K g(y0)) exp(i K (2 y0 h + h^2)/(8 pi P))
        c = 1j * K / (8 * mp.pi * P)
        poly = [mp.mpc(0), 2 * c * y0, c] + [mp.mpc(0)] * max(terms - 3, 0)
        gauss = [mp.exp(c * y0 * y0) * v for v in s_exp(poly[:terms], terms)]
        return s_mul(gauss, num_f(center, terms), terms)

    def den(center, terms):
        # 1 - exp(-K y) at y0 in 2 pi i Z: exactly -sum_{k>=1} (-K h)^k / k!
        series = [mp.mpc(0)] + [-(mp.mpf(-K) ** k) / mp.factorial(k) for k in range(1, terms)]
        return s_mul(den_f(center, terms), series, terms)

    return num, den


def blr_residue(loop: SeifertLoop, N: int, K: int, m: int) -> LaurentPart:
    """Principal part of exp(K g) F_N / (1 - exp(-K y)) at y = 2 pi i m."""
    num, den = _blr_factories(loop, N, K)
    dv = loop.n  # F_N denominator order n - 1 plus the simple zero of 1 - exp(-K y)
    v, coeffs = laurent_series(num, den, TwoPiIM(m), dv + 1, den_valuation=dv)
    order = max(0, -v)
    return LaurentPart(center=TwoPiIM(m), coefficients=tuple(coeffs[order - j] for j in range(1, order + 1)),
                       order=order)


@dataclass(frozen=True)
class BLRDecomposition:
    z_triv: mp.mpc
    residue_sum: mp.mpc
    total: mp.mpc
    z_norm: mp.mpc
    residues: tuple = field(default_factory=tuple)

    def report(self, tol=mp.mpf("1e-20"), K=None) -> VerificationReport:
        residual = abs(self.total - self.z_norm)
        return VerificationReport(claim="blr-decomposition", passed=bool(residual < tol), lhs=self.total,
                                  rhs=self.z_norm, residual=residual, tolerance=mp.mpf(tol),
                                  details={"K": K, "z_triv": self.z_triv, "residue_sum": self.residue_sum})


def blr_decompose(loop: SeifertLoop, N: int, K: int, tol=None) -> BLRDecomposition:
    """Z(K;N) as the trivial-connection integral plus residues at y = 2 pi i m, m = 1..2P-1."""
    _check_K(K)
    z_triv = directional_sum(loop, N, K, 0, tol=quadrature_tolerance() if tol is None else tol)
    residues = []
    for m in range(1, 2 * loop.P):
        part = blr_residue(loop, N, K, m)
        residues.append(part.residue)
    residue_sum = -2j * mp.pi * e_prefactor(loop, N, K) * mp.fsum(residues)
    return BLRDecomposition(z_triv=z_triv, residue_sum=residue_sum, total=z_triv + residue_sum,
                            z_norm=z_norm(loop, K, N), residues=tuple(residues))


# ---------------------------------------------------------------------------
# Watson consistency

def _live_orders(series: PerturbativeSeries) -> list:
    """Indices m >= 1 whose coefficient is not zero to working precision.

    Some loops (the n = 2 ones) have every even coefficient vanishing; those
    orders carry no information about the truncation error.
    """
    live = []
    for m in range(1, series.order + 1):
        size = mp.fsum(abs(series.e[j] * series.i[m - j]) for j in range(m + 1))
        if abs(series.a[m]) > mp.ldexp(size, -mp.mp.prec // 2):
            live.append(m)
    return live


def optimal_order(series: PerturbativeSeries, kappa) -> int:
    """Truncation order M: the partial sum runs through the smallest nonvanishing term.

    When that term is the last one available (a convergent series) the sum
    stops one order earlier so that an omitted term remains to bound the error.
    """
    live = _live_orders(series)
    if not live:
        return series.order
    best = min(live, key=lambda m: abs(series.term(m, kappa)))
    return best if best != live[-1] else best - 1


def first_omitted(series: PerturbativeSeries, M: int) -> int:
    """Index of the first nonvanishing coefficient beyond order M."""
    for m in _live_orders(series):
        if m > M:
            return m
    raise ValueError("no nonvanishing coefficient beyond the truncation order; raise max_order")


def watson_check(loop: SeifertLoop, N: int, kappa, M: Optional[int] = None, max_order: int = 40,
                 tol=None) -> VerificationReport:
    """|S_0 Z^pert(kappa) - sum_{m<=M} a_m kappa^(-m-1/2)| <= 2 |a_j kappa^(-j-1/2)| + tol, j the first
    nonvanishing order beyond M and tol the quadrature target."""
    kappa = mp.mpc(kappa)
    series = z_pert(loop, N, max_order)
    if M is None:
        M = optimal_order(series, kappa)
    tol = default_tolerance() if tol is None else mp.mpf(tol)
    exact = directional_sum(loop, N, kappa, 0, tol=tol)
    partial = series.partial_sum(kappa, M)
    omitted = first_omitted(series, M)
    first_term = abs(series.term(omitted, kappa))
    residual = abs(exact - partial)
    # a convergent series (entire Borel transform) can drop below the quadrature error
    tolerance = 2 * first_term + tol
    return VerificationReport(claim="watson", passed=bool(residual <= tolerance), lhs=exact,
                              rhs=partial, residual=residual, tolerance=tolerance,
                              details={"kappa": kappa, "M": M, "first_omitted_order": omitted, "N": N,
                                       "loop": str(loop)})
