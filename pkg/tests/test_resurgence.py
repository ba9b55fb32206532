from fractions import Fraction

import mpmath as mp
import pytest

from seifert_wrt.exact_sums import z_norm
from seifert_wrt.resurgence import (DEFAULT_DELTA, ContourError, blr_decompose, blr_residue, borel_convolution_coefficients,
                                    borel_I_closed, cauchy_product, directional_sum, e_prefactor, e_series,
                                    effective_delta, i_pert, lateral_sums, median_sum, phi_over_g0,
                                    singularities, singularity_at, stokes_jump, vertical_sum, watson_check,
                                    z_pert)
from seifert_wrt.seifert_core import F_eval, F_taylor, c_const, make_loop
from seifert_wrt.numerics.series import TwoPiIM

POINCARE = make_loop("2/1,3/1,5/-4")
TREFOIL = make_loop("2/1,3/-1")
BRIESKORN_237 = make_loop("2/-9,3/11,7/6")
FOUR_FIBERS = make_loop("2/-11,3/7,5/8,7/11")


def rel(a, b):
    return abs(a - b) / max(abs(b), mp.mpf(1))


def trivial_integral_by_quadrature(loop, N, kappa, prec=128):
    """I(kappa) over R e^(i pi/4) with mpmath's own adaptive quadrature."""
    d = mp.expjpi(mp.mpf(1) / 4)
    with mp.workprec(prec):
        return mp.quad(lambda s: mp.exp(1j * kappa * (d * s) ** 2 / (8 * mp.pi * loop.P)) * F_eval(loop, N, d * s) * d,
                       [-mp.inf, -20, 0, 20, mp.inf])


# -- perturbative series -------------------------------------------------------

def test_i_pert_prefix_and_parity():
    a, b = i_pert(POINCARE, 1, 6), i_pert(POINCARE, 1, 8)
    assert a == b[:7]
    assert a[0] == 0
    taylor = F_taylor(POINCARE, 1, 16)
    assert all(taylor[k] == 0 for k in range(1, 17, 2))


def test_i_pert_leading_term_against_quadrature():
    kappa = 50
    integral = trivial_integral_by_quadrature(POINCARE, 1, kappa)
    coeffs = i_pert(POINCARE, 1, 3)
    lead = coeffs[1] * mp.mpf(kappa) ** mp.mpf(-1.5)
    omitted = abs(coeffs[2]) * mp.mpf(kappa) ** mp.mpf(-2.5)
    assert abs(integral - lead) < 2 * omitted
    assert abs(coeffs[1] - mp.mpf(1) / 30 * mp.expjpi(mp.mpf(1) / 4) * 1j * mp.gamma(1.5) * (240 * mp.pi) ** 1.5) \
        < mp.mpf(2) ** -200


def test_e_series_first_coefficient():
    e = e_series(POINCARE, 2, 3)
    c = c_const(POINCARE, 2)
    B = -mp.expjpi(mp.mpf(3) / 4) / (4 * mp.sqrt(30))
    assert abs(e[1] - B / (2j * mp.pi) * (-1j * mp.pi * (mp.mpf(c.numerator) / c.denominator) / 2)) < mp.mpf(2) ** -240


@pytest.mark.parametrize("M", [0, 5, 12])
def test_cauchy_factorization(M):
    z = z_pert(POINCARE, 1, M)
    for m in range(M + 1):
        assert z.a[m] == mp.fsum(z.e[j] * z.i[m - j] for j in range(m + 1))
    assert list(z.a) == cauchy_product(list(z.e), list(z.i))


def test_borel_convolution_matches_coefficient_map():
    z = z_pert(POINCARE, 2, 10)
    for x, y in zip(borel_convolution_coefficients(z), z.borel_coefficients()):
        assert abs(x - y) < mp.mpf(2) ** -200 * (1 + abs(y))


def test_z_triv_asymptotics_against_quadrature():
    kappa = 50
    z_triv = e_prefactor(POINCARE, 1, kappa) * trivial_integral_by_quadrature(POINCARE, 1, kappa)
    z = z_pert(POINCARE, 1, 8)
    assert abs(z_triv - z.partial_sum(kappa, 6)) < 2 * abs(z.term(7, kappa))
    assert abs(directional_sum(POINCARE, 1, kappa, 0) - z_triv) < mp.mpf(10) ** -30


# -- Borel transform and singularities -------------------------------------------

SAMPLE_XI = [mp.mpc(0.3, 0.1), mp.mpc(-0.2, 0.5), mp.mpc(1, -2), mp.mpc(-0.05, -0.01), mp.mpc(0.01, 0),
             mp.mpc(2, 0.3), mp.mpc(-1, 0.2), mp.mpc(0.4, -0.4), mp.mpc(-3, -1), mp.mpc(0.7, 0.9)]


@pytest.mark.parametrize("xi", SAMPLE_XI)
def test_borel_oddness(xi):
    y = mp.sqrt(8 * mp.pi * 30) * mp.expjpi(mp.mpf(1) / 4)
    value = borel_I_closed(POINCARE, 1, xi)
    # F_N(y)/y is odd, so the two halves agree; xi^(1/2) has its cut on the positive imaginary axis
    arg = mp.arg(xi)
    arg = arg - 2 * mp.pi if arg > mp.pi / 2 else arg
    root = y * mp.sqrt(abs(xi)) * mp.expj(arg / 2)
    half = 4j * mp.pi * 30 * F_eval(POINCARE, 1, root) / root
    assert rel(value, 2 * half) < mp.mpf(2) ** -200


def test_borel_taylor_coefficients():
    coeffs = z_pert(POINCARE, 1, 30).i
    for xi in (mp.mpc(0.004, 0.001), mp.mpc(-0.003, -0.002)):
        series = mp.fsum(c / mp.gamma(m + mp.mpf(1) / 2) * mp.sqrt(xi) ** (2 * m - 1) for m, c in enumerate(coeffs))
        assert rel(borel_I_closed(POINCARE, 1, xi), series) < mp.mpf(10) ** -25


def test_borel_branch_on_positive_axis():
    tiny = mp.mpf(2) ** -200
    above = borel_I_closed(POINCARE, 1, mp.mpc(0.5, tiny))
    below = borel_I_closed(POINCARE, 1, mp.mpc(0.5, -tiny))
    assert abs(above - below) < mp.mpf(2) ** -150


def test_borel_rejects_singular_point():
    with pytest.raises(ValueError):
        borel_I_closed(POINCARE, 1, mp.mpc(0, mp.pi / 60))


def test_singularities_poincare():
    data = singularities(POINCARE, 1, 31)
    assert [d.m for d in data] == [1, 7, 11, 13, 17, 19, 23, 29, 31]
    assert all(d.principal.order == 1 and d.y_order == 1 for d in data)
    assert abs(data[0].omega - mp.mpc(0, mp.pi / 60)) < mp.mpf(2) ** -240


def test_singularities_empty_for_two_fibers():
    assert singularities(TREFOIL, 1, 40) == []


def test_principal_residue_matches_y_plane():
    # near omega, xi - omega ~ (y0 / (4 pi i P)) (y - y0), so Res_xi = Res_y(8 pi i P F/y) * y0/(4 pi i P)
    from seifert_wrt.numerics.series import laurent_principal
    from seifert_wrt.seifert_core import F_denominator_series, F_numerator_series
    d = singularity_at(POINCARE, 1, 1)
    part = laurent_principal(F_numerator_series(POINCARE, 1), F_denominator_series(POINCARE), TwoPiIM(1), 2)
    y0 = TwoPiIM(1).value()
    expected = 8j * mp.pi * 30 * part.residue / y0 * y0 / (4j * mp.pi * 30)
    assert rel(d.residue, expected) < mp.mpf(2) ** -200


def test_four_fiber_double_pole():
    d1 = singularity_at(FOUR_FIBERS, 1, 1)
    assert d1.y_order == 2 and d1.principal.order == 2
    assert singularity_at(FOUR_FIBERS, 1, 2).principal.order == 1


# -- directional, lateral and median sums -------------------------------------------

def test_sector_contract():
    with pytest.raises(ContourError):
        directional_sum(POINCARE, 1, mp.mpc(6, -2), mp.pi)
    kappa = mp.mpc(6, -2)
    for theta in (mp.pi / 2 + 0.2, mp.pi / 2 - 0.2):
        assert mp.isfinite(abs(directional_sum(POINCARE, 1, kappa, theta)))


def test_effective_delta():
    assert effective_delta(mp.mpc(6, -6)) == mp.mpf(DEFAULT_DELTA)
    # arg(6 - 2i) / 2 is about 0.16, so the tilt is shrunk below the default
    assert abs(effective_delta(mp.mpc(6, -2)) + mp.arg(mp.mpc(6, -2)) / 2) < mp.mpf(10) ** -70
    assert effective_delta(mp.mpc(10, -1)) < mp.mpf(0.2)
    with pytest.raises(ContourError):
        effective_delta(mp.mpc(1, 1))


def test_vertical_contour_deformation():
    kappa = mp.mpc(6, -2)
    values = [vertical_sum(POINCARE, 1, kappa, eps=e) for e in (mp.mpf(1) / 2, 1, mp.mpf(3) / 2)]
    assert abs(values[0] - values[1]) < mp.mpf(10) ** -15
    assert abs(values[2] - values[1]) < mp.mpf(10) ** -15


def test_median_rejects_upper_half_plane():
    with pytest.raises(ContourError):
        median_sum(POINCARE, 1, mp.mpc(6, 2))


@pytest.mark.parametrize("delta", [0.1, 0.2, 0.3])
def test_median_delta_independence_trefoil(delta):
    kappa = mp.mpc(6, -2)
    med = median_sum(TREFOIL, 1, kappa, delta=delta)
    assert abs(med.via_average - med.via_vertical) < mp.mpf(10) ** -15
    assert abs(med.via_average - phi_over_g0(TREFOIL, 1, kappa)) < mp.mpf(10) ** -15


@pytest.mark.parametrize("loop", [POINCARE, BRIESKORN_237], ids=["235", "237"])
@pytest.mark.parametrize("N", [1, 2])
@pytest.mark.parametrize("kappa", [mp.mpc(6, -2), mp.mpc(4, -3), mp.mpc(10, -1), mp.mpc(3, -5), mp.mpc(-2, -4)])
def test_vertical_line_reproduces_phi(loop, N, kappa):
    assert abs(vertical_sum(loop, N, kappa) - phi_over_g0(loop, N, kappa)) < mp.mpf(10) ** -12


# -- Stokes jump ----------------------------------------------------------------------

def test_stokes_trefoil_vanishes():
    jump = stokes_jump(TREFOIL, 1, mp.mpc(6, -2), 7)
    assert abs(jump.lhs) < mp.mpf(10) ** -10 and jump.rhs == 0 and jump.singular_points == ()


def test_stokes_linear_consistency():
    kappa = mp.mpc(4, -3)
    plus, minus = lateral_sums(TREFOIL, 2, kappa)
    med = (plus + minus) / 2
    assert abs(med + (minus - plus) / 2 - minus) < mp.mpf(2) ** -200
    assert abs(med - (minus - plus) / 2 - plus) < mp.mpf(2) ** -200


# -- integral plus residues ---------------------------------------------------------------

def residue_oracle(loop, N, K, m, j, radius=mp.mpf(1) / 4, nodes=128):
    """c_{-j} by the trapezoid rule on a circle (exponentially accurate for analytic integrands)."""
    y0 = mp.mpc(0, 2 * mp.pi * m)
    total = mp.mpc(0)
    for k in range(nodes):
        h = radius * mp.expjpi(mp.mpf(2 * k) / nodes)
        y = y0 + h
        f = mp.exp(1j * K * y * y / (8 * mp.pi * loop.P)) * F_eval(loop, N, y) / (1 - mp.exp(-K * y))
        total += f * h ** j
    return total / nodes


def test_blr_residue_double_pole_against_oracle():
    part = blr_residue(POINCARE, 1, 5, 1)
    assert part.order == 2
    for j in (1, 2):
        assert rel(part.coefficients[j - 1], residue_oracle(POINCARE, 1, 5, 1, j)) < mp.mpf(10) ** -30


def test_blr_trefoil():
    dec = blr_decompose(TREFOIL, 1, 5)
    # F_N is entire for two fibers, so every residue comes from the zeros of 1 - exp(-K y) alone
    assert all(blr_residue(TREFOIL, 1, 5, m).order <= 1 for m in range(1, 12))
    assert abs(dec.total - z_norm(TREFOIL, 5, 1)) < mp.mpf(10) ** -20


def test_blr_poincare_level_five():
    dec = blr_decompose(POINCARE, 1, 5)
    assert dec.report().passed
    assert abs(dec.z_triv - directional_sum(POINCARE, 1, 5, 0)) < mp.mpf(10) ** -18


# -- Watson ----------------------------------------------------------------------------

@pytest.mark.parametrize("loop", [POINCARE, TREFOIL], ids=["235", "trefoil"])
@pytest.mark.parametrize("N", [1, 2])
@pytest.mark.parametrize("kappa", [50, 100, 200])
def test_watson(loop, N, kappa):
    assert watson_check(loop, N, kappa).passed
