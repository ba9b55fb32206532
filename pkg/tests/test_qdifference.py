import random
from fractions import Fraction
from functools import reduce

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seifert_wrt.numerics import QSeries
from seifert_wrt.qdifference import (CutoffUnderflow, QDiffOperator, apply_operator, c_specialized_series,
                                     classical_limit, ctilde_ratio_check, d_series, degenerate_operator,
                                     l_hat, m_hat, op_mul, q_scalar, r_series, structure_series,
                                     third_order_operator, verify_degenerate_first_order,
                                     verify_degenerate_second_order, verify_inhomogeneous,
                                     verify_third_order, verify_third_order_numeric)
from seifert_wrt.seifert_core import make_loop
from seifert_wrt.wrt_qseries import phi_series

POINCARE = make_loop("2/1,3/1,5/-4")


def phi_family(loop):
    return lambda N, cutoff: phi_series(loop, N, max(Fraction(cutoff), Fraction(0))).series


def test_commutation_relation_on_family():
    fam = phi_family(POINCARE)
    cutoff = Fraction(12)
    lm = apply_operator(op_mul(l_hat(), m_hat()), fam, 2, cutoff)
    ml = apply_operator(op_mul(q_scalar(Fraction(1, 2)), op_mul(m_hat(), l_hat())), fam, 2, cutoff)
    direct = fam(3, cutoff - Fraction(3, 2)).shift(Fraction(3, 2))
    assert lm == ml == direct.truncate(cutoff)


def test_m_hat_multiplies_by_q_power():
    fam = phi_family(POINCARE)
    got = apply_operator(m_hat(), fam, 3, 10)
    assert got == fam(3, Fraction(17, 2)).shift(Fraction(3, 2)).truncate(10)


def test_linearity():
    fam = phi_family(POINCARE)
    a = op_mul(m_hat(2), l_hat())
    b = l_hat(2)
    combined = apply_operator(a.scale(Fraction(2, 3)) + b.scale(-5), fam, 1, 8)
    separate = apply_operator(a, fam, 1, 8).scale(Fraction(2, 3)) + apply_operator(b, fam, 1, 8).scale(-5)
    assert combined == separate


def test_cutoff_underflow_is_reported():
    def short_family(N, cutoff):
        return QSeries(120, {0: 1}, 1)

    with pytest.raises(CutoffUnderflow):
        apply_operator(l_hat(), short_family, 1, 5)


letters = st.sampled_from(["m", "m-", "l", "q", "m2"])


def letter_op(name):
    return {"m": m_hat(), "m-": m_hat(-1), "l": l_hat(), "q": q_scalar(Fraction(1, 3), 2),
            "m2": m_hat(Fraction(1, 2))}[name]


@settings(max_examples=40, deadline=None)
@given(st.lists(letters, min_size=2, max_size=7), st.randoms(use_true_random=False))
def test_normal_ordering_is_associative(word, rnd):
    ops = [letter_op(w) for w in word]
    left = reduce(op_mul, ops)
    right = reduce(lambda acc, op: op_mul(op, acc), reversed(ops))
    split = rnd.randint(1, len(ops) - 1)
    middle = op_mul(reduce(op_mul, ops[:split]), reduce(op_mul, ops[split:]))
    assert left == right == middle


def test_operator_json_roundtrip():
    for op in (third_order_operator(30), degenerate_operator(1, "derived"), op_mul(l_hat(2), m_hat(-3))):
        assert QDiffOperator.from_json(op.to_json()) == op


def test_structure_series_pieces():
    st_ = structure_series(POINCARE, 1, 6)
    assert st_.d_ratio_exponent == -30 * 2
    assert d_series(POINCARE, 3, 20).shift(0) == d_series(POINCARE, 1, 80).shift(st_.d_ratio_exponent).truncate(20)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_r_sum_is_specialized_c(N):
    h = Fraction(N + 1, 2)
    r = r_series(POINCARE, h, 40) + r_series(POINCARE, -h, 40)
    assert r == c_specialized_series(POINCARE, N, 40)


def test_inhomogeneous_example():
    assert verify_inhomogeneous(POINCARE, 1, 4)
    assert verify_third_order(POINCARE, 1, 4)
    assert verify_third_order(make_loop("2/-9,3/11,7/6"), 2, Fraction(168, 42))


def test_inhomogeneous_negative_control():
    real = phi_family(POINCARE)

    def tampered(N, cutoff):
        s = real(N, cutoff)
        if N != 1:
            return s
        terms = dict(s.terms)
        e = next(iter(terms))
        terms[e] += 1
        return QSeries(s.lattice_denominator, terms, s.cutoff)

    report = verify_inhomogeneous(POINCARE, 1, 4, family=tampered)
    assert not report.passed
    assert report.details["nonzero_residual_terms"] > 0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_degenerate_first_order(k):
    assert verify_degenerate_first_order(k, 5)


def test_degenerate_second_order_forms():
    assert verify_degenerate_second_order(1, 1, form="derived")
    assert verify_degenerate_second_order(1, 2, form="derived")
    assert not verify_degenerate_second_order(1, 1, form="literal")


def test_ctilde_ratio_numeric():
    assert ctilde_ratio_check(POINCARE, 1)
    assert ctilde_ratio_check(POINCARE, 2)


def test_third_order_ratio_form_numeric():
    assert verify_third_order_numeric(POINCARE, 1)


def test_classical_limit_poincare():
    poly, factors, report = classical_limit(loop=POINCARE)
    assert report.passed
    assert poly.terms == {(0, 3): 1, (0, 2): -1, (-60, 1): -1, (-60, 0): 1}
    assert poly.evaluate(2, Fraction(1, 2 ** 30)) == 0
    assert poly.evaluate(Fraction(5, 3), 1) == 0


@pytest.mark.parametrize("k", [1, 2, 4])
def test_classical_limit_degenerate(k):
    poly, _, report = classical_limit(k=k)
    w = 2 * (2 * k + 1)
    assert report.passed
    assert poly.terms == {(0, 2): 1, (0, 1): -1, (-w, 1): 1, (-w, 0): -1}


@pytest.mark.parametrize("seed", range(20))
def test_classical_limit_random_P(seed):
    P = random.Random(seed).randint(2, 400)
    from seifert_wrt.qdifference import classical_polynomial, LaurentPoly2
    poly = classical_polynomial(third_order_operator(P))
    f = [LaurentPoly2({(0, 1): 1, (0, 0): -1}), LaurentPoly2({(0, 1): 1, (-P, 0): -1}),
         LaurentPoly2({(0, 1): 1, (-P, 0): 1})]
    assert poly == f[0] * f[1] * f[2]
