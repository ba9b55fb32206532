"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line."""

import random
from math import gcd
from fractions import Fraction

import mpmath as mp
import pytest

from acceptance_log import record
from oracles import eps_sum_brute
from seifert_wrt.exact_sums import eps_power_sum, factor_k, gauss_G, reciprocity, vanishing_check
from seifert_wrt.qdifference import (classical_limit, verify_degenerate_first_order, verify_inhomogeneous,
                                     verify_third_order)
from seifert_wrt.resurgence import blr_decompose, median_report, stokes_jump, watson_check
from seifert_wrt.seifert_core import dedekind_sum, make_loop, theta0
from seifert_wrt.wrt_qseries import phi_B_limit, phi_series, radial_limit, torus_knot_jones_series

POINCARE = make_loop("2/1,3/1,5/-4")
TREFOIL = make_loop("2/1,3/-1")
QDIFF_LOOPS = ["2/1,3/1,5/-4", "2/-9,3/11,7/6", "2/-7,3/10,11/2", "3/-10,4/7,5/8"]


def verdict(capsys, number, title, passed, detail):
    line = record(number, title, passed, detail)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


def fmt(x):
    return mp.nstr(x, 3)


def test_criterion_01_constants(capsys):
    checks = {
        "theta0(2,3,5)=181/30": theta0(POINCARE) == Fraction(181, 30),
        "s(1,2)=0": dedekind_sum(1, 2) == 0,
        "s(1,3)=1/18": dedekind_sum(1, 3) == Fraction(1, 18),
        "s(-4,5)=1/5": dedekind_sum(-4, 5) == Fraction(1, 5),
        "s(1,p) closed form p<=40": all(dedekind_sum(1, p) == Fraction((p - 1) * (p - 2), 12 * p)
                                        for p in range(2, 41)),
    }
    bad = [k for k, ok in checks.items() if not ok]
    verdict(capsys, 1, "constants", not bad, "all exact" if not bad else f"failed {bad}")


def test_criterion_02_gauss_machinery(capsys):
    tol = mp.mpf(2) ** -200
    worst_gauss = mp.mpf(0)
    count = 0
    for K in range(1, 301):
        for P in range(1, 300 // K + 1):
            total, closed = gauss_G(K, P)
            worst_gauss = max(worst_gauss, abs(total - closed))
            count += 1
    rng = random.Random(20240601)
    worst_rec = mp.mpf(0)
    triples = 0
    while triples < 100:
        M1, M2 = rng.choice([-1, 1]) * rng.randint(1, 50), rng.choice([-1, 1]) * rng.randint(1, 50)
        if (M1 * M2) % 2:
            continue
        L = Fraction(rng.randint(-3 * abs(M1), 3 * abs(M1)), abs(M1))
        lhs, rhs = reciprocity(M1, M2, L)
        worst_rec = max(worst_rec, abs(lhs - rhs))
        triples += 1
    passed = worst_gauss < tol and worst_rec < tol
    verdict(capsys, 2, "gauss sums and reciprocity", passed,
            f"{count} (K,P) pairs max |G-closed|={fmt(worst_gauss)}; 100 triples max |lhs-rhs|={fmt(worst_rec)}")


def test_criterion_03_appendix(capsys):
    failures = []
    runs = 0
    for spec in ("2/1,3/1,5/-4", "2/-9,3/11,7/6"):
        loop = make_loop(spec)
        for K in range(2, 11):
            for ell in (0, Fraction(1, 2), Fraction(-1, 2), 1, -1):
                for s in range(loop.n):
                    report = vanishing_check(loop, K, ell, s)
                    runs += 1
                    if not (report.passed and report.details["exact_zero"]):
                        failures.append((spec, K, ell, s))
    eps_ok = eps_power_sum(POINCARE, 3) == Fraction(8, 5) == eps_sum_brute((2, 3, 5), 3)
    factor_ok = True
    for K in range(2, 61):
        K1, K2 = factor_k(K, POINCARE)
        factor_ok &= K1 * K2 == K and gcd(2, K1) == 1 and gcd(15, K2) == 1 and gcd(K1, K2) == 1
    passed = not failures and eps_ok and factor_ok
    verdict(capsys, 3, "appendix vanishing sums", passed,
            f"{runs - len(failures)}/{runs} exact zeros; eps-sum(s=3)=8/5 {eps_ok}; factor_k K<=60 {factor_ok}")


def test_criterion_04_radial_limit(capsys):
    # the literal defaults: t0 = 1/8, levels = 8, degree = 6
    residuals = {}
    for K in (3, 5, 7):
        for N in (1, 2):
            rep = radial_limit(POINCARE, N, K, t0=Fraction(1, 8), levels=8, degree=6)
            residuals[(K, N)] = rep.residual
    trefoil = radial_limit(TREFOIL, 1, 5, t0=Fraction(1, 8)).residual
    phi_b = abs(phi_B_limit(POINCARE, 1, 5).value)
    worst = max(residuals.values())
    passed = worst < mp.mpf(10) ** -6 and trefoil < mp.mpf(10) ** -20 and phi_b < mp.mpf(10) ** -6
    table = " ".join(f"K{K}N{N}={fmt(r)}" for (K, N), r in residuals.items())
    verdict(capsys, 4, "radial limit at t0=1/8", passed,
            f"(2,3,5) residuals {table}; trefoil {fmt(trefoil)}; phi_B {fmt(phi_b)}")


def test_criterion_05_q_difference(capsys):
    failures = []
    for spec in QDIFF_LOOPS:
        loop = make_loop(spec)
        cutoff = Fraction(4 * loop.P)
        for N in (1, 2, 3):
            for check in (verify_inhomogeneous, verify_third_order):
                rep = check(loop, N, cutoff)
                if not rep.passed:
                    failures.append((spec, N, check.__name__))
    degenerate = verify_degenerate_first_order(1, 5).passed
    passed = not failures and degenerate
    verdict(capsys, 5, "q-difference equations", passed,
            f"{24 - len(failures)}/24 exact at cutoff 4P, failures {failures}; trefoil first-order {degenerate}")


def test_criterion_06_classical_limit(capsys):
    ok = []
    for spec in QDIFF_LOOPS:
        ok.append(classical_limit(loop=make_loop(spec))[2].passed)
    for k in (1, 2, 3):
        ok.append(classical_limit(k=k)[2].passed)
    verdict(capsys, 6, "classical limit", all(ok), f"{sum(ok)}/{len(ok)} expansions exact")


def test_criterion_07_torus_knot(capsys):
    ok = [phi_series(TREFOIL, N, 30).series == torus_knot_jones_series(2, 3, N, 30) for N in range(1, 6)]
    verdict(capsys, 7, "torus-knot colored Jones", all(ok), f"N=1..5 term-exact: {ok}")


def test_criterion_08_blr(capsys):
    residuals = {}
    for K in (2, 3, 5, 7):
        for N in (1, 2):
            dec = blr_decompose(POINCARE, N, K)
            residuals[(K, N)] = abs(dec.total - dec.z_norm)
    trefoil = {K: abs(blr_decompose(TREFOIL, 1, K).residue_sum) for K in (2, 3, 5)}
    worst = max(residuals.values())
    passed = worst < mp.mpf(10) ** -20 and max(trefoil.values()) < mp.mpf(10) ** -20
    verdict(capsys, 8, "integral plus residues", passed,
            f"(2,3,5) max |total-Z|={fmt(worst)}; trefoil max |residues|={fmt(max(trefoil.values()))}")


def test_criterion_09_median_sum(capsys):
    worst_phi = mp.mpf(0)
    worst_split = mp.mpf(0)
    passed = True
    for kappa in (mp.mpc(6, -2), mp.mpc(4, -3), mp.mpc(10, -1)):
        for N in (1, 2):
            rep = median_report(POINCARE, N, kappa)
            worst_phi = max(worst_phi, rep.residual)
            worst_split = max(worst_split, rep.details["average_vs_vertical"])
            passed &= rep.passed
    verdict(capsys, 9, "median sum reproduces Phi/G0", passed,
            f"max |avg-Phi/G0|={fmt(worst_phi)}; max |avg-vertical|={fmt(worst_split)}")


def test_criterion_10_stokes_jump(capsys):
    jump = stokes_jump(POINCARE, 1, mp.mpc(6, -2), 7)
    rep = jump.report()
    tref = stokes_jump(TREFOIL, 1, mp.mpc(6, -2), 7)
    trefoil_ok = abs(tref.lhs) < mp.mpf(10) ** -10 and abs(tref.rhs) < mp.mpf(10) ** -10
    verdict(capsys, 10, "Stokes jump", rep.passed and trefoil_ok,
            f"(2,3,5) residual {fmt(rep.residual)} vs {fmt(rep.tolerance)} (points {list(jump.singular_points)}); "
            f"trefoil |lhs|={fmt(abs(tref.lhs))}")


def test_criterion_11_watson(capsys):
    rows = []
    passed = True
    for N in (1, 2):
        for kappa in (50, 100, 200):
            rep = watson_check(POINCARE, N, kappa)
            passed &= rep.passed
            rows.append(f"N{N} k{kappa}: {fmt(rep.residual)}<={fmt(rep.tolerance)}")
    verdict(capsys, 11, "Watson consistency", passed, "; ".join(rows))
