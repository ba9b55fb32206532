"""Command-line front end.

Every command prints one deterministic report (JSON by default, CSV on
request) that embeds the resolved configuration and the library version.
Exit status: 0 on success, 1 when a verification fails, 2 on usage errors.

CSV schemas (one header line, then one row per record):
  constants  quantity,value
  tau        K,N,tau,z_norm
  phi        exponent,coefficient
  radial     claim,K,lhs,rhs,residual,tolerance,pass
  qdiff      claim,N,lhs,rhs,residual,tolerance,pass
  apoly      claim,lhs,rhs,residual,tolerance,pass
  pert       m,a,e,i,borel
  borel      m,omega,order,coefficients
  median     claim,kappa,lhs,rhs,residual,tolerance,pass
  stokes     claim,kappa,lhs,rhs,residual,tolerance,pass
  blr        claim,K,lhs,rhs,residual,tolerance,pass
  appendix   claim,K,ell,s,pass
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional

import mpmath as mp

from . import __version__
from .exact_sums import KRangeError, eps_power_sum, tau, vanishing_check, z_norm
from .numerics.precision import DEFAULT_PRECISION_BITS, parse_complex, working_precision
from .qdifference import classical_limit, verify_inhomogeneous, verify_third_order
from .report import to_jsonable
from .resurgence import (DEFAULT_DELTA, ContourError, blr_decompose, median_report, singularities,
                         stokes_jump, z_pert)
from .seifert_core import LoopError, b_const, c_const, dedekind_sum, g0, make_loop, theta0
from .wrt_qseries import phi_series, radial_limit

COMMANDS = ("constants", "tau", "phi", "radial", "qdiff", "apoly", "pert", "borel", "median", "stokes",
            "blr", "appendix")


class UsageError(ValueError):
    """Bad input detected after argument parsing."""


@dataclass
class RunConfig:
    loop: str = "2/1,3/1,5/-4"
    N: int = 1
    K: Optional[int] = None
    kappa: Optional[str] = None
    precision_bits: int = DEFAULT_PRECISION_BITS
    cutoff: Optional[str] = None
    t0: Optional[str] = None
    levels: int = 8
    degree: int = 6
    delta: float = DEFAULT_DELTA
    m_max: int = 7
    tol: Optional[str] = None
    format: str = "json"
    out: Optional[str] = None


def thread_cap() -> int:
    """Parallelism cap from SEIFERT_WRT_THREADS; evaluation is currently serial, so this only bounds it."""
    raw = os.environ.get("SEIFERT_WRT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _need_K(cfg: RunConfig) -> int:
    if cfg.K is None:
        raise UsageError("--K is required for this command")
    if cfg.K < 2:
        raise KRangeError("K must be ≥ 2")
    return cfg.K


def _need_kappa(cfg: RunConfig) -> mp.mpc:
    if cfg.kappa is None:
        raise UsageError("--kappa is required for this command")
    try:
        return parse_complex(cfg.kappa)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _fraction(text: str, name: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"--{name} must be a rational or decimal number") from exc


def _tol(cfg: RunConfig, default: str) -> mp.mpf:
    return mp.mpf(cfg.tol if cfg.tol is not None else default)


def _cmd_constants(loop, cfg):
    rows = [{"quantity": "P", "value": loop.P},
            {"quantity": "Theta_0", "value": str(theta0(loop))},
            {"quantity": "B", "value": to_jsonable(b_const(loop))},
            {"quantity": f"c({cfg.N})", "value": str(c_const(loop, cfg.N))}]
    for p, q in loop.pairs:
        rows.append({"quantity": f"s({q},{p})", "value": str(dedekind_sum(q, p))})
    if cfg.K is not None:
        rows.append({"quantity": f"G_0({_need_K(cfg)})", "value": to_jsonable(g0(cfg.K))})
    return True, rows, {}


def _cmd_tau(loop, cfg):
    K = _need_K(cfg)
    row = {"K": K, "N": cfg.N, "tau": to_jsonable(tau(loop, K, cfg.N)),
           "z_norm": to_jsonable(z_norm(loop, K, cfg.N))}
    return True, [row], {}


def _cmd_phi(loop, cfg):
    cutoff = _fraction(cfg.cutoff, "cutoff") if cfg.cutoff is not None else Fraction(4 * loop.P)
    ps = phi_series(loop, cfg.N, cutoff)
    rows = [{"exponent": str(ps.series.exponent(e)), "coefficient": str(c)} for e, c in ps.series.items()]
    return True, rows, {"cutoff": str(cutoff)}


def _cmd_radial(loop, cfg):
    K = _need_K(cfg)
    t0 = _fraction(cfg.t0, "t0") if cfg.t0 is not None else None
    report = radial_limit(loop, cfg.N, K, t0=t0, levels=cfg.levels, degree=cfg.degree, tol=_tol(cfg, "1e-6"))
    return report.passed, [report.row()], to_jsonable(report.details)


def _cmd_qdiff(loop, cfg):
    cutoff = _fraction(cfg.cutoff, "cutoff") if cfg.cutoff is not None else Fraction(4 * loop.P)
    reports = [verify_inhomogeneous(loop, cfg.N, cutoff), verify_third_order(loop, cfg.N, cutoff)]
    rows = []
    for r in reports:
        row = r.row()
        row["N"] = cfg.N
        rows.append(row)
    return all(reports), rows, {"cutoff": str(cutoff)}


def _cmd_apoly(loop, cfg):
    poly, factors, report = classical_limit(loop=loop)
    extra = {"polynomial": str(poly), "factored": " * ".join(f"({f})" for f in factors)}
    return report.passed, [report.row()], extra


def _cmd_pert(loop, cfg):
    series = z_pert(loop, cfg.N, cfg.m_max)
    borel = series.borel_coefficients()
    rows = [{"m": m, "a": to_jsonable(series.a[m]), "e": to_jsonable(series.e[m]),
             "i": to_jsonable(series.i[m]), "borel": to_jsonable(borel[m])} for m in range(series.order + 1)]
    return True, rows, {}


def _cmd_borel(loop, cfg):
    data = singularities(loop, cfg.N, cfg.m_max)
    rows = [{"m": d.m, "omega": to_jsonable(d.omega), "order": d.principal.order,
             "coefficients": ";".join(to_jsonable(c) for c in d.principal.coefficients)} for d in data]
    return True, rows, {"higher_order_poles": any(d.principal.order > 1 for d in data)}


def _cmd_median(loop, cfg):
    kappa = _need_kappa(cfg)
    report = median_report(loop, cfg.N, kappa, tol=_tol(cfg, "1e-6"), delta=cfg.delta)
    return report.passed, [report.row()], to_jsonable(report.details)


def _cmd_stokes(loop, cfg):
    kappa = _need_kappa(cfg)
    report = stokes_jump(loop, cfg.N, kappa, cfg.m_max, delta=cfg.delta).report(_tol(cfg, "1e-6"))
    row = report.row()
    row["kappa"] = to_jsonable(kappa)
    return report.passed, [row], to_jsonable(report.details)


def _cmd_blr(loop, cfg):
    K = _need_K(cfg)
    report = blr_decompose(loop, cfg.N, K).report(_tol(cfg, "1e-20"), K=K)
    return report.passed, [report.row()], to_jsonable(report.details)


def _cmd_appendix(loop, cfg):
    Ks = [_need_K(cfg)] if cfg.K is not None else list(range(2, 11))
    ells = [Fraction(0), Fraction(1, 2), Fraction(-1, 2), Fraction(1), Fraction(-1)]
    rows = []
    ok = True
    for K in Ks:
        for ell in ells:
            for s in range(loop.n):
                r = vanishing_check(loop, K, ell, s)
                ok = ok and r.passed
                rows.append({"claim": "vanishing", "K": K, "ell": str(ell), "s": s, "pass": bool(r.passed)})
    return ok, rows, {"eps_sum_s_eq_n": str(eps_power_sum(loop, loop.n))}


_HANDLERS = {
    "constants": _cmd_constants, "tau": _cmd_tau, "phi": _cmd_phi, "radial": _cmd_radial,
    "qdiff": _cmd_qdiff, "apoly": _cmd_apoly, "pert": _cmd_pert, "borel": _cmd_borel,
    "median": _cmd_median, "stokes": _cmd_stokes, "blr": _cmd_blr, "appendix": _cmd_appendix,
}


def run(command: str, cfg: RunConfig) -> tuple:
    """Execute one command; returns (exit_code, report dict)."""
    base = {"command": command, "version": __version__, "config": asdict(cfg), "threads": thread_cap()}
    if command not in _HANDLERS:
        return 2, dict(base, status="usage-error", error=f"unknown command {command!r}")
    try:
        if cfg.N < 1:
            raise UsageError("N must be >= 1")
        with working_precision(cfg.precision_bits):
            loop = make_loop(cfg.loop)
            passed, rows, extra = _HANDLERS[command](loop, cfg)
    except (LoopError, KRangeError, UsageError, ContourError) as exc:
        return 2, dict(base, status="usage-error", error=str(exc))
    report = dict(base, status="pass" if passed else "fail", rows=rows, result=extra)
    return (0 if passed else 1), report


def render(report: dict, fmt: str) -> str:
    if fmt == "json" or "rows" not in report:
        return json.dumps(to_jsonable(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    rows = report["rows"]
    buf = io.StringIO()
    buf.write(f"# seifert_wrt {report['version']} {report['command']} "
              f"{json.dumps(report['config'], sort_keys=True)}\n")
    if rows:
        fields = list(rows[0].keys())
        for row in rows[1:]:
            fields.extend(k for k in row if k not in fields)
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: to_jsonable(v) for k, v in row.items()})
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seifert-wrt", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--loop", default=RunConfig.loop, help="surgery data p1/q1,p2/q2,...")
    parser.add_argument("--N", type=int, default=1, help="color")
    parser.add_argument("--K", type=int, default=None, help="level (integer >= 2)")
    parser.add_argument("--kappa", default=None, help='complex parameter such as "6-2i"')
    parser.add_argument("--precision-bits", type=int, default=DEFAULT_PRECISION_BITS, dest="precision_bits")
    parser.add_argument("--cutoff", default=None, help="q-exponent cutoff (default 4P)")
    parser.add_argument("--t0", default=None, help="first radial sample t (default: automatic)")
    parser.add_argument("--levels", type=int, default=8)
    parser.add_argument("--degree", type=int, default=6)
    parser.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="lateral Borel tilt in radians")
    parser.add_argument("--m-max", type=int, default=7, dest="m_max",
                        help="singularity index bound (borel, stokes) or series order (pert)")
    parser.add_argument("--tol", default=None, help="pass tolerance for the verification commands")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--out", default=None, help="write the report here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k != "command"})
    code, report = run(args.command, cfg)
    text = render(report, cfg.format)
    if code == 2:
        sys.stderr.write(f"error: {report.get('error')}\n")
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
