"""Command-line front end.

Every subcommand prints one JSON document holding the resolved run
configuration and the results; numeric fields carry a ``backend`` label.
Exit status: 0 on success, 2 on bad input, 3 when a budget is exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from ._numeric import BudgetExceededError, LogNumber, resolve_budget

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3


# ---------------------------------------------------------------- encoding

def num(x):
    """JSON-ready numeric field with its backend label."""
    if isinstance(x, LogNumber):
        value = float(x) if x.log_value < 700 else None
        return {"log": None if x.zero else x.log_value, "value": value, "backend": "log-space"}
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, np.integer)):
        return {"value": int(x), "backend": "rational"}
    if isinstance(x, Fraction):
        out = {"value": float(x), "backend": "rational"}
        out["exact"] = str(x)
        return out
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return {"value": "inf" if x > 0 else "-inf", "backend": "float"}
    return {"value": x, "backend": "float"}


def _matrix_json(a):
    a = np.asarray(a)
    backend = "rational" if a.dtype == object or np.issubdtype(a.dtype, np.integer) else "float"
    rows = [[str(v) if isinstance(v, Fraction) else (int(v) if backend == "rational" else float(v))
             for v in row] for row in a.tolist()]
    return {"rows": rows, "backend": backend}


def emit(payload, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------- parsing

def parse_number(text: str):
    """``"1/3"`` and integers parse exactly, other decimals as floats."""
    text = text.strip()
    if not text:
        raise ValueError("empty numeric field")
    try:
        if "/" in text:
            return Fraction(text)
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"not a number: {text!r}") from None


def _exactify(values):
    if all(isinstance(v, (int, Fraction)) for v in values):
        return [Fraction(v) for v in values]
    return [float(v) for v in values]


def read_matrix(path: str) -> np.ndarray:
    """Plain-text matrix: one row per line, comma-separated values."""
    with open(path, newline="") as fh:
        rows = [[parse_number(c) for c in row] for row in csv.reader(fh)
                if row and any(c.strip() for c in row)]
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged matrix rows")
    flat = _exactify([v for r in rows for v in r])
    arr = np.array(flat, dtype=object if isinstance(flat[0], Fraction) else float)
    return arr.reshape(len(rows), width)


def read_pmf(text: str | None, k: int | None):
    """Inline CSV (``"1/2,1/4,1/4"``) or a file path; uniform on ``[k]`` if absent."""
    from .permanent import Pmf

    if text is None:
        if k is None:
            raise ValueError("give --pmf or --k")
        return Pmf.uniform(k)
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    fields = [f for f in text.replace("\n", ",").split(",") if f.strip()]
    pmf = Pmf(tuple(_exactify([parse_number(f) for f in fields])))
    if k is not None and pmf.k != k:
        raise ValueError(f"pmf has {pmf.k} entries but --k is {k}")
    return pmf


def _pmf_json(p):
    return [str(v) if isinstance(v, Fraction) else v for v in p.p]


# ---------------------------------------------------------------- commands

def cmd_pattern(args):
    from .patterns import extract_pattern, upsilon_exact

    digits, pat = extract_pattern(args.sequence)
    return {"digits": digits, "mu": list(pat.mu), "n": num(pat.n), "m": num(pat.m),
            "upsilon": num(upsilon_exact(pat))}


def cmd_prob(args):
    from .patterns import parse_pattern
    from .permanent import pattern_probability, pattern_probability_via_perm

    psi = parse_pattern(args.pattern)
    p = read_pmf(args.pmf, args.k)
    args.pmf_resolved = _pmf_json(p)
    return {"mu": list(psi.mu), "k": p.k,
            "injection_sum": num(pattern_probability(psi, p)),
            "via_permanent": num(pattern_probability_via_perm(psi, p))}


def cmd_bethe(args):
    from .bethe import minimize_bethe

    theta = read_matrix(args.theta).astype(float)
    res = minimize_bethe(theta, tol=args.tol)
    return {"bethe_perm": num(res.bethe_perm), "free_energy": num(res.free_energy),
            "gap": num(res.gap), "iterations": num(res.iterations), "converged": res.converged,
            "gamma_star": _matrix_json(res.gamma_star)}


def cmd_bethe_prob(args):
    from .bethe import bethe_pattern_probability
    from .patterns import parse_pattern
    from .permanent import pattern_probability

    psi = parse_pattern(args.pattern)
    p = read_pmf(args.pmf, args.k)
    args.pmf_resolved = _pmf_json(p)
    return {"mu": list(psi.mu), "k": p.k,
            "bethe_probability": num(bethe_pattern_probability(psi, p, tol=args.tol)),
            "probability": num(pattern_probability(psi, p))}


def cmd_lifted(args):
    from .lifted import lifted_permanent_mc, lifted_permanent_power
    from .patterns import parse_pattern
    from .permanent import theta_matrix

    psi = parse_pattern(args.pattern)
    p = read_pmf(args.pmf, args.k)
    args.pmf_resolved = _pmf_json(p)
    theta = theta_matrix(psi, p).astype(float)
    power = lifted_permanent_power(theta, args.M, args.budget)
    out = {"mu": list(psi.mu), "k": p.k, "M": args.M,
           "exact": num(power.root(args.M)), "exact_power": num(power),
           "mc": None, "stderr": None}
    if args.mc:
        est = lifted_permanent_mc(theta, args.M, args.mc, args.seed, workers=args.workers)
        out.update(mc=num(est.estimate), stderr=num(est.stderr),
                   mc_power=num(est.mean_power), stderr_power=num(est.stderr_power))
    return out


def cmd_qkm(args):
    from .qkm import (maximizer_u, normalized_Z, normalized_Z_limit, qkm_stats,
                      variance_rate_limit)

    s = qkm_stats(args.k, args.M, args.budget)
    u = maximizer_u(args.k, args.M)
    out = {"k": args.k, "M": args.M, "tables": num(s.n_tables), "Z": num(s.Z),
           "Z_exact": num(s.Z_exact), "mean_a": num(s.mean_a),
           "second_moment": num(s.second_moment), "variance": num(s.variance),
           "cross_row": num(s.cross_row), "cross_diag": num(s.cross_diag),
           "w_star": num(u.w_star), "u": list(u.u)}
    if args.M >= 1:
        out["normalized_Z"] = num(normalized_Z(args.k, args.M, args.budget))
        out["variance_over_M"] = num(s.variance / args.M)
    if args.limits:
        if args.k >= 3:
            out["limits"] = {"normalized_Z": num(normalized_Z_limit(args.k)),
                             "variance_over_M": num(variance_rate_limit(args.k))}
        else:
            out["limits"] = {"normalized_Z": num(1.0), "variance_over_M": num(math.inf)}
    return out


def cmd_threshold(args):
    from .patterns import parse_pattern
    from .phase import threshold_report

    r = threshold_report(parse_pattern(args.pattern), args.delta)
    return {"n": num(r.n), "m": num(r.m), "U_sum": num(r.U_sum), "upsilon": num(r.upsilon),
            "discriminant": num(r.discriminant), "rho1": num(r.rho1), "rho2": num(r.rho2),
            "upsilon_B": num(r.upsilon_B), "case_tag": r.case_tag,
            "quadratic": [num(c) for c in r.quadratic()]}


def cmd_probe(args):
    from .patterns import parse_pattern
    from .phase import probe_extremum

    r = probe_extremum(args.target, parse_pattern(args.pattern), args.k, args.M,
                       n_dirs=args.dirs, step=args.step, seed=args.seed, budget=args.budget)
    return {"target": r.target, "k": r.k, "M": r.M, "directions": r.directions,
            "step": num(r.step), "classification": r.classification,
            "exploratory": r.exploratory, "margin": num(r.margin),
            "second_diffs": [num(v) for v in r.second_diffs],
            "first_diffs": [num(v) for v in r.first_diffs],
            "first_vanishes": r.first_vanishes, "value_at_uniform": num(r.value_at_uniform)}


def _int_list(text: str) -> list:
    text = text.strip()
    if ":" in text:
        lo, hi = (int(s) for s in text.split(":"))
        return list(range(lo, hi + 1))
    return [int(s) for s in text.split(",") if s.strip()]


def cmd_phase_scan(args):
    from .patterns import parse_pattern
    from .phase import SCAN_COLUMNS, phase_scan

    rows = phase_scan(parse_pattern(args.pattern), _int_list(args.k_range),
                      _int_list(args.M_list), n_dirs=args.dirs, step=args.step,
                      seed=args.seed, probe=not args.no_probe, budget=args.budget)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=SCAN_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({c: ("" if row[c] is None else row[c]) for c in SCAN_COLUMNS})
    return {"columns": list(SCAN_COLUMNS), "csv": args.csv,
            "rows": [{c: (num(v) if isinstance(v, float) else v) for c, v in row.items()}
                     for row in rows]}


def cmd_dgauss(args):
    from .dgauss import (LatticeGaussian, dg_expected_quadratic, dg_partition_direct,
                         dg_partition_poisson, dg_tail_bound)

    g = LatticeGaussian(read_matrix(args.V).astype(float), args.beta)
    radius = g.auto_radius() if args.radius is None else args.radius
    args.radius_resolved = radius
    moment = dg_expected_quadratic(g, radius, budget=args.budget)
    out = {"d": g.d, "Z_direct": num(dg_partition_direct(g, radius, args.budget)),
           "Z_poisson": num(dg_partition_poisson(g, args.terms, "d/2", args.budget)),
           "Z_poisson_half_exponent": num(dg_partition_poisson(g, args.terms, "1/2", args.budget)),
           "expected_quadratic": num(moment.expected), "beta_d": num(moment.prediction),
           "residual": num(moment.residual)}
    if args.R is not None:
        tb = dg_tail_bound(g, args.R, args.tau, radius, args.budget)
        out.update(tail=num(tb.empirical), bound=num(tb.bound), tail_within_bound=tb.holds)
    return out


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmlphase", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--budget", type=int, default=None,
                    help="enumeration budget (default: $PMLPHASE_BUDGET or 10^7)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="pattern of a sequence and its threshold")
    p.add_argument("sequence")
    p.set_defaults(func=cmd_pattern)

    def pattern_pmf(p):
        p.add_argument("--pattern", required=True)
        p.add_argument("--pmf", help="inline CSV such as 1/2,1/4,1/4, or a file")
        p.add_argument("--k", type=int, help="support size (uniform pmf if --pmf is absent)")

    p = sub.add_parser("prob", help="pattern probability by both routes")
    pattern_pmf(p)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("bethe", help="Bethe permanent of a matrix file")
    p.add_argument("--theta", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_bethe)

    p = sub.add_parser("bethe-prob", help="Bethe pattern probability")
    pattern_pmf(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_bethe_prob)

    p = sub.add_parser("lifted", help="degree-M lifted permanent")
    pattern_pmf(p)
    p.add_argument("-M", type=int, required=True)
    p.add_argument("--mc", type=int, default=0, help="Monte-Carlo samples (0 = off)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_lifted)

    p = sub.add_parser("qkm", help="statistics of Q_{k,M}")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-M", type=int, required=True)
    p.add_argument("--limits", action="store_true")
    p.set_defaults(func=cmd_qkm)

    p = sub.add_parser("threshold", help="PML and lifted-PML thresholds")
    p.add_argument("--pattern", required=True)
    p.add_argument("--delta", type=float, default=0.5)
    p.set_defaults(func=cmd_threshold)

    def probe_opts(p):
        p.add_argument("--dirs", type=int, default=20)
        p.add_argument("--step", type=float, default=1e-3)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("probe", help="finite-difference extremum probe at U_k")
    p.add_argument("--target", choices=["pml", "lifted", "liftedM", "bethe"], default="pml")
    p.add_argument("--pattern", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-M", type=int, default=None)
    probe_opts(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("phase-scan", help="second-derivative table over k and M")
    p.add_argument("--pattern", required=True)
    p.add_argument("--k-range", required=True, help="lo:hi or comma list")
    p.add_argument("--M-list", required=True, help="comma list or lo:hi")
    p.add_argument("--csv", default=None)
    p.add_argument("--no-probe", action="store_true")
    probe_opts(p)
    p.set_defaults(func=cmd_phase_scan)

    p = sub.add_parser("dgauss", help="lattice Gaussian sums")
    p.add_argument("--V", required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--terms", type=int, default=None)
    p.set_defaults(func=cmd_dgauss)
    return ap


def _config(args) -> dict:
    skip = {"func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg["budget"] = resolve_budget(args.budget)
    return cfg


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.budget = resolve_budget(args.budget)
        result = args.func(args)
    except BudgetExceededError as exc:
        stderr.write(f"pmlphase: budget exceeded: {exc}\n")
        return EXIT_BUDGET
    except (ValueError, OSError, ZeroDivisionError) as exc:
        stderr.write(f"pmlphase: error: {exc}\n")
        return EXIT_INPUT
    emit({"command": args.command, "config": _config(args), "result": result,
          "version": __version__}, stdout)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
