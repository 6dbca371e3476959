"""Command-line driver.

Commands: ``constants``, ``eigen line|cylinder``, ``threshold``, ``sweep``
and ``verify``.  Reports are JSON (one object per line, sorted keys,
``schema: 1``) or CSV with a fixed header.  Exit codes: 0 success,
2 invalid parameters, 3 I/O or file format, 4 solver failure,
5 acceptance failure.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import io
import json
import math
import os
import sys

from . import params as _p
from .cylinder import ground_state_2d_oracle, ground_state_symmetric, load_potential_2d, symmetric_potential
from .errors import ConvergenceError, FormatError, InconclusiveError, KLTError, ParameterError
from .line import default_line_grid, ground_state_1d, load_potential_1d, lq_norm_1d, optimal_samples
from .manifold import load_manifold, sphere_spec
from .variational import (OptimizerConfig, default_mode, load_config, search_threshold,
                          solve_capital_lambda, symmetry_fraction)

SCHEMA = 1

EXIT_OK, EXIT_PARAM, EXIT_IO, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 2, 3, 4, 5

SWEEP_FIELDS = ("mu", "Lambda", "Lambda_R", "symmetry_fraction", "iterations", "residual",
                "newton_iterations", "mode", "grid_n", "grid_m", "half_length", "tol", "rel_tol")


def _manifold(args, d):
    if getattr(args, "manifold", None):
        M = load_manifold(args.manifold)
        if M.d != d:
            raise ParameterError(f"manifold {args.manifold} has dimension {M.dim}, expected {d - 1}")
        return M
    return sphere_spec(d)


def _config(args):
    return load_config(args.config) if getattr(args, "config", None) else OptimizerConfig()


def _emit(rows, fmt, fields, out):
    """Write records as JSON lines or CSV (RFC 4180 quoting, fixed header)."""
    if fmt == "json":
        for row in rows:
            out.write(json.dumps({"schema": SCHEMA, **row}, sort_keys=True) + "\n")
        return
    w = csv.writer(out, lineterminator="\r\n")
    w.writerow(("schema",) + tuple(fields))
    for row in rows:
        w.writerow((SCHEMA,) + tuple(_csv_value(row.get(k)) for k in fields))


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return json.dumps(v)
    return "" if v is None else v


# --- commands -----------------------------------------------------------------------


CONSTANT_FIELDS = ("d", "q", "p", "beta", "gamma", "mu1", "manifold", "kappa", "lambda1_M", "n", "delta",
                   "theta_star", "lambda_star", "mu_star_lower", "mu_star_upper", "mu_star")


def cmd_constants(args, out):
    P = _p.make_params(args.d, args.q)
    M = _manifold(args, P.d)
    rp = _p.rigidity_params_for(P, M, n=args.n)
    lower, upper = _p.mu_star_bounds(rp, P)
    row = {"command": "constants", "d": P.d, "q": P.q, "p": P.p, "beta": P.beta, "gamma": P.gamma,
           "mu1": _p.mu_one(P), "manifold": M.name, "kappa": M.kappa, "lambda1_M": M.lambda1,
           "n": float(rp.n), "delta": float(rp.delta), "theta_star": float(_p.theta_star(rp, P.d)) + 0.0,
           "lambda_star": float(_p.lambda_star(rp, P.d)), "mu_star_lower": lower, "mu_star_upper": upper,
           # the interval collapses on spheres
           "mu_star": upper if M.is_sphere and math.isclose(lower, upper, rel_tol=1e-12) else None}
    _emit([row], args.format, CONSTANT_FIELDS, out)


EIGEN_FIELDS = ("target", "eigenvalue", "lambda1", "mode", "residual", "error_estimate", "richardson",
                "s_min", "s_max", "n", "m", "potential_norm", "q")


def _line_potential(args, P):
    if args.potential:
        return load_potential_1d(args.potential)
    if args.optimal_mu is None:
        raise ParameterError("give --potential FILE or --optimal-mu MU")
    if not args.optimal_mu > 0:
        raise ParameterError("--optimal-mu must be positive")
    return optimal_samples(args.optimal_mu, P, grid=default_line_grid(args.optimal_mu, P, n=args.n))


def cmd_eigen(args, out):
    d = args.sphere_d if args.target == "cylinder" else 2
    if args.target == "cylinder" and args.manifold:
        d = load_manifold(args.manifold).d
    P = _p.make_params(d, args.q)
    base = {"command": "eigen", "target": args.target, "q": P.q, "richardson": not args.no_richardson}
    if args.target == "cylinder" and args.potential_2d:
        V = load_potential_2d(args.potential_2d)
        res = ground_state_2d_oracle(V)
        row = {**base, "eigenvalue": res.eigenvalue, "lambda1": res.lambda1, "mode": None,
               "residual": res.residual, "error_estimate": None, "richardson": False,
               "s_min": V.grid.s_min, "s_max": V.grid.s_max, "n": V.grid.n, "m": V.m,
               "potential_norm": None}
        _emit([row], args.format, EIGEN_FIELDS, out)
        return
    V = _line_potential(args, P)
    norm = lq_norm_1d(V, P.q, positive_part=True)
    if args.target == "line":
        res = ground_state_1d(V, richardson=not args.no_richardson)
        mode, extra = None, {}
    else:
        M = _manifold(args, d)
        mres = ground_state_symmetric(symmetric_potential(V), M, richardson=not args.no_richardson)
        res, mode = mres.base, mres.mode
        extra = {"eigenvalue": mres.eigenvalue, "lambda1": mres.lambda1,
                 "modes": [[int(l), float(lam), float(e)] for l, lam, e in
                           zip(mres.ells, mres.lambdas, mres.mode_eigenvalues)]}
    row = {**base, "eigenvalue": res.eigenvalue, "lambda1": res.lambda1, "mode": mode,
           "residual": res.residual, "error_estimate": res.error_estimate, "s_min": V.grid.s_min,
           "s_max": V.grid.s_max, "n": V.grid.n, "m": 1, "potential_norm": norm, **extra}
    if isinstance(row["error_estimate"], float) and math.isnan(row["error_estimate"]):
        row["error_estimate"] = None
    _emit([row], args.format, EIGEN_FIELDS, out)


THRESHOLD_FIELDS = ("d", "q", "manifold", "method", "interval_lower", "interval_upper", "mu_lo", "mu_hi",
                    "closed_form", "probes", "threshold_tol", "detect", "tol")


def cmd_threshold(args, out):
    P = _p.make_params(args.d, args.q)
    M = _manifold(args, P.d)
    config = _config(args)
    rep = search_threshold(P, M, config)
    row = {"command": "threshold", "d": P.d, "q": P.q, "manifold": M.name, "method": rep.method,
           "interval_lower": rep.interval[0], "interval_upper": rep.interval[1], "mu_lo": rep.mu_lo,
           "mu_hi": rep.mu_hi, "closed_form": rep.closed_form, "probes": len(rep.samples),
           "threshold_tol": config.threshold_tol, "detect": config.detect, "tol": config.tol}
    _emit([row], args.format, THRESHOLD_FIELDS, out)


def parse_range(text):
    """``a:b:N`` -> N equispaced values from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ParameterError(f"--mu expects a:b:N, got {text!r}") from None
    if n < 1 or not (a > 0 and b > 0):
        raise ParameterError("--mu needs positive endpoints and N >= 1")
    if n == 1:
        return [a]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


def _sweep_point(task):
    mu, d, q, manifold_path, mode, config = task
    P = _p.make_params(d, q)
    M = load_manifold(manifold_path) if manifold_path else sphere_spec(d)
    res = solve_capital_lambda(mu, P, M, mode, config)
    st = res.state
    return {"mu": mu, "Lambda": res.Lambda, "Lambda_R": res.lambda_R,
            "symmetry_fraction": symmetry_fraction(st), "iterations": st.iterations,
            "residual": st.gradient_norm, "newton_iterations": res.newton_iterations, "mode": mode,
            "grid_n": st.grid.n, "grid_m": st.grid.m, "half_length": st.grid.half_length,
            "tol": config.tol, "rel_tol": config.rel_tol}


def default_jobs():
    raw = os.environ.get("KLT_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ParameterError(f"KLT_JOBS must be an integer, got {raw!r}") from None


def cmd_sweep(args, out):
    P = _p.make_params(args.d, args.q)
    M = _manifold(args, P.d)
    mode = args.mode if args.mode != "auto" else (default_mode(M) or "symmetric")
    config = _config(args)
    jobs = args.jobs or default_jobs()
    tasks = [(mu, P.d, P.q, args.manifold, mode, config) for mu in parse_range(args.mu)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    rows.sort(key=lambda r: r["mu"])
    _emit([{"command": "sweep", **r} for r in rows], args.format, SWEEP_FIELDS, out)


def cmd_verify(args, out):
    from .acceptance import run_all

    only = set(args.only) if args.only else None
    results = run_all(quick=args.quick, only=only, echo=lambda line: print(line, file=sys.stderr))
    if args.format == "json":
        for r in results:
            out.write(json.dumps({"schema": SCHEMA, "command": "verify", "quick": args.quick, **r.record()},
                                 sort_keys=True) + "\n")
    else:
        for r in results:
            out.write(r.line() + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


# --- parser -------------------------------------------------------------------------


def _add_manifold(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sphere", action="store_true", help="M = S^{d-1} (default)")
    g.add_argument("--manifold", metavar="FILE", help="manifold spectrum file ('dim kappa' then 'lambda mult')")


def build_parser():
    ap = argparse.ArgumentParser(prog="kltcyl", description="Keller-Lieb-Thirring constants on R x M")
    ap.add_argument("--output", "-o", metavar="FILE", help="write the report here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", help="closed-form constants and the threshold interval")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--q", type=float, required=True)
    c.add_argument("--n", type=float, default=None, help="rigidity parameter n (default 2q)")
    _add_manifold(c)
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.set_defaults(func=cmd_constants)

    e = sub.add_parser("eigen", help="ground state of -d2/ds2 - V or of the cylinder operator")
    e.add_argument("target", choices=("line", "cylinder"))
    src = e.add_mutually_exclusive_group()
    src.add_argument("--potential", metavar="FILE", help="two-column 's value' file")
    src.add_argument("--potential-2d", metavar="FILE", help="2D file on S^1 (header 'n m s_min s_max')")
    src.add_argument("--optimal-mu", type=float, metavar="MU", help="use the optimal potential V_{1,mu}")
    e.add_argument("--q", type=float, default=2.0)
    e.add_argument("--sphere-d", type=int, default=2, help="cylinder R x S^{d-1}")
    e.add_argument("--manifold", metavar="FILE")
    e.add_argument("--n", type=int, default=2000, help="grid points for --optimal-mu")
    e.add_argument("--no-richardson", action="store_true")
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.set_defaults(func=cmd_eigen)

    t = sub.add_parser("threshold", help="bracket the symmetry-breaking threshold")
    t.add_argument("--d", type=int, required=True)
    t.add_argument("--q", type=float, required=True)
    _add_manifold(t)
    t.add_argument("--config", metavar="FILE", help="optimizer settings (name=value lines)")
    t.add_argument("--format", choices=("json", "csv"), default="json")
    t.set_defaults(func=cmd_threshold)

    s = sub.add_parser("sweep", help="Lambda(mu) on a grid of mu")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--mu", required=True, metavar="A:B:N")
    _add_manifold(s)
    s.add_argument("--mode", choices=("auto", "symmetric", "general2d", "two_mode"), default="auto")
    s.add_argument("--jobs", type=int, default=None, help="parallel workers (default $KLT_JOBS or 1)")
    s.add_argument("--config", metavar="FILE")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--quick", action="store_true", help="reduced sample counts, same tolerances")
    v.add_argument("--only", type=int, nargs="+", metavar="K", help="run only these criteria")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        code = args.func(args, buf) or EXIT_OK
    except ParameterError as exc:
        print(f"kltcyl: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (OSError, FormatError) as exc:
        print(f"kltcyl: {exc}", file=sys.stderr)
        return EXIT_IO
    except InconclusiveError as exc:
        print(f"kltcyl: {exc}", file=sys.stderr)
        print(json.dumps({"schema": SCHEMA, "samples": exc.samples}, sort_keys=True), file=sys.stderr)
        return EXIT_SOLVER
    except (ConvergenceError, KLTError) as exc:
        print(f"kltcyl: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    text = buf.getvalue()
    if args.output:
        try:
            with open(args.output, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"kltcyl: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
