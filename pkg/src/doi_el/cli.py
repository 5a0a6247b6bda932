"""Command-line front end: ``doi-el {coeffs,branch,gci,simulate,verify}``.

Tables are written as CSV (17 significant digits, one ``#`` comment line
describing the column blocks) or JSON.  Settings come from built-in defaults,
then an optional INI file (``[common]`` and a section per command), then
command-line flags, later sources winning.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric error.
"""

import argparse
import configparser
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import kinetic as kn
from . import verification
from .equilibria import (ModelParams, critical_point, eta_of_rho, lambda_of_eta, s2, s4)
from .errors import DoiELError, InvalidParameterError
from .gci import constant_c_lambda0, gamma_tildes, solve_h
from .leslie import leslie_from_order

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "n": 2, "alpha": 5.0, "Lambda": 1.0, "zeta": 0.5, "beta": 0.5,
    "eps": 1.0, "shear": 0.0, "K": 32, "dt": None, "tmax": 10.0,
    "out": None, "format": "csv", "seed": 0,
    "rho_min": None, "rho_max": None, "points": None,
    "eta": "0.5,1,3,10", "r_points": 21, "outputs": 101,
}
TYPES = {"n": int, "K": int, "seed": int, "points": int, "r_points": int, "outputs": int,
         "alpha": float, "Lambda": float, "zeta": float, "beta": float, "eps": float,
         "shear": float, "dt": float, "tmax": float, "rho_min": float, "rho_max": float,
         "out": str, "format": str, "eta": str}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output ----

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x) + 0.0, ".17g")  # + 0.0 turns -0.0 into 0.0


def render(header, rows, comment, form):
    if form == "json":
        return json.dumps([dict(zip(header, (_jsonable(v) for v in r))) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def emit(text, out, suffix=""):
    if out is None:
        sys.stdout.write(text)
        return None
    path = Path(out)
    if suffix:
        path = path.with_name(path.stem + suffix + path.suffix)
    path.write_text(text)
    return path


def read_csv(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


# ------------------------------------------------------------- settings ----

def settings(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        ini = configparser.ConfigParser()
        ini.optionxform = str
        if not ini.read(args.config):
            raise UsageError(f"cannot read config file {args.config}")
        for section in ("common", args.command):
            if ini.has_section(section):
                for k, v in ini.items(section):
                    key = k.replace("-", "_")
                    if key not in DEFAULTS:
                        raise UsageError(f"unknown key {k!r} in [{section}]")
                    try:
                        cfg[key] = TYPES[key](v)
                    except ValueError as exc:
                        raise UsageError(f"bad value for {k!r} in [{section}]: {v!r}") from exc
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {cfg['format']!r}")
    for key in ("points", "r_points", "outputs"):
        if cfg[key] is not None and cfg[key] < 2:
            raise UsageError(f"{key} must be at least 2, got {cfg[key]}")
    return cfg


def model(cfg) -> ModelParams:
    return ModelParams(n=cfg["n"], alpha=cfg["alpha"], Lambda=cfg["Lambda"],
                       zeta=cfg["zeta"], beta=cfg["beta"])


# ------------------------------------------------------------- commands ----

COEFF_HEADER = ["n", "alpha", "Lambda", "zeta", "rho", "eta", "S2", "S4", "c",
                "a1", "a2", "a3", "a4", "a5", "a6", "gamma1", "gamma2"]


def cmd_coeffs(cfg, args):
    p = model(cfg)
    rs = critical_point(p).rho_star
    lo = cfg["rho_min"] if cfg["rho_min"] is not None else 1.1 * rs
    hi = cfg["rho_max"] if cfg["rho_max"] is not None else 4.0 * rs
    rows = []
    # serial sweep: rows come out in grid order and the file is reproducible
    for rho in np.linspace(lo, hi, cfg["points"] or 20):
        try:
            eta = eta_of_rho(rho, p)
            c = p.Lambda * constant_c_lambda0(eta, p.n, solve_h(eta, p.n))
            S2, S4 = (0.0, 0.0) if args.debug_isotropic else (s2(eta, p.n), s4(eta, p.n))
            co = leslie_from_order(p, S2, S4, c)
        except DoiELError:
            sys.stderr.write(f"doi-el: failed at row rho={float(rho)!r}\n")
            raise
        rows.append([p.n, p.alpha, p.Lambda, p.zeta, rho, eta, S2, S4, c,
                     *co.alphas, co.gamma1, co.gamma2])
    text = render(COEFF_HEADER, rows,
                  "parameters | branch point (rho, eta, S2, S4) | mobility c | "
                  "Leslie viscosities a1..a6 | rotational viscosities gamma1, gamma2",
                  cfg["format"])
    path = emit(text, cfg["out"])
    # re-check Parodi on what was actually written
    vals = np.array(rows, dtype=float)
    if path is not None and cfg["format"] == "csv":
        _, vals = read_csv(path)
    a2, a3, a5, a6 = vals[:, 10], vals[:, 11], vals[:, 13], vals[:, 14]
    worst = float(np.max(np.abs((a6 - a5) - (a2 + a3)))) if len(vals) else 0.0
    if worst > 1e-12:
        sys.stderr.write(f"Parodi re-check failed: {worst:.3e}\n")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_branch(cfg, args):
    p = model(cfg)
    cp = critical_point(p)
    etas = np.geomspace(1e-3, 60.0, cfg["points"] or 200)
    rows = []
    for e in etas:
        rho = e / (p.alpha * s2(e, p.n))
        rows.append([p.n, p.alpha, lambda_of_eta(e, p.n), e, rho, e >= cp.eta_star])
    text = render(["n", "alpha", "lambda", "eta", "rho", "stable_flag"], rows,
                  "branch graph rho(lambda) with eta = alpha rho S2(eta); "
                  "stable_flag marks the largest-root (stable) portion", cfg["format"])
    path = emit(text, cfg["out"])
    summary = {"n": p.n, "alpha": p.alpha, "rho_star": cp.rho_star,
               "eta_star": cp.eta_star, "lambda_star": cp.lam_star,
               "rho_min_sampled": float(min(r[4] for r in rows))}
    side = json.dumps(summary, indent=1) + "\n"
    if path is None:
        sys.stderr.write(side)
    else:
        path.with_suffix(".json").write_text(side)
    return EXIT_OK


def cmd_gci(cfg, args):
    p = model(cfg)
    try:
        etas = [float(v) for v in str(cfg["eta"]).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--eta must be a comma list of numbers: {exc}") from exc
    half = np.linspace(0.0, 0.95, cfg["r_points"])[1:]
    r = np.concatenate([-half[::-1], [0.0], half])
    prof, summ = [], []
    for e in etas:
        h = solve_h(e, p.n)
        prof += [[p.n, e, ri, hi] for ri, hi in zip(r, h(r))]
        if e > 0:
            rho = e / (p.alpha * s2(e, p.n))
            gt = gamma_tildes(e, p.n, rho, h)
            summ.append([p.n, e, constant_c_lambda0(e, p.n, h), gt.gamma1, gt.gamma2,
                         gt.gamma3, h.residual])
    emit(render(["n", "eta", "r", "h"], prof,
                "GCI profile h_eta(r) on paired points r, -r", cfg["format"]), cfg["out"])
    text = render(["n", "eta", "c_over_Lambda", "gamma1t", "gamma2t", "gamma3t", "residual"], summ,
                  "mobility c/Lambda | GCI moments gamma1t..gamma3t at rho = rho(eta) | "
                  "relative residual of the h solve", cfg["format"])
    if cfg["out"] is None:
        sys.stdout.write(text)
    else:
        emit(text, cfg["out"], "_summary")
    return EXIT_OK


SIM_HEADER = ["t", "rho", "Qxx", "Qxy", "lambda", "theta", "S2_f", "A0", "dissipation",
              "gci_residual"]


def cmd_simulate(cfg, args):
    p = model(cfg)
    if p.n != 2:
        raise UsageError("simulate runs on the circle only: use --n 2")
    rng = np.random.default_rng(cfg["seed"])
    if args.init == "random":
        st = kn.OrientationState.random(rng, cfg["K"], args.rho)
    else:
        st = kn.OrientationState.gibbs(args.rho, eta_of_rho(args.rho, p), 0.0, cfg["K"])
    sc = kn.SimConfig(p, eps=cfg["eps"], grad_u=kn.shear_gradient(cfg["shear"]),
                      dt=cfg["dt"], tmax=cfg["tmax"], integrator=args.integrator)
    tr = kn.simulate(st, sc, np.linspace(0.0, cfg["tmax"], cfg["outputs"]))
    rows = []
    for i in range(len(tr)):
        s = tr.state(i)
        mo = kn.moments(s, p.alpha)
        A, D = kn.free_energy(s, p.alpha)
        res = (kn.gci_residual(s, p.alpha, normalization="diffusion")
               if not mo.degenerate else float("nan"))
        rows.append([tr.times[i], mo.rho, mo.Q[0, 0], mo.Q[0, 1], mo.lam, mo.theta, mo.S2,
                     A, D, res])
    emit(render(SIM_HEADER, rows,
                "time | density | Q-tensor and leading eigenvalue | director angle | "
                "scalar order 2 lambda | free energy A0 and its dissipation | "
                "GCI residual relative to |psi| |Laplacian f|",
                cfg["format"]), cfg["out"])
    if not tr.positivity.all():
        sys.stderr.write("warning: positivity monitor flagged negative densities\n")
    return EXIT_OK


def cmd_verify(cfg, args):
    checks = verification.run_all(quick=args.quick, perturb=args.debug_perturb)
    report = []
    unexpected = False
    for c in checks:
        d = c.as_dict()
        known = c.name in verification.KNOWN_FAILURES
        d["status"] = "pass" if c.passed else ("known_failure" if known else "fail")
        unexpected |= (not c.passed) and not known
        report.append(d)
    text = json.dumps({"checks": report, "all_pass": not unexpected}, indent=1, default=float) + "\n"
    emit(text, cfg["out"])
    for c in checks:
        sys.stderr.write(c.line() + "\n")
    return EXIT_VERIFY if unexpected else EXIT_OK


COMMANDS = {"coeffs": cmd_coeffs, "branch": cmd_branch, "gci": cmd_gci,
            "simulate": cmd_simulate, "verify": cmd_verify}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [common] and per-command sections")
    common.add_argument("--n", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--Lambda", type=float)
    common.add_argument("--zeta", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--shear", type=float, help="simple shear rate")
    common.add_argument("--K", type=int, help="Fourier truncation")
    common.add_argument("--dt", type=float)
    common.add_argument("--tmax", type=float)
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--seed", type=int)
    common.add_argument("--points", type=int, help="grid size")

    ap = argparse.ArgumentParser(prog="doi-el", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("coeffs", parents=[common], help="Leslie coefficient table")
    c.add_argument("--rho-min", dest="rho_min", type=float)
    c.add_argument("--rho-max", dest="rho_max", type=float)
    c.add_argument("--debug-isotropic", action="store_true",
                   help="force S2 = S4 = 0 (self-test of the table)")
    sub.add_parser("branch", parents=[common], help="branch diagram rho(lambda)")
    g = sub.add_parser("gci", parents=[common], help="GCI profiles and moments")
    g.add_argument("--eta", help="comma-separated eta values")
    g.add_argument("--r-points", dest="r_points", type=int)
    s = sub.add_parser("simulate", parents=[common], help="homogeneous kinetic run (n = 2)")
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--init", choices=["random", "equilibrium"], default="random")
    s.add_argument("--integrator", choices=["etd4", "etd2", "bdf"], default="etd4")
    s.add_argument("--outputs", type=int)
    v = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    v.add_argument("--quick", action="store_true", help="smaller samples, no long runs")
    v.add_argument("--debug-perturb", dest="debug_perturb", type=float, default=0.0,
                   help="relative fault injected into a6 (harness self-test)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = settings(args)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, InvalidParameterError) as exc:
        sys.stderr.write(f"doi-el: error: {exc}\n")
        return EXIT_USAGE
    except DoiELError as exc:
        sys.stderr.write(f"doi-el: numeric error: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
