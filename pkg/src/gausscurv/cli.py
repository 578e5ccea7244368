"""Command-line interface: ``gausscurv {closed-form,solve,sample,verify}``.

Options may come from flags or from a configuration file of namespaced
``key = value`` lines (``solver.beta = 2.4``, ``mc.n_particles = 100``);
flags win over the file. Outputs go to ``--output-dir``, defaulting to
``$GAUSSCURV_OUTPUT_DIR`` or the working directory.

Exit codes: 0 success, 2 invalid configuration, 3 non-convergence,
4 verification failure.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import _io
from .closedforms import CurvatureSpec, FamilyInstance, HarmonicSpec, conformal_maxima
from .exceptions import GaussCurvError
from .fields import PlanarField, RadialProfile, integral_curvature

logger = logging.getLogger("gausscurv")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_VERIFY = 0, 2, 3, 4
OUTPUT_ENV = "GAUSSCURV_OUTPUT_DIR"


def _floats(text):
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


# (flag, namespace, type, default, help)
FAMILY_OPTS = [
    ("family", "family", str, "chakie", "flat | chakie | stuart | special"),
    ("n", "family", int, 1, "chakie degree"),
    ("y", "family", _floats, (1.0, 0.0), "family point y as 'a,b'"),
    ("zeta", "family", float, 0.0, "family parameter zeta"),
    ("K0", "family", float, 1.0, "stuart curvature"),
    ("phi", "family", float, 0.0, "stuart frame angle"),
    ("gamma", "family", float, 1.0, "special-family exponent"),
    ("u0", "family", float, 0.0, "flat-family constant"),
    ("window", "grid", float, 2.0, "half-width of the output window"),
    ("h", "grid", float, 0.01, "grid spacing"),
    ("r-max", "grid", float, 100.0, "radius for the integral-curvature quadrature"),
]

MEASURE_OPTS = [
    ("curvature", "curvature", str, "special",
     "zero | constant | special | chakie | disk | bump | exp | gaussian | power | log"),
    ("sign", "curvature", int, None, "sign of K (+1/-1; default from the curvature name)"),
    ("K0", "curvature", float, 1.0, "constant curvature value"),
    ("gamma", "curvature", float, 0.6, "special-family exponent"),
    ("n", "curvature", int, 1, "chakie degree"),
    ("support", "curvature", float, 1.0, "support radius for disk/bump"),
    ("scale", "curvature", float, 1.0, "scale for exp/gaussian"),
    ("m", "curvature", float, 3.0, "power-law exponent"),
    ("h-re", "harmonic", _floats, (0.0,), "H coefficients of Re z^m, m = 0, 1, ..."),
    ("h-im", "harmonic", _floats, (0.0,), "H coefficients of Im z^m (first must be 0)"),
    ("truncate", "apriori", float, None, "restrict tau to |x| <= R"),
    ("beta", "solver", float, None, "inverse temperature"),
    ("kappa", "solver", float, None, "integral curvature; beta = kappa / pi"),
]

SOLVER_OPTS = [
    ("geometry", "solver", str, "radial", "radial | planar"),
    ("r-min", "solver", float, 1e-3, "innermost radial node"),
    ("r-max", "solver", float, 1e4, "outermost radial node"),
    ("n-radii", "solver", int, 2000, "number of radial nodes"),
    ("halfwidth", "solver", float, 2.0, "planar window half-width"),
    ("n-cells", "solver", int, 128, "planar cells per side"),
    ("damping", "solver", float, 1.0, "initial damping"),
    ("tol", "solver", float, 1e-10, "fixed-point tolerance"),
    ("max-iter", "solver", int, 5000, "iteration cap"),
    ("init", "solver", str, "apriori", "apriori | uniform-disk | gaussian"),
    ("init-radius", "solver", float, 1.0, "scale of the initial density"),
    ("multistart", "solver", str, None, "comma-separated initializations to run in turn"),
]

MC_OPTS = [
    ("n-particles", "mc", int, 100, "particle count N"),
    ("sweeps", "mc", int, 10000, "number of sweeps"),
    ("burn-in", "mc", float, 0.1, "fraction of sweeps discarded"),
    ("thin", "mc", int, 10, "sweeps between pair measurements"),
    ("step", "mc", float, 0.5, "initial proposal scale"),
    ("seed", "mc", int, 0, "64-bit seed"),
    ("n-bins", "mc", int, 60, "radial histogram bins"),
    ("r-lo", "mc", float, 1e-2, "histogram inner edge"),
    ("r-hi", "mc", float, 1e2, "histogram outer edge"),
    ("dump-every", "mc", int, None, "write positions every k sweeps to samples.csv"),
    ("compare", "mc", str, None, "radial density CSV to compare against"),
]

VERIFY_OPTS = [
    ("suite", "verify", str, "all", "comma-separated suite names or 'all'"),
    ("mc-sweeps", "verify", int, 1_000_000, "sweeps for the mc-consistency suite"),
]

COMMANDS = {
    "closed-form": FAMILY_OPTS,
    "solve": MEASURE_OPTS + SOLVER_OPTS,
    "sample": MEASURE_OPTS + MC_OPTS,
    "verify": VERIFY_OPTS,
}


def _dest(flag):
    return flag.replace("-", "_")


def build_parser():
    p = argparse.ArgumentParser(prog="gausscurv", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="namespaced key = value file")
        sp.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
        for flag, ns, typ, default, hlp in opts:
            sp.add_argument(f"--{flag}", dest=_dest(flag), type=typ,
                            help=f"{hlp} [{ns}.{_dest(flag)}, default {default}]")
    return p


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GaussCurvError(f"{path}:{k}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if "." not in key:
                raise GaussCurvError(f"{path}:{k}: key {key!r} must be namespaced (e.g. solver.beta)")
            out[key] = val
    return out


def resolve_options(command, args):
    """Merge defaults, config file and flags (flags win, logged)."""
    opts = COMMANDS[command]
    table = {(ns, _dest(flag)): (typ, default) for flag, ns, typ, default, _ in opts}
    by_dest = {}
    for (ns, dest), (typ, default) in table.items():
        by_dest.setdefault(dest, []).append(ns)
    values = {dest: default for (ns, dest), (typ, default) in table.items()}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        for key, raw in read_config(cfg_path).items():
            ns, dest = key.rsplit(".", 1)
            dest = _dest(dest)
            if (ns, dest) not in table:
                raise GaussCurvError(f"unknown configuration key {key!r} for '{command}'")
            typ = table[(ns, dest)][0]
            try:
                values[dest] = typ(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise GaussCurvError(f"bad value for {key}: {raw!r} ({exc})") from None
            if hasattr(args, dest) and getattr(args, dest) != values[dest]:
                logger.info("flag --%s=%r overrides %s = %r", dest.replace("_", "-"),
                            getattr(args, dest), key, raw)
    for dest in by_dest:
        if hasattr(args, dest):
            values[dest] = getattr(args, dest)
    values["output_dir"] = getattr(args, "output_dir", None) or os.environ.get(OUTPUT_ENV) or "."
    return values


def _resolve_beta(v):
    beta, kappa = v.get("beta"), v.get("kappa")
    if beta is None and kappa is None:
        raise GaussCurvError("give --beta or --kappa")
    if kappa is not None:
        b = kappa / np.pi
        if beta is not None and not np.isclose(b, beta, rtol=1e-12, atol=1e-15):
            raise GaussCurvError(f"--kappa {kappa} and --beta {beta} disagree (kappa = beta pi)")
        return float(b)
    return float(beta)


def _harmonic(v):
    return HarmonicSpec(tuple(v["h_re"]), tuple(v["h_im"]))


def _curvature(v):
    name = v["curvature"]
    sign = v.get("sign")
    kw = {}
    if name == "constant":
        kw = {"K0": v["K0"]}
    elif name == "special":
        kw = {"gamma": v["gamma"]}
    elif name == "chakie":
        kw = {"n": v["n"]}
    elif name in ("disk", "bump"):
        kw = {"radius": v["support"]}
    elif name in ("exp", "gaussian"):
        kw = {"scale": v["scale"]}
    elif name == "power":
        kw = {"m": v["m"]}
    if sign is not None and name not in ("zero", "special", "chakie"):
        kw["sign"] = sign
    return CurvatureSpec.from_name(name, **kw)


def _apriori(v):
    from .meanfield import build_apriori
    return build_apriori(_curvature(v), _harmonic(v), radius=v.get("truncate"))


def _family(v):
    fam = v["family"]
    if fam == "flat":
        return FamilyInstance.flat(v["u0"])
    if fam == "chakie":
        return FamilyInstance.chakie(v["n"], v["y"], v["zeta"])
    if fam == "stuart":
        return FamilyInstance.stuart(v["K0"], v["y"], v["zeta"], v["phi"])
    if fam == "special":
        return FamilyInstance.special(v["gamma"], v["y"])
    raise GaussCurvError(f"unknown family {fam!r}")


# -- subcommands --------------------------------------------------------------

def cmd_closed_form(v):
    inst = _family(v)
    f = PlanarField.sample(inst.conformal_factor, v["window"], h=v["h"])
    out = v["output_dir"]
    f.to_csv(os.path.join(out, "conformal_factor.csv"))
    maxima = conformal_maxima(inst, f)
    summary = {
        "instance": inst.to_dict(),
        "window": v["window"], "h": f.h,
        "max_value": float(np.max(f.values)),
        "local_maxima": [{"location": x, "value": val} for x, val in maxima],
        "integral_curvature_exact": inst.integral_curvature_exact,
    }
    if inst.family in ("chakie", "special"):
        res = integral_curvature(inst.K, inst.u, v["r_max"], inst.tail_exponent)
        summary["integral_curvature"] = res.value
        summary["integral_curvature_tail_share"] = res.tail_share
    elif inst.family == "flat":
        summary["integral_curvature"] = 0.0
    else:
        summary["integral_curvature"] = "diverges"
    _io.write_json(os.path.join(out, "closed_form.json"), summary)
    print(_io.dumps_json(summary))
    return EXIT_OK


def _emit_solution(res, tag, out, harmonic):
    prefix = f"{tag}_" if tag else ""
    res.density.to_csv(os.path.join(out, f"{prefix}rho.csv"))
    if res.U is not None:
        U = res.U.profile() if res.geometry.kind == "radial" else res.U.field()
        U.to_csv(os.path.join(out, f"{prefix}U.csv"))
    _io.write_json(os.path.join(out, f"{prefix}solve.json"), res.summary())
    if not res.converged:
        tr = np.array(res.trace)
        _io.write_csv(os.path.join(out, f"{prefix}trace.csv"), ["iteration", "residual", "F"],
                      [np.arange(1, len(tr) + 1), tr[:, 0], tr[:, 1]])


def cmd_solve(v):
    from .meanfield import SolverConfig, reconstruct_u, solve_minimizer
    tau = _apriori(v)
    beta = _resolve_beta(v)
    out = v["output_dir"]
    if tau.is_flat:
        if beta != 0:
            raise GaussCurvError("K == 0 admits only kappa = 0")
        H = tau.harmonic
        summary = {"beta": 0.0, "kappa": 0.0, "flat": True, "U": "H", "harmonic": H.to_dict()}
        _io.write_json(os.path.join(out, "solve.json"), summary)
        print(_io.dumps_json(summary))
        return EXIT_OK
    inits = v["multistart"].split(",") if v.get("multistart") else [v["init"]]
    code = EXIT_OK
    summaries = []
    for init in inits:
        cfg = SolverConfig(beta=beta, geometry=v["geometry"], r_min=v["r_min"], r_max=v["r_max"],
                           n_radii=v["n_radii"], halfwidth=v["halfwidth"], n_cells=v["n_cells"],
                           damping=v["damping"], tol=v["tol"], max_iter=v["max_iter"],
                           init=init.strip(), init_radius=v["init_radius"])
        res = solve_minimizer(cfg, tau)
        if beta != 0:
            reconstruct_u(res, tau.curvature, tau.harmonic)
        _emit_solution(res, init.strip() if len(inits) > 1 else "", out, tau.harmonic)
        s = res.summary()
        summaries.append({"init": init.strip(), **s})
        if not res.converged:
            code = EXIT_NONCONVERGED
    print(_io.dumps_json(summaries[0] if len(summaries) == 1 else summaries))
    return code


def cmd_sample(v):
    from .loggas import LogGasSampler, radial_cdf
    tau = _apriori(v)
    beta = _resolve_beta(v)
    out = v["output_dir"]
    s = LogGasSampler(n_particles=v["n_particles"], beta=beta, n_sweeps=v["sweeps"],
                      burn_in=v["burn_in"], thin=v["thin"], step=v["step"], seed=v["seed"],
                      n_bins=v["n_bins"], r_lo=v["r_lo"], r_hi=v["r_hi"],
                      record_every=v.get("dump_every"))
    s.fit(tau)
    s.histogram_.to_csv(os.path.join(out, "histogram.csv"))
    if v.get("dump_every"):
        s.write_samples(os.path.join(out, "samples.csv"))
    summary = s.summary()
    if v.get("compare"):
        rho = RadialProfile.from_csv(v["compare"])
        summary["l1_to_compare"] = s.histogram_.l1_distance(radial_cdf(rho))
        summary["compare"] = os.path.basename(v["compare"])
    _io.write_json(os.path.join(out, "sample.json"), summary)
    print(_io.dumps_json(summary))
    return EXIT_OK


def cmd_verify(v):
    from .verify import run_suites
    names = [n.strip() for n in v["suite"].split(",") if n.strip()]
    rows = run_suites(names, **{"mc-consistency": {"n_sweeps": v["mc_sweeps"]}})
    for r in rows:
        print(r.row())
    failed = [r for r in rows if not r.passed]
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


HANDLERS = {"closed-form": cmd_closed_form, "solve": cmd_solve, "sample": cmd_sample,
            "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        values = resolve_options(args.command, args)
        os.makedirs(values["output_dir"], exist_ok=True)
        return HANDLERS[args.command](values)
    except (GaussCurvError, ValueError, OSError) as exc:
        print(f"gausscurv {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
