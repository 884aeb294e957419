"""Command-line front end.

Commands
--------
analyze PLANT
    Unstable spectrum, DC gain, assumption table and solvability margin.
synthesize PLANT
    Design a controller and write it with its report.
simulate PLANT [--controller FILE]
    Closed-loop traces (one CSV per disturbance value) and metrics.
verify
    Run the invariant suite.

``PLANT`` is a TOML plant file or ``example`` for the packaged scalar
example. Exit codes: 0 success, 2 assumption violation, 3 numerical
breakdown or failed check, 4 input/output problem.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import numpy as np

from . import __version__
from . import plant as pl
from . import simulate as sim
from . import synthesis as syn
from .errors import AssumptionViolated, ParseError, RegsynError
from .export import RunManifest, jsonable, load_controller, save_controller, write_json
from .rational import hinf_norm_exterior

EXIT_OK, EXIT_ASSUMPTION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
EXAMPLE = "example"


def _g(x):
    """Ten significant digits for terminal output; roundoff imaginary parts are dropped."""
    z = complex(x)
    if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)):
        return f"{z.real:.10g}"
    return f"{z.real:.10g}{z.imag:+.10g}j"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are input problems under the exit-code contract
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def _int_at_least(low):
    def parse(text):
        value = int(text)
        if value < low:
            raise argparse.ArgumentTypeError(f"must be at least {low}")
        return value
    return parse


def _load(path):
    if path == EXAMPLE:
        ref = resources.files("regsyn") / "data" / "example.toml"
        with resources.as_file(ref) as p:
            return pl.load_plant(p)
    return pl.load_plant(path)


def _timing(plant, args):
    tau = args.tau if args.tau is not None else plant.tau
    if tau is None:
        raise ParseError("no sampling period: give --tau or set tau in the plant file")
    if plant.weight is not None and abs(plant.weight.tau - tau) < 1e-15:
        weight = plant.weight
    else:
        weight = pl.Weight.constant(tau)
    return float(tau), weight


def _print_table(rep, out):
    for key, item in rep.items():
        out.write(f"  {key:<4}{'ok' if item['ok'] else 'FAIL':<6}{item['detail']}\n")


# -- analyze ---------------------------------------------------------------

def analysis(plant, tau, weight, a=syn.DEFAULT_A):
    """Numbers printed by ``regsyn analyze``.

    Returns
    -------
    dict
        ``assumptions`` (table), ``gammas``, ``G0``, and for unstable plants
        ``delta_star``, ``M1``, ``D_plus_hinf``, ``margin_lhs``,
        ``margin_rhs``, ``margin_ok``.
    """
    rep, gammas, modal = pl.check_assumptions(plant, tau, weight)
    out = {"assumptions": rep, "gammas": [] if gammas is None else list(gammas)}
    if rep["b1"]["ok"]:
        out["G0"] = complex(pl.transfer_G(plant, 0.0)).real
    if modal is None or not all(v["ok"] for v in rep.values()) or modal.size == 0:
        return out
    pair = syn.coprime_factorize(pl.unstable_tf_dt(modal), a)
    out["delta_star"] = syn.delta_star(pair, [[[out["G0"]]]], (0.0,))
    M, _ = syn.stabilization_bound_M(pair, full_output=True)
    out["M1"] = max(2.0 * out["delta_star"], M)
    out["D_plus_hinf"] = hinf_norm_exterior(pair.D_ss, 4096)
    lhs, rhs, ok = pl.solvability_margin(plant, modal, pair.D_ss, out["M1"], tau, weight)
    out.update(margin_lhs=lhs, margin_rhs=rhs, margin_ok=ok)
    return out


def cmd_analyze(args, out=sys.stdout):
    plant = _load(args.plant)
    tau, weight = _timing(plant, args)
    res = analysis(plant, tau, weight, args.a)
    out.write(f"plant: {plant.name}\ntau: {_g(tau)}\n")
    if res["gammas"]:
        out.write("unstable zeros of det Delta: " + ", ".join(_g(g) for g in res["gammas"]) + "\n")
    elif res["assumptions"].get("b9", {}).get("ok"):
        out.write("no unstable modes; any stabilizing choice works\n")
    if "G0" in res:
        out.write(f"G(0): {_g(res['G0'])}\n")
    out.write("assumptions:\n")
    _print_table(res["assumptions"], out)
    bad = [k for k, v in res["assumptions"].items() if not v["ok"]]
    if bad:
        out.write(f"violated: {', '.join(bad)}\n")
        return EXIT_ASSUMPTION
    if "delta_star" in res:
        out.write(f"a: {_g(args.a)}\n")
        out.write(f"delta*: {_g(res['delta_star'])}\nM1: {_g(res['M1'])}\n")
        out.write(f"|D+|_inf: {_g(res['D_plus_hinf'])}\n")
        out.write(f"margin: sup|G - G+| = {_g(res['margin_lhs'])} "
                  f"{'<' if res['margin_ok'] else '>='} {_g(res['margin_rhs'])}"
                  f" ({'ok' if res['margin_ok'] else 'FAIL'})\n")
        if not res["margin_ok"]:
            return EXIT_ASSUMPTION
    return EXIT_OK


# -- synthesize ------------------------------------------------------------

def _synthesize(plant, args):
    tau, weight = _timing(plant, args)
    return syn.synthesize_delay(plant, tau, weight, a=args.a, siso=args.siso), tau


def cmd_synthesize(args, out=sys.stdout):
    plant = _load(args.plant)
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest("synthesize", [args.plant], _config(args))
    try:
        (ctrl, report), tau = _synthesize(plant, args)
    except RegsynError:
        manifest.finish("failed")
        manifest.write(args.out)
        raise
    path = os.path.join(args.out, "controller.json")
    save_controller(ctrl, path, report, tau, plant.name, manifest.filename)
    manifest.artifacts.append(path)
    manifest.finish("success")
    manifest.write(args.out)
    K = ctrl.K[0, 0] if ctrl.K is not None else None
    out.write(f"path: {report.path}\norder: {ctrl.order}\n")
    if K is not None:
        out.write("K num (ascending): " + " ".join(_g(c) for c in K.num) + "\n")
        out.write("K den (ascending): " + " ".join(_g(c) for c in K.den) + "\n")
    out.write(f"delta*: {_g(report.delta_star)}\nM1: {_g(report.M1)}\n")
    out.write(f"margin: {_g(report.thresholds['margin_lhs'])} < {_g(report.thresholds['margin_rhs'])}\n")
    for key, value in report.residuals.items():
        out.write(f"residual {key}: {_g(value)}\n")
    for item in ctrl.internal_model():
        out.write(f"internal model at theta={_g(item['theta'])}: distance {_g(item['distance'])}\n")
    out.write(f"small gain: {_g(report.stability['small_gain'])}\n")
    out.write(f"controller: {path}\n")
    return EXIT_OK


# -- simulate --------------------------------------------------------------

def _tag(v):
    return f"v{v:+g}"


def cmd_simulate(args, out=sys.stdout):
    plant = _load(args.plant)
    tau, weight = _timing(plant, args)
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest("simulate", [args.plant] + ([args.controller] if args.controller else []),
                           _config(args))
    if args.controller:
        ctrl, meta = load_controller(args.controller)
        if meta.get("tau") is not None and abs(meta["tau"] - tau) > 1e-12 * tau:
            sys.stderr.write(f"warning: controller was designed for tau = {_g(meta['tau'])}\n")
    else:
        ctrl, _ = syn.synthesize_delay(plant, tau, weight, a=args.a, siso=args.siso)
    perturbation = {"A": [args.perturb] + [1.0] * (len(plant.A) - 1)} if args.perturb else None
    vs = args.v or [0.0]
    cfgs = [sim.SimConfig(tau=tau, weight=weight, substeps=args.substeps, horizon=args.horizon,
                          y_ref=args.yref, v=v, precompensator=args.precompensator,
                          perturbation=perturbation) for v in vs]
    # independent runs; the compiled kernel releases the GIL
    with ThreadPoolExecutor(max_workers=len(cfgs)) as pool:
        traces = list(pool.map(lambda c: sim.run_closed_loop(plant, ctrl, c), cfgs))
    status = 0
    for v, trace in zip(vs, traces):
        metrics = sim.tracking_metrics(trace)
        csv = os.path.join(args.out, f"trace_{_tag(v)}.csv")
        txt = os.path.join(args.out, f"metrics_{_tag(v)}.txt")
        sim.write_trace_csv(trace, csv, manifest.filename)
        extra = {"manifest": manifest.filename, "v": float(v), "y_ref": float(args.yref),
                 "settle_time": _settle_time(trace, 0.01)}
        with open(txt, "w") as fh:
            fh.write(sim.format_metrics(metrics, 17, extra))
        manifest.artifacts += [csv, txt]
        out.write(f"v = {_g(v)}: " + sim.format_metrics(metrics, 10, {
            "settle_time": extra["settle_time"]}).replace("\n", "; ").rstrip("; ") + "\n")
        status |= metrics.diverged
    manifest.finish("diverged" if status else "success")
    manifest.write(args.out)
    return EXIT_OK


def _settle_time(trace, band):
    """First time after which ``|y - y_ref| < band`` holds to the end (inf if never)."""
    if trace.diverged:
        return float("inf")
    bad = np.nonzero(np.abs(trace.y - trace.config.y_ref) >= band)[0]
    if bad.size == 0:
        return 0.0
    if bad[-1] + 1 >= trace.t.size:
        return float("inf")
    return float(trace.t[bad[-1] + 1])


# -- verify ----------------------------------------------------------------

def cmd_verify(args, out=sys.stdout):
    from .verify import run_checks

    manifest = RunManifest("verify", [], _config(args))
    results = run_checks(args.tol_profile, select=args.only)
    for r in results:
        line = (f"{'PASS' if r.passed else 'FAIL'} {r.name} value={_g(r.value)} "
                f"{r.sense} {_g(r.bound)}")
        out.write(line + (f" [{r.error}]" if r.error else "") + "\n")
    failed = sum(not r.passed for r in results)
    out.write(f"{len(results) - failed} passed, {failed} failed\n")
    manifest.finish("success" if not failed else "failed")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "verify.json")
        write_json(jsonable({"manifest": manifest.filename, "profile": args.tol_profile,
                             "results": [r.as_dict() for r in results]}), path)
        manifest.artifacts.append(path)
        manifest.write(args.out)
    return EXIT_OK if not failed else EXIT_NUMERICAL


# -- parser ----------------------------------------------------------------

def _config(args):
    return {k: v for k, v in vars(args).items() if k != "func"}


def build_parser():
    parser = _Parser(prog="regsyn", description="Robust sampled-data regulators for delay plants.")
    parser.add_argument("--version", action="version", version=f"regsyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def plant_args(p):
        p.add_argument("plant", help="TOML plant file, or 'example'")
        p.add_argument("--tau", type=float, help="sampling period (default: from the plant file)")
        p.add_argument("--a", type=float, default=syn.DEFAULT_A,
                       help="auxiliary stable pole of the coprime factors (default 0.9)")

    def path_args(p, default):
        p.add_argument("--siso", dest="siso", action="store_true", default=True,
                       help="scalar interpolation shortcut (default)")
        p.add_argument("--mimo", dest="siso", action="store_false",
                       help="cascade construction with the derivative boundary condition")
        p.add_argument("--out", default=default, help="output directory")

    p = sub.add_parser("analyze", help="report spectrum, assumptions and solvability margin")
    plant_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="design a controller")
    plant_args(p)
    path_args(p, "regsyn-out")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="simulate the sampled-data loop")
    plant_args(p)
    path_args(p, "regsyn-out")
    p.add_argument("--controller", help="controller file (default: synthesize on the fly)")
    p.add_argument("--yref", type=float, default=1.0)
    p.add_argument("--v", type=float, action="append",
                   help="input disturbance; repeat for a sweep (default 0)")
    p.add_argument("--horizon", type=_int_at_least(20), default=100,
                   help="number of sampling periods (at least 20)")
    p.add_argument("--substeps", type=_int_at_least(1), default=320, help="integration steps per period")
    p.add_argument("--precompensator", type=float, metavar="A",
                   help="insert the filter xp' = -A xp + up before the plant")
    p.add_argument("--perturb", type=float, metavar="FACTOR",
                   help="scale A0 of the plant by FACTOR (controller unchanged)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--tol-profile", choices=("default", "strict"), default="default",
                   help="'strict' divides every numerical tolerance by 100")
    p.add_argument("--only", action="append", metavar="PREFIX", help="run checks with this prefix")
    p.add_argument("--out", help="also write verify.json and a manifest here")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args, sys.stdout)
    except AssumptionViolated as exc:
        sys.stderr.write(f"assumption violated: {exc}\n")
        for key, item in exc.report.items():
            if not item.get("ok", True):
                sys.stderr.write(f"  {key}: {item.get('detail', '')}\n")
        return exc.exit_code
    except RegsynError as exc:
        step = getattr(exc, "step", None)
        where = f" (design step {step})" if step is not None else ""
        sys.stderr.write(f"{type(exc).__name__}{where}: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
