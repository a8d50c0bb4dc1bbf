"""Command-line interface: ``lagvar <subcommand> ...``.

Exit codes: 0 on success/pass, 2 when a verification fails, 1 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAIL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagvar", description="Laguerre semigroups, variation operators and Riesz transforms.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    k = sub.add_parser("kernel", help="evaluate kernels at points")
    _common(k)
    k.add_argument("--kind", choices=("heat", "riesz", "riesz-conjugated", "global-K"), default="heat")
    k.add_argument("--alpha", type=_floats, default=[1.0])
    k.add_argument("--t", type=float, default=1.0)
    k.add_argument("--variant", choices=("W", "W_HAT", "W_DELTA"), default="W")
    k.add_argument("--x", type=_floats, required=True)
    k.add_argument("--y", type=_floats, required=True)
    k.add_argument("--s", type=_floats, default=None, help="s-coordinates for global-K")
    k.add_argument("--axis", type=int, default=0)

    a = sub.add_parser("apply", help="apply an operator to a grid function CSV")
    _common(a)
    a.add_argument("--input", required=True)
    a.add_argument("--alpha", type=_floats, default=[1.0])
    a.add_argument("--measure", choices=("mu", "nu"), default="mu")
    a.add_argument("--op", choices=("heat", "poisson", "riesz"), default="heat")
    a.add_argument("--t", type=float, default=1.0)
    a.add_argument("--eps", type=float, default=None)
    a.add_argument("--axis", type=int, default=0)
    a.add_argument("--heat-route", choices=("kernel", "spectral", "auto"), default="auto")

    v = sub.add_parser("varop", help="evaluate a functional on a trajectory CSV")
    _common(v)
    v.add_argument("--input", required=True)
    v.add_argument("--functional", choices=("var", "osc", "jump", "jump-lhs", "svar"), default="var")
    v.add_argument("--rho", type=float, default=3.0)
    v.add_argument("--lam", type=float, default=None)
    v.add_argument("--tj", type=_floats, default=None, help="decreasing bracket sequence for osc")
    v.add_argument("--permissive", action="store_true")

    g = sub.add_parser("gfunc", help="Littlewood-Paley g-function of a grid function CSV")
    _common(g)
    g.add_argument("--input", required=True)
    g.add_argument("--alpha", type=_floats, default=[1.0])
    g.add_argument("--measure", choices=("mu", "nu"), default="mu")
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--n-t", type=int, default=400)

    b = sub.add_parser("verify-bounds", help="kernel-bound sweeps")
    _common(b)
    b.add_argument("--alpha", type=_floats, default=[0.5])
    b.add_argument("--tau", type=_floats, default=[1.0, 2.0])
    b.add_argument("--samples", type=int, default=2000)
    b.add_argument("--bounds", default=None, help="comma-separated bound ids")
    b.add_argument("--global", dest="global_", action="store_true", help="run the global domination check")

    e = sub.add_parser("experiment", help="run an experiment configuration")
    _common(e)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _emit(args, name: str, payload, table=None) -> None:
    """Write ``payload`` (JSON) or ``table`` (rows, CSV) to stdout or ``--out``."""
    from .experiments import dumps

    if args.format == "csv" and table is not None:
        buf = io.StringIO()
        w = csv.writer(buf)
        for row in table:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
        text = buf.getvalue()
        ext = "csv"
    else:
        text = dumps(payload, indent=2) + "\n"
        ext = "json"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{name}.{ext}"), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_config(args) -> dict:
    if not args.config:
        return {}
    with open(args.config) as fh:
        return json.load(fh)


def _read_function(path, alpha, measure):
    from .measure_space import GridFunction, MeasureKind, MeasureTag
    from .special_fn import AlphaIndex

    if not os.path.exists(path):
        raise UsageError(f"input file not found: {path}")
    return GridFunction.from_csv(path, MeasureKind(MeasureTag(measure), AlphaIndex(alpha)))


def _function_table(f):
    nodes = f.grid.nodes
    header = [f"x{i + 1}" for i in range(f.grid.n)] + ["weight", "re", "im"]
    rows = [header]
    for j in range(f.grid.size):
        rows.append([float(v) for v in nodes[j]] + [float(f.grid.weights[j]), float(f.values[j].real), float(f.values[j].imag)])
    return rows


def _function_payload(f):
    return {
        "nodes": f.grid.nodes.tolist(),
        "re": f.values.real.tolist(),
        "im": f.values.imag.tolist(),
        "info": {k: v for k, v in f.info.items() if isinstance(v, (int, float, str, list))},
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_kernel(args) -> int:
    from . import riesz
    from .laguerre_ops import HeatKernelParams, heat_kernel
    from .special_fn import AlphaIndex

    alpha = AlphaIndex(args.alpha)
    if args.kind == "heat":
        val = heat_kernel(HeatKernelParams(alpha, args.t, args.variant), args.x, args.y)
        payload = {"kind": "heat", "variant": args.variant, "t": args.t, "log_value": val.log_mag, "value": val.to_float()}
    elif args.kind == "riesz":
        payload = {"kind": "riesz", "value": riesz.riesz_kernel(args.axis, alpha, args.x, args.y)}
    elif args.kind == "riesz-conjugated":
        payload = {"kind": "riesz-conjugated", "value": riesz.conjugated_riesz_kernel(args.axis, alpha, args.x, args.y)}
    else:
        if args.s is None:
            raise UsageError("global-K needs --s")
        payload = {"kind": "global-K", "value": float(riesz.global_kernel_K(args.x, args.y, args.s, alpha))}
    payload.update({"alpha": alpha.to_list(), "x": args.x, "y": args.y})
    _emit(args, "kernel", payload, [["value"], [float(payload["value"])]])
    return EXIT_OK


def _cmd_apply(args) -> int:
    from .laguerre_ops import HeatKernelParams, Variant, apply_heat, apply_poisson
    from .riesz import truncated_riesz

    f = _read_function(args.input, args.alpha, args.measure)
    variant = Variant.W if args.measure == "mu" else Variant.W_HAT
    if args.op == "heat":
        out = apply_heat(f, HeatKernelParams(f.grid.alpha, args.t, variant), method=args.heat_route)
    elif args.op == "poisson":
        out = apply_poisson(f, f.grid.alpha, args.t, variant, heat=args.heat_route)
    else:
        if args.measure != "nu":
            raise UsageError("the Riesz transform acts on nu_alpha functions (--measure nu)")
        if args.eps is None:
            raise UsageError("riesz needs --eps")
        out = truncated_riesz(f, args.axis, eps=args.eps)
    _emit(args, "apply", _function_payload(out), _function_table(out))
    return EXIT_OK


def _cmd_varop(args) -> int:
    from . import varops

    if not os.path.exists(args.input):
        raise UsageError(f"input file not found: {args.input}")
    traj = varops.Trajectory.from_csv(args.input)
    fn = args.functional
    if fn == "var":
        vals = varops.rho_variation(traj, args.rho, permissive=args.permissive)
    elif fn == "osc":
        tj = args.tj if args.tj is not None else list(traj.params[[0, -1]])
        vals = varops.oscillation(traj, tj)
    elif fn in ("jump", "jump-lhs"):
        if args.lam is None:
            raise UsageError("jump functionals need --lam")
        vals = varops.jump_count(traj, args.lam) if fn == "jump" else varops.jump_domination_lhs(traj, args.lam, args.rho)
    else:
        vals = varops.short_variation(traj)
    vals = np.asarray(vals, dtype=float).reshape(-1)
    if args.out or args.format == "csv":
        _emit(args, "varop", {"functional": fn, "values": vals.tolist()}, [["node", "value"]] + [[j, float(v)] for j, v in enumerate(vals)])
    else:
        for v in vals:
            print(f"{v:.17g}")
    return EXIT_OK


def _cmd_gfunc(args) -> int:
    from .varops import g_function

    f = _read_function(args.input, args.alpha, args.measure)
    variant = "W" if args.measure == "mu" else "W_HAT"
    out = g_function(f, args.beta, variant=variant, N_t=args.n_t)
    _emit(args, "gfunc", _function_payload(out), _function_table(out))
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .riesz import LOCAL_BOUNDS, verify_global_domination, verify_local_bounds

    cfg = _load_config(args)
    alpha = cfg.get("alpha", args.alpha)
    taus = cfg.get("tau", args.tau)
    taus = taus if isinstance(taus, list) else [taus]
    samples = int(cfg.get("samples", args.samples))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    bounds = cfg.get("bounds", args.bounds.split(",") if args.bounds else None)
    if bounds is None:
        bounds = [b for b in LOCAL_BOUNDS if b != "poisson_pair_gradient" and (len(alpha) == 1 or b in ("poisson_size", "poisson_gradient", "riesz_size", "riesz_gradient"))]
    reports = []
    for tau in taus:
        reports.extend(verify_local_bounds(alpha, float(tau), samples, seed, tuple(bounds)))
    if args.global_ or cfg.get("global", False):
        reports.append(verify_global_domination(alpha, samples, seed))
    ok = all(r["pass"] for r in reports)
    keys = ["bound_id", "tau", "n_samples", "empirical_C", "empirical_C_refined", "refinement_ratio", "pass"]
    table = [keys] + [[r.get(k, "") for k in keys] for r in reports]
    _emit(args, "verify_bounds", {"reports": reports, "pass": ok}, table)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_experiment(args) -> int:
    from .experiments import ExperimentConfig, run_experiment

    if not args.config:
        raise UsageError("experiment needs --config")
    if not os.path.exists(args.config):
        raise UsageError(f"config file not found: {args.config}")
    cfg = ExperimentConfig.from_json(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        cfg = cfg.replace(output=None)
    res = run_experiment(cfg)
    stem = os.path.splitext(os.path.basename(args.config))[0]
    if args.out:
        res.to_json(os.path.join(args.out, f"{stem}.json"))
        if args.format == "csv":
            res.to_csv(os.path.join(args.out, f"{stem}.csv"))
    else:
        sys.stdout.write(res.to_json() + "\n")
    return EXIT_OK if res.passed else EXIT_FAIL


_COMMANDS = {
    "kernel": _cmd_kernel,
    "apply": _cmd_apply,
    "varop": _cmd_varop,
    "gfunc": _cmd_gfunc,
    "verify-bounds": _cmd_verify,
    "experiment": _cmd_experiment,
}


def run_cli(argv=None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, ValueError, NotImplementedError, KeyError) as exc:
        print(f"lagvar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":  # pragma: no cover
    main()
