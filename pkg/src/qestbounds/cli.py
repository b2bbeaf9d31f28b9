"""Command-line front end.

Subcommands: `bounds` (ladder report at a point), `sweep` (bounds over a
parameter grid, CSV), `simulate` (one-parameter Monte-Carlo runs),
`tail` (tail-probability bounds), `gaussian` (canonical form and related
queries for a Gaussian model file).

Exit codes: 0 success; 2 validation/usage failure; 3 minimizer stability
flag raised; 4 precondition failure (e.g. tail-bound commutation).
"""

import argparse
import json
import sys

import numpy as np

from .matcore import PreconditionError, ValidationError
from . import models as models_mod
from . import fisher
from . import bounds as bounds_mod
from . import gaussian as gaussian_mod
from . import estimate as estimate_mod

CSV_HEADER = "# qestbounds-csv v1"


def _fmt(x):
    return "%.17g" % float(x)


def _parse_constants(text):
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValidationError("constant %r is not of the form key=value" % item)
        key, val = item.split("=", 1)
        parts = val.split(";")
        if len(parts) > 1:
            out[key.strip()] = np.array([float(p) for p in parts])
        else:
            try:
                f = float(val)
            except ValueError:
                raise ValidationError("constant %r has a non-numeric value" % item)
            out[key.strip()] = int(f) if float(f).is_integer() and "." not in val else f
    return out


def _parse_point(text):
    if not text:
        raise ValidationError("--point is required for this command")
    try:
        return np.array([float(p) for p in text.split(",")])
    except ValueError:
        raise ValidationError("could not parse --point %r" % text)


def _resolve_model(name, constants):
    if name is None:
        raise ValidationError("--model is required")
    if name.endswith(".json"):
        spec = models_mod.load_model_spec(name)
        if constants:
            spec["constants"] = {**spec.get("constants", {}), **constants}
        model = models_mod.model_from_spec(spec)
        return model, spec.get("point")
    return models_mod.builtin(name, constants=constants or None), None


def _materialize_weight(spec, k):
    if spec is None or spec == "identity":
        return np.eye(k)
    if spec.startswith("diag:"):
        vals = [float(p) for p in spec[len("diag:") :].split(",")]
        if len(vals) != k:
            raise ValidationError(
                "--weight diag has %d entries but %d parameters of interest" % (len(vals), k)
            )
        return np.diag(vals)
    if spec.startswith("file:"):
        with open(spec[len("file:") :]) as fh:
            W = np.asarray(json.load(fh), dtype=float)
        return W
    raise ValidationError("unrecognized --weight %r" % spec)


def _parse_grid(spec, model):
    name, lo, hi, steps = None, None, None, None
    parts = spec.split(":")
    if len(parts) != 4:
        raise ValidationError("--grid must look like param:lo:hi:steps, got %r" % spec)
    name = parts[0]
    if name not in model.param_names:
        raise ValidationError(
            "grid parameter %r not among model parameters %r" % (name, model.param_names)
        )
    try:
        lo, hi, steps = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise ValidationError("could not parse --grid %r" % spec)
    if steps < 1:
        raise ValidationError("grid needs at least one step")
    return model.param_names.index(name), np.linspace(lo, hi, steps)


def _json_dump(record):
    def convert(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, complex):
            return {"re": obj.real, "im": obj.imag}
        raise TypeError("cannot serialize %r" % type(obj))

    return json.dumps(record, sort_keys=True, indent=2, default=convert) + "\n"


def _emit(text, out_path):
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)


def _report_flagged(diag):
    if not diag.get("stable", True):
        return True
    conv = diag.get("restart_converged")
    if conv is not None and not all(conv):
        return True
    return False


def cmd_bounds(args):
    model, spec_point = _resolve_model(args.model, _parse_constants(args.constants))
    point = _parse_point(args.point) if args.point else np.asarray(spec_point, dtype=float)
    if point is None:
        raise ValidationError("--point is required")
    k = model.nparams - args.nuisance
    W = _materialize_weight(args.weight, k)
    report = bounds_mod.bound_report(model, point, W, nuisance=args.nuisance)
    record = {
        "command": "bounds",
        "model": model.name,
        "constants": {
            key: (val.tolist() if isinstance(val, np.ndarray) else val)
            for key, val in model.constants.items()
        },
        "weight": W.tolist(),
        "nuisance": args.nuisance,
        "report": report.to_record(),
    }
    if args.format == "csv":
        lines = [CSV_HEADER, "# command=bounds model=%s" % model.name]
        cols = list(model.param_names) + ["sld", "rld", "holevo", "nuisance"]
        lines.append(",".join(cols))
        row = [_fmt(v) for v in point]
        row.append(_fmt(report.sld))
        row.append("" if report.rld is None else _fmt(report.rld))
        row.append(_fmt(report.holevo))
        row.append("" if report.nuisance is None else _fmt(report.nuisance))
        lines.append(",".join(row))
        text = "\n".join(lines) + "\n"
    else:
        text = _json_dump(record)
    _emit(text, args.out)
    return 3 if _report_flagged(report.diagnostics) else 0


def cmd_sweep(args):
    model, spec_point = _resolve_model(args.model, _parse_constants(args.constants))
    base = _parse_point(args.point) if args.point else np.asarray(spec_point, dtype=float)
    if base is None:
        raise ValidationError("--point is required (base values for non-grid parameters)")
    if not args.grid:
        raise ValidationError("--grid is required for sweep")
    if len(args.grid) > 2:
        raise ValidationError("at most two --grid axes supported")
    axes = [_parse_grid(g, model) for g in args.grid]
    k = model.nparams - args.nuisance
    W = _materialize_weight(args.weight, k)

    grids = [axis[1] for axis in axes]
    idxs = [axis[0] for axis in axes]
    mesh = [g.ravel() for g in np.meshgrid(*grids, indexing="ij")] if len(grids) > 1 else [grids[0]]

    lines = [CSV_HEADER]
    lines.append(
        "# command=sweep model=%s nuisance=%d weight=%s"
        % (model.name, args.nuisance, args.weight or "identity")
    )
    cols = list(model.param_names) + ["sld", "rld", "holevo", "nuisance"]
    lines.append(",".join(cols))
    flagged = False
    for i in range(mesh[0].size):
        point = base.copy()
        for ax, vals in zip(idxs, mesh):
            point[ax] = vals[i]
        report = bounds_mod.bound_report(model, point, W, nuisance=args.nuisance)
        flagged = flagged or _report_flagged(report.diagnostics)
        row = [_fmt(v) for v in point]
        row.append(_fmt(report.sld))
        row.append("" if report.rld is None else _fmt(report.rld))
        row.append(_fmt(report.holevo))
        row.append("" if report.nuisance is None else _fmt(report.nuisance))
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 3 if flagged else 0


def cmd_simulate(args):
    model, spec_point = _resolve_model(args.model, _parse_constants(args.constants))
    point = _parse_point(args.point) if args.point else np.asarray(spec_point, dtype=float)
    if args.seed is None:
        raise ValidationError("--seed is required for simulate")
    if args.copies is None:
        raise ValidationError("--copies is required for simulate")
    trials = args.trials or 1000
    if args.protocol == "two-step":
        run = estimate_mod.two_step_simulate(
            model, point, args.copies, args.x, trials, seed=args.seed
        )
    else:
        t0 = _parse_point(args.t0) if args.t0 else point
        run = estimate_mod.simulate_mse(
            model, point, t0, args.copies, trials, seed=args.seed
        )
    if args.format == "json":
        record = {
            "command": "simulate",
            "model": model.name,
            "protocol": args.protocol,
            "seed": args.seed,
            "copies": run.n,
            "trials": run.trials,
            "n_mse": run.n_mse,
            "fallback_frac": run.fallback_frac,
        }
        text = _json_dump(record)
        _emit(text, args.out)
    else:
        import io

        buf = io.StringIO()
        run.to_csv(buf)
        _emit(buf.getvalue(), args.out)
    return 0


def cmd_tail(args):
    if args.seed is None:
        raise ValidationError("--seed is required for tail")
    samples = args.trials or 1_000_000
    if args.gaussian_file:
        gm = gaussian_mod.load_gaussian_model(args.gaussian_file)
        can = gaussian_mod.canonical_form(gm.Gamma)
        kdim = can.dC + 2 * can.dQ
        W = _materialize_weight(args.weight, kdim)
        est = gaussian_mod.gaussian_tail_bound(
            can.classical, can.N, W, args.c, samples=samples, seed=args.seed
        )
        source = {"gaussian_file": args.gaussian_file, "dC": can.dC, "dQ": can.dQ}
    else:
        model, spec_point = _resolve_model(args.model, _parse_constants(args.constants))
        point = _parse_point(args.point) if args.point else np.asarray(spec_point, dtype=float)
        bundle = fisher.sld_qfi(model, point)
        D = fisher.d_matrix(model, point)
        W = _materialize_weight(args.weight, model.nparams)
        est = gaussian_mod.qudit_tail_bound(
            bundle.J, D, W, args.c, samples=samples, seed=args.seed
        )
        source = {"model": model.name}
    record = {
        "command": "tail",
        "c": args.c,
        "value": est.value,
        "stderr": est.stderr,
        "nsamples": est.nsamples,
        "method": est.method,
        **source,
    }
    if args.format == "csv":
        lines = [
            CSV_HEADER,
            "# command=tail",
            "c,value,stderr,nsamples,method",
            "%s,%s,%s,%d,%s" % (_fmt(args.c), _fmt(est.value), _fmt(est.stderr), est.nsamples, est.method),
        ]
        text = "\n".join(lines) + "\n"
    else:
        text = _json_dump(record)
    _emit(text, args.out)
    return 0


def cmd_gaussian(args):
    if not args.gaussian_file:
        raise ValidationError("--gaussian-file is required for gaussian")
    if args.format == "csv":
        raise ValidationError("gaussian reports are JSON only")
    gm = gaussian_mod.load_gaussian_model(args.gaussian_file)
    can = gaussian_mod.canonical_form(gm.Gamma)
    record = {
        "command": "gaussian",
        "dC": can.dC,
        "dQ": can.dQ,
        "classical": can.classical.tolist(),
        "N": can.N.tolist(),
        "kappa": can.kappa.tolist(),
        "T": can.T.tolist(),
    }
    if gm.T is not None:
        flag, diag = gaussian_mod.is_d_invariant_submodel(gm.Gamma, gm.T)
        record["d_invariant"] = flag
        record["d_invariant_residual"] = diag["residual"]
        kcols = gm.T.shape[1]
        Jt = gm.T.T @ gaussian_mod.rld_of_gaussian(gm.Gamma) @ gm.T
        Z = np.linalg.inv(Jt)
        W = _materialize_weight(args.weight, kcols)
        V = gaussian_mod.measurement_covariance(Z, W)
        record["measurement_covariance"] = V.tolist()
        record["weighted_value"] = float(np.trace(W @ V))
    text = _json_dump(record)
    _emit(text, args.out)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="qestbounds",
        description="Precision bounds and attainability checks for quantum parametric models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", help="builtin model name or model-spec JSON path")
        p.add_argument("--constants", help="comma-separated key=value constants; ';' separates vector entries")
        p.add_argument("--point", help="comma-separated parameter values")
        p.add_argument("--weight", help="identity | diag:w1,w2,... | file:path.json")
        p.add_argument("--seed", type=int, help="RNG seed")
        p.add_argument("--trials", type=int, help="trial or sample count")
        p.add_argument("--copies", type=int, help="copies per trial")
        p.add_argument("--out", help="also write output to this path")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        p.add_argument("--nuisance", type=int, default=0, help="trailing nuisance parameter count")

    p_bounds = sub.add_parser("bounds", help="bound ladder at a point")
    common(p_bounds)

    p_sweep = sub.add_parser("sweep", help="bound ladder over a grid (CSV)")
    common(p_sweep)
    p_sweep.add_argument(
        "--grid",
        action="append",
        help="param:lo:hi:steps (repeat for a 2-D grid)",
    )

    p_sim = sub.add_parser("simulate", help="one-parameter Monte-Carlo runs")
    common(p_sim)
    p_sim.add_argument("--protocol", choices=("direct", "two-step"), default="direct")
    p_sim.add_argument("--x", type=float, default=0.1, help="two-step localization exponent")
    p_sim.add_argument("--t0", help="measurement design point (defaults to --point)")

    p_tail = sub.add_parser("tail", help="tail-probability bounds")
    common(p_tail)
    p_tail.add_argument("--c", type=float, required=True, help="tail threshold")
    p_tail.add_argument("--gaussian-file", help="Gaussian model JSON instead of --model")

    p_gauss = sub.add_parser("gaussian", help="Gaussian-model canonical form report")
    common(p_gauss)
    p_gauss.add_argument("--gaussian-file", help="Gaussian model JSON path")

    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "bounds": cmd_bounds,
        "sweep": cmd_sweep,
        "simulate": cmd_simulate,
        "tail": cmd_tail,
        "gaussian": cmd_gaussian,
    }
    if args.format is None:
        args.format = "csv" if args.command in ("sweep", "simulate") else "json"
    try:
        return handlers[args.command](args)
    except ValidationError as exc:
        sys.stderr.write("validation error: %s\n" % exc)
        return 2
    except PreconditionError as exc:
        sys.stderr.write("precondition failure: %s\n" % exc)
        return 4


if __name__ == "__main__":
    sys.exit(main())
