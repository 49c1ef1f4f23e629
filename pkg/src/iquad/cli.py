"""``iq`` command line: quadrature nodes, one-off estimates, experiments and sweeps.

Exit codes: 0 on success, 2 on a configuration error, 3 when every
importance weight is zero, 1 for other library errors.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .baselines import is_estimate, qmc_is_estimate
from .errors import (ConfigError, DegenerateWeightsError, GridTooLargeError, InvalidOrderError,
                     IquadError, UnsupportedRuleError)
from .harness import (CUSTOM_KINDS, ExperimentConfig, EXPERIMENTS, _custom_target,
                      load_config, run_experiment, run_sweep, write_reference)
from .igh import igh_estimate, igh_weights
from .proposals import GaussianProposal
from .quad_rules import RuleKind, classical_rule, gauss_hermite_points, tensor_grid

__all__ = ["main", "build_parser"]


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _grid(text):
    return [_value(v.strip()) for v in text.split(",") if v.strip()]


def _keyval(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), _value(v.strip())


def build_parser():
    p = argparse.ArgumentParser(prog="iq", description="Importance Gauss-Hermite quadrature.")
    p.add_argument("--version", action="version", version=f"iq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    n = sub.add_parser("nodes", help="write quadrature nodes and weights as CSV")
    n.add_argument("--alpha", type=int, required=True, help="nodes per dimension")
    n.add_argument("--rule", "--kind", dest="kind", default="hermite",
                   choices=[k.value for k in RuleKind])
    n.add_argument("--mu", "--mean", dest="mean", type=_floats,
                   help="Gaussian mean (hermite only)")
    n.add_argument("--cov", type=_floats,
                   help="variances, or a row-major covariance matrix (hermite only)")
    n.add_argument("--dim", type=int, default=None, help="grid dimension (defaults to len(mean))")
    n.add_argument("--output", "-o", help="CSV path (stdout when omitted)")

    e = sub.add_parser("estimate", help="one IGH, IS or QMC-IS estimate of a target's mean")
    e.add_argument("--target", required=True, choices=CUSTOM_KINDS)
    e.add_argument("--param", action="append", type=_keyval, default=[],
                   help="target parameter key=value (repeatable)")
    e.add_argument("--data", help="CSV data file for exoplanet or gp targets")
    e.add_argument("--method", default="igh", choices=["igh", "is", "qmc_is"])
    e.add_argument("--mean", type=_floats, required=True)
    e.add_argument("--cov", type=_floats, required=True)
    e.add_argument("--alpha", type=int, default=5)
    e.add_argument("--N", type=int, default=None, help="samples for is/qmc_is (default alpha**d)")
    e.add_argument("--seed", type=int, default=0)

    x = sub.add_parser("experiment", help="run an experiment config")
    x.add_argument("name", choices=EXPERIMENTS)
    x.add_argument("--config", required=True)
    x.add_argument("--output", help="override the output directory")
    x.add_argument("--seeds", type=int, help="override the number of seeds")
    x.add_argument("--workers", type=int, help="override the worker count")
    x.add_argument("--full-scale", action="store_true",
                   help="large-budget exoplanet and GP settings")

    s = sub.add_parser("sweep", help="run a config over a grid of one parameter")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, help="field name; dotted paths reach into target/init")
    s.add_argument("--grid", type=_grid, required=True, help="comma-separated values")
    s.add_argument("--output", help="override the output directory")

    r = sub.add_parser("reference", help="simulate a data set and store its brute-force mean")
    r.add_argument("name", choices=["exoplanet", "gp"])
    r.add_argument("--out", required=True, help="directory for the data CSV and reference JSON")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--final-log2", type=int, default=20,
                   help="log2 of the points per final replicate")
    r.add_argument("--replicates", type=int, default=8)
    return p


def _covariance(values, dim):
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        return float(values[0])
    if values.size == dim:
        return values
    if values.size == dim * dim:
        return values.reshape(dim, dim)
    raise ConfigError(f"invalid cov: expected 1, {dim} or {dim * dim} values, got {values.size}")


def _cmd_nodes(args, out):
    if args.kind == "hermite":
        dim = args.dim or (len(args.mean) if args.mean else 1)
        mean = np.zeros(dim) if args.mean is None else np.asarray(args.mean)
        if mean.size != dim:
            raise ConfigError(f"invalid mean: expected {dim} values")
        cov = 1.0 if args.cov is None else _covariance(args.cov, dim)
        ps = gauss_hermite_points(mean, cov, args.alpha)
        points, weights = ps.points, ps.quad_weights
    else:
        if args.mean is not None or args.cov is not None:
            raise ConfigError("invalid mean/cov: only Hermite grids are placed on a Gaussian")
        grid = tensor_grid(classical_rule(args.kind, args.alpha), args.dim or 1)
        points, weights = grid.points, grid.weights
    fh = open(args.output, "w", newline="", encoding="utf-8") if args.output else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{i + 1}" for i in range(points.shape[1])] + ["v"])
        for row, v in zip(points, weights):
            w.writerow([repr(float(c)) for c in row] + [repr(float(v))])
    finally:
        if args.output:
            fh.close()


def _cmd_estimate(args, out):
    tp = dict(args.param, kind=args.target)
    if args.data:
        tp["data"] = args.data
    cfg = ExperimentConfig.from_dict({"experiment": "custom", "method": args.method, "target": tp})
    target = _custom_target(cfg, tp)
    mean = np.asarray(args.mean, dtype=float)
    if mean.size != target.dim:
        raise ConfigError(f"invalid mean: target has dimension {target.dim}")
    q = GaussianProposal(mean, _covariance(args.cov, target.dim))
    if args.method == "igh":
        est = igh_estimate(igh_weights(q.points(args.alpha), target, q), None, target.log_z)
        n = args.alpha**target.dim
    else:
        n = args.N or args.alpha**target.dim
        fn = is_estimate if args.method == "is" else qmc_is_estimate
        est = fn(target, q, None, n, args.seed, target.log_z)
    doc = {"method": args.method, "n_points": int(n),
           "self_normalized": est.self_normalized.tolist(),
           "unnormalized": None if est.unnormalized is None else est.unnormalized.tolist(),
           "z_hat": est.z_hat, "log_z_hat": est.log_z_hat, "ess_igh": est.ess_igh}
    out.write(json.dumps(doc, indent=2) + "\n")


def _override(cfg, args):
    raw = cfg.to_dict()
    if getattr(args, "output", None):
        raw["output"] = os.path.abspath(args.output)
    if getattr(args, "seeds", None) is not None:
        raw["seeds"] = args.seeds
    if getattr(args, "workers", None):
        raw["workers"] = args.workers
    if getattr(args, "full_scale", False):
        raw["full_scale"] = True
    cfg = ExperimentConfig.from_dict(raw, cfg.base_dir)
    if getattr(args, "seeds", None) is not None:
        # an explicit count wins over the full-scale default
        cfg.seeds = list(range(args.seeds))
    return cfg


def _report(rep, out):
    if rep.runs_path:
        out.write(f"wrote {rep.runs_path}\nwrote {rep.summary_path}\n")
    for note in rep.notes:
        out.write(note + "\n")


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        if args.command == "nodes":
            _cmd_nodes(args, out)
        elif args.command == "estimate":
            _cmd_estimate(args, out)
        elif args.command == "experiment":
            cfg = load_config(args.config)
            if cfg.experiment != args.name:
                raise ConfigError(f"invalid experiment: config is for {cfg.experiment!r}, "
                                  f"command asked for {args.name!r}")
            _report(run_experiment(_override(cfg, args)), out)
        elif args.command == "sweep":
            cfg = _override(load_config(args.config), args)
            _report(run_sweep(cfg, args.param, args.grid), out)
        else:
            for path in write_reference(args.name, args.out, args.seed, args.final_log2,
                                        args.replicates):
                out.write(f"wrote {path}\n")
    except (ConfigError, InvalidOrderError, UnsupportedRuleError, GridTooLargeError) as exc:
        print(f"iq: config error: {exc}", file=sys.stderr)
        return 2
    except DegenerateWeightsError as exc:
        print(f"iq: degenerate estimate: {exc}", file=sys.stderr)
        return 3
    except (IquadError, ValueError, OSError) as exc:
        print(f"iq: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
