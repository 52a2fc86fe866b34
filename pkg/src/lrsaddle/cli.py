"""Command-line front end.

Exit codes: 0 success, 1 reference-table mismatch, 2 bad parameters or
domain errors, 3 convergence failures, 64 usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .cgf import HestonParams, load_model_config
from .daniels import density_daniels
from .errors import ConvergenceError, LRError
from .experiments import (
    GammaFamily,
    HestonFamily,
    REFERENCE_TABLES,
    default_eps_grid,
    fmt,
    order_study,
    reproduce_table,
    rows_to_csv,
    study_to_csv,
)
from .inversion import QuadratureConfig, density_exact, price_call, tail_exact
from .lr_terms import tail_lr

EXIT_OK, EXIT_MISMATCH, EXIT_PARAM, EXIT_CONVERGENCE, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def to_json(obj):
    """JSON text with every float written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    return to_json(float(obj))


def _to_csv(record):
    keys, vals = [], []
    for k, v in record.items():
        if isinstance(v, (list, tuple)):
            for i, item in enumerate(v):
                keys.append(f"{k}{i}")
                vals.append(fmt(item))
        elif isinstance(v, float):
            keys.append(k)
            vals.append(fmt(v))
        else:
            keys.append(k)
            vals.append(str(v))
    return ",".join(keys) + "\n" + ",".join(vals) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_record(record, args):
    text = _to_csv(record) if args.format == "csv" else to_json(record) + "\n"
    _emit(text, args.out)


def _cfg(args):
    return QuadratureConfig(abs_tol=args.abs_tol)


def _parse_grid(spec):
    try:
        lo, hi, n = spec.split(":")
        return default_eps_grid(float(lo), float(hi), int(n))
    except ValueError:
        raise UsageError(f"--eps expects lo:hi:n, got {spec!r}") from None


def _family(args):
    if args.family == "gamma":
        return GammaFamily()
    if not args.model:
        raise UsageError("order-study needs --model for the heston family")
    with open(args.model) as fh:
        cfg = json.load(fh)
    if cfg.get("model") != "heston":
        raise UsageError("order-study --model must be a heston config")
    params = dict(cfg.get("params", {}))
    params.setdefault("eps", 0.2)
    return HestonFamily(HestonParams(**{k: float(v) for k, v in params.items()}))


# --------------------------------------------------------------------------
# Subcommands


def cmd_tail(args):
    r = tail_lr(load_model_config(args.model), args.x, args.order)
    _emit_record(
        {
            "theta_hat": r.saddle.theta_hat,
            "w_hat": r.saddle.w_hat,
            "base": r.base,
            "psi": list(r.psi),
            "total": r.total,
        },
        args,
    )
    return EXIT_OK


def cmd_density(args):
    r = density_daniels(load_model_config(args.model), args.x, args.order)
    _emit_record(
        {
            "theta_hat": r.saddle.theta_hat,
            "w_hat": r.saddle.w_hat,
            "theta_terms": list(r.theta_terms),
            "total": r.total,
        },
        args,
    )
    return EXIT_OK


def cmd_price_call(args):
    q = price_call(load_model_config(args.model), args.strike, args.method, _cfg(args))
    _emit_record(
        {
            "price": q.price,
            "tail_share": q.tail_share,
            "tail_risk_neutral": q.tail_risk_neutral,
            "strike": q.strike,
            "method": q.method,
        },
        args,
    )
    return EXIT_OK


def cmd_oracle(args):
    fn = tail_exact if args.what == "tail" else density_exact
    cfg = _cfg(args)
    value = fn(load_model_config(args.model), args.x, cfg)
    _emit_record({"value": value, "abs_tol": cfg.abs_tol}, args)
    return EXIT_OK


def cmd_order_study(args):
    grid = _parse_grid(args.eps)
    cfg = QuadratureConfig(abs_tol=args.abs_tol)
    rows, fits = order_study(_family(args), args.x, grid, cfg=cfg, daniels=args.daniels)
    if args.rows:
        Path(args.rows).write_text(study_to_csv(rows))
    if args.format == "csv":
        _emit(study_to_csv(rows), args.out)
    else:
        record = {
            key: {"slope": f.slope, "intercept": f.intercept, "r2": f.r2, "n": f.n}
            for key, f in fits.items()
        }
        failed = [{"eps": r.eps, "error": r.error} for r in rows if r.error]
        _emit(to_json({"fits": record, "failed_rows": failed}) + "\n", args.out)
    return EXIT_OK


def cmd_reproduce_table(args):
    status, report = reproduce_table(args.name, None, QuadratureConfig(abs_tol=args.abs_tol))
    _emit(rows_to_csv(report.rows), args.out)
    print(report.describe(), file=sys.stderr)
    return EXIT_OK if status == 0 else EXIT_MISMATCH


# --------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="lrsaddle", description="Saddlepoint tail and density approximations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True, x=True):
        if model:
            sp.add_argument("--model", required=True, help="model config JSON")
        if x:
            sp.add_argument("--x", type=float, required=True)
        sp.add_argument("--out", help="write output to this path instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("tail", help="Lugannani-Rice tail approximation")
    common(sp)
    sp.add_argument("--order", type=int, default=1, choices=range(4))
    sp.set_defaults(func=cmd_tail)

    sp = sub.add_parser("density", help="Daniels density approximation")
    common(sp)
    sp.add_argument("--order", type=int, default=1, choices=range(4))
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("price-call", help="European call via the share-measure identity")
    common(sp, x=False)
    sp.add_argument("--strike", type=float, required=True)
    sp.add_argument("--method", default="exact", help="exact, normal or lr-M with M in 0..3")
    sp.add_argument("--abs-tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_price_call)

    sp = sub.add_parser("oracle", help="numerical inversion of the tail or density")
    sp.add_argument("what", choices=("tail", "density"))
    common(sp)
    sp.add_argument("--abs-tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("order-study", help="log-log slopes of terms and errors against eps")
    common(sp, model=False)
    sp.add_argument("--model", help="heston config; its eps is replaced by the grid")
    sp.add_argument("--family", choices=("heston", "gamma"), default="heston")
    sp.add_argument("--eps", default="0.05:0.5:12", help="lo:hi:n, log-spaced")
    sp.add_argument("--rows", help="write per-eps rows as CSV to this path")
    sp.add_argument("--daniels", action="store_true", help="also fit density terms")
    sp.add_argument("--abs-tol", type=float, default=1e-17)
    sp.set_defaults(func=cmd_order_study)

    sp = sub.add_parser("reproduce-table", help="recompute a reference table as CSV")
    sp.add_argument("name", choices=sorted(REFERENCE_TABLES))
    sp.add_argument("--out", help="CSV path (stdout if omitted)")
    sp.add_argument("--abs-tol", type=float, default=1e-17)
    sp.set_defaults(func=cmd_reproduce_table)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (LRError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
