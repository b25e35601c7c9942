"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 computation error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .core import AR, LagPolynomial, PanelData
from .evaluate import MIN, ONE_SE, expanding_window_eval, format_lag_matrix, lag_matrix
from .exceptions import DegenerateTestError, InvalidInputError, SparseVarmaError
from .experiments import DEFAULT_ESTIMATORS, ESTIMATORS, SWEEP_LEVELS, StudySpec, run_study
from .forecast import ForecastRequest, forecast_h
from .identify import IdentProblem, limit_target, solve_target
from .io import FitRecord, atomic_write, fit_to_dict, panel_to_csv, read_panel, write_json
from .penalty import HLAG, L1, PenaltySpec
from .pipeline import FitConfig, Scaling, Tuning, default_orders, fit_var, two_phase_fit
from .simulate import RNG_ALGORITHM, DgpSpec, build_dgp, fig1_model, simulate_path

log = logging.getLogger("sparsevarma")

DGPS = ("fig1-dense", "fig1-sparse", "sec5")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _nonneg_int(text):
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError(f"{text} is negative")
    return val


def _pos_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return val


def _order(text):
    return None if text == "auto" else _nonneg_int(text)


def _int_list(text):
    return tuple(_pos_int(t) for t in text.split(",") if t)


def _add_fit_options(p):
    p.add_argument("--penalty", choices=(L1, HLAG), default=HLAG)
    p.add_argument("--p", type=_order, default=None, metavar="N|auto", help="AR order (default auto)")
    p.add_argument("--q", type=_order, default=None, metavar="N|auto", help="MA order (default auto)")
    p.add_argument("--p-tilde", type=_order, default=None, metavar="N|auto", help="Phase-I VAR order")
    p.add_argument("--alpha", type=float, default=0.0, help="elastic-net ridge weight")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--grid-size", type=_pos_int, default=10)
    p.add_argument("--rule", choices=(ONE_SE, MIN), default=ONE_SE)
    p.add_argument("--cv-h", type=_pos_int, default=1, help="forecast horizon used for tuning")
    p.add_argument("--lambdas", type=float, nargs=3, metavar=("PI", "PHI", "THETA"),
                   help="fixed penalties instead of cross-validation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparsevarma", description="Sparse VARMA estimation and forecasting.")
    parser.add_argument("--threads", type=_pos_int, default=os.cpu_count() or 1,
                        help="worker processes / BLAS threads (default: all cores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a named data-generating process to CSV")
    p.add_argument("--dgp", choices=DGPS, default="sec5")
    p.add_argument("--d", type=_pos_int, default=None)
    p.add_argument("--p", type=_nonneg_int, default=4)
    p.add_argument("--q", type=_nonneg_int, default=4)
    p.add_argument("--theta", type=float, default=0.8)
    p.add_argument("--T", type=_pos_int, required=True)
    p.add_argument("--burn-in", type=_nonneg_int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("fit", help="two-phase penalized VARMA fit")
    p.add_argument("--input", required=True)
    _add_fit_options(p)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("forecast", help="h-step forecasts from a fit file")
    p.add_argument("--fit", required=True)
    p.add_argument("--h", type=_pos_int, default=1)
    p.add_argument("--history", default=None, help="CSV to forecast from instead of the training tail")
    p.add_argument("-o", "--output", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("identify", help="identification target of a VAR(inf) operator")
    p.add_argument("--pi", required=True, help="JSON list of d x d matrices Pi_1..Pi_k")
    p.add_argument("--p", type=_nonneg_int, required=True)
    p.add_argument("--q", type=_nonneg_int, required=True)
    p.add_argument("--penalty", choices=(L1, HLAG), default=L1)
    p.add_argument("--alpha", default="limit", help='ridge weight, or "limit" for alpha -> 0')
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("cv", help="cross-validation curves of a two-phase fit")
    p.add_argument("--input", required=True)
    _add_fit_options(p)
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("eval", help="expanding-window forecast comparison")
    p.add_argument("--input", required=True)
    p.add_argument("--estimators", default="varma,var",
                   help="comma list from: varma, var (two-phase VARMA and VAR(p_tilde))")
    p.add_argument("--penalty", choices=(L1, HLAG), default=HLAG)
    p.add_argument("--horizons", type=_int_list, default=(1,))
    p.add_argument("--start", type=_pos_int, default=None, help="first training length")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("study", help="Monte Carlo forecast study")
    p.add_argument("--sweep", choices=sorted(SWEEP_LEVELS), default="none")
    p.add_argument("--levels", default=None, help="comma list overriding the default factor levels")
    p.add_argument("--N", type=_pos_int, default=50)
    p.add_argument("--T", type=_pos_int, default=100)
    p.add_argument("--d", type=_pos_int, default=10)
    p.add_argument("--p", type=_nonneg_int, default=4)
    p.add_argument("--q", type=_nonneg_int, default=4)
    p.add_argument("--theta", type=float, default=0.8)
    p.add_argument("--penalty", choices=(L1, HLAG), default=HLAG)
    p.add_argument("--estimators", default=",".join(DEFAULT_ESTIMATORS),
                   help=f"comma list from: {', '.join(ESTIMATORS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="table CSV; a .json archive is written alongside")
    return parser


def _check_input(path):
    if not Path(path).is_file():
        raise UsageError(f"input file {path} does not exist")


def _check_output(path):
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory {parent} does not exist")


def _config(args) -> FitConfig:
    tuning = Tuning(horizon=args.cv_h, rule=args.rule, grid_size=args.grid_size)
    cfg = FitConfig(penalty=args.penalty, p=args.p, q=args.q, p_tilde=args.p_tilde, alpha=args.alpha,
                    standardize=not args.no_standardize, tuning=tuning)
    if args.lambdas is not None:
        lam_pi, lam_phi, lam_theta = args.lambdas
        if min(args.lambdas) < 0:
            raise UsageError("penalties must be non-negative")
        cfg = replace(cfg, tuning=None, lambda_pi=lam_pi, lambda_phi=lam_phi, lambda_theta=lam_theta)
    return cfg


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write(path, text)


def cmd_simulate(args):
    if args.dgp == "sec5":
        spec = DgpSpec(d=args.d or 10, p=args.p, q=args.q, theta_strength=args.theta,
                       burn_in=args.burn_in, seed=args.seed)
        model = build_dgp(spec)
        params = spec.to_dict()
    else:
        if args.d not in (None, 2):
            raise UsageError(f"{args.dgp} is two-dimensional; got --d {args.d}")
        model = fig1_model(args.dgp.split("-")[1])
        params = {"d": 2, "p": 1, "q": 1}
    data, _ = simulate_path(model, args.T, args.burn_in, args.seed)
    atomic_write(args.output, panel_to_csv(data.values, data.names))
    meta = {"dgp": args.dgp, "T": args.T, "burn_in": args.burn_in, "seed": args.seed,
            "rng": RNG_ALGORITHM, "params": params,
            "phi": model.phi.coeffs.tolist(), "theta": model.theta.coeffs.tolist(),
            "sigma_a": model.sigma_a.tolist()}
    write_json(f"{args.output}.meta.json", meta)
    log.info("wrote %d x %d sample to %s (seed %d)", args.T, data.d, args.output, args.seed)


def cmd_fit(args):
    data = read_panel(args.input)
    cfg = _config(args)
    phase1, phase2 = two_phase_fit(data, cfg)
    write_json(args.output, fit_to_dict(phase1, phase2, data.names, cfg))
    report = lag_matrix(phase2)
    log.info("%s", report.summary())
    log.info("AR lag matrix\n%s", format_lag_matrix(report.ar_lags, data.names))
    if report.ma_lags.size:
        log.info("MA lag matrix\n%s", format_lag_matrix(report.ma_lags, data.names))


def cmd_forecast(args):
    rec = FitRecord.from_dict(json.loads(Path(args.fit).read_text(encoding="utf-8")))
    history = None
    if args.history is not None:
        history = read_panel(args.history)
        if history.d != rec.d:
            raise UsageError(f"history has {history.d} series, fit has {rec.d}")
    fc = forecast_h(ForecastRequest(rec, history, None, args.h))
    _emit(panel_to_csv(fc, rec.names), args.output)


def cmd_identify(args):
    try:
        mats = np.asarray(json.loads(Path(args.pi).read_text(encoding="utf-8")), dtype=float)
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"{args.pi}: {exc}") from None
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise UsageError(f"{args.pi}: expected a list of square matrices, got shape {mats.shape}")
    pi = LagPolynomial(mats, AR, mats.shape[1])
    if args.alpha == "limit":
        tgt = limit_target(IdentProblem(pi, args.p, args.q, args.penalty))
    else:
        try:
            alpha = float(args.alpha)
        except ValueError:
            raise UsageError(f"--alpha must be a number or 'limit', got {args.alpha!r}") from None
        tgt = solve_target(IdentProblem(pi, args.p, args.q, args.penalty, alpha))
    _emit(json.dumps(tgt.to_dict(), indent=2) + "\n", args.output)


def cmd_cv(args):
    data = read_panel(args.input)
    cfg = _config(args)
    if cfg.tuning is None:
        raise UsageError("cv needs a penalty grid; drop --lambdas")
    phase1, phase2 = two_phase_fit(data, cfg)
    out = {"phase1": None if phase1 is None else phase1.cv.to_dict(),
           "phase2": phase2.cv.to_dict()}
    _emit(json.dumps(out, indent=2) + "\n", args.output)


def _eval_estimators(names, penalty):
    def varma(train: PanelData, hmax):
        _, fit = two_phase_fit(train, FitConfig(penalty=penalty))
        return forecast_h(ForecastRequest(fit, h=hmax))

    def var(train: PanelData, hmax):
        scaling = Scaling.fit(train.values)
        fit = fit_var(scaling.transform(train.values), default_orders(train.T)[0], PenaltySpec(penalty))
        fit.scaling = scaling
        return forecast_h(ForecastRequest(fit, h=hmax))

    table = {"varma": varma, "var": var}
    unknown = [n for n in names if n not in table]
    if unknown or not names:
        raise UsageError(f"unknown estimators {unknown}; choose from {sorted(table)}")
    return {n: table[n] for n in names}


def cmd_eval(args):
    data = read_panel(args.input)
    names = [n for n in args.estimators.split(",") if n]
    result = expanding_window_eval(data, _eval_estimators(names, args.penalty), args.start,
                                   args.horizons, n_jobs=args.threads)
    table = result.msfe_table()
    rows = []
    for h in result.horizons:
        row = {"horizon": h}
        row.update({f"{n}_msfe": table[n][h] for n in names})
        if len(names) >= 2:
            try:
                row["dm_stat"], row["dm_p"] = result.compare(names[0], names[1], h)
            except (DegenerateTestError, InvalidInputError):
                row["dm_stat"], row["dm_p"] = float("nan"), float("nan")
        rows.append(row)
    header = list(rows[0])
    lines = [",".join(header)] + [",".join(str(r[k]) for k in header) for r in rows]
    atomic_write(args.output, "\n".join(lines) + "\n")
    fails = {n: len(f) for n, f in result.failures.items() if f}
    if fails:
        log.warning("failed origins per estimator: %s", fails)


def cmd_study(args):
    levels = None
    if args.levels:
        levels = tuple(float(v) if args.sweep == "theta" else int(v) for v in args.levels.split(","))
    estimators = tuple(n for n in args.estimators.split(",") if n)
    try:
        spec = StudySpec(sweep=args.sweep, levels=levels, d=args.d, p=args.p, q=args.q,
                         theta=args.theta, T=args.T, N=args.N, estimators=estimators,
                         penalty=args.penalty, master_seed=args.seed, n_jobs=args.threads)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None
    result = run_study(spec)
    atomic_write(args.output, result.to_csv())
    archive = Path(args.output).with_suffix(".json")
    atomic_write(archive, json.dumps(result.to_dict(), indent=1) + "\n")


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "forecast": cmd_forecast,
            "identify": cmd_identify, "cv": cmd_cv, "eval": cmd_eval, "study": cmd_study}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        for attr in ("input", "fit", "pi", "history"):
            if getattr(args, attr, None) is not None:
                _check_input(getattr(args, attr))
        _check_output(getattr(args, "output", None))
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        with threadpool_limits(limits=args.threads):
            COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SparseVarmaError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
