"""Command-line front end.

Every subcommand writes its results into ``--out`` (a directory) together
with a JSON document whose top-level keys are ``manifest`` and one of
``metrics``, ``curve`` or ``summary``.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 property-suite failure.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import SUITES, run_suite
from .data_io import GroupedTable, SchemaError, read_table, write_json, write_rows, write_table
from .dist1d import Gaussian
from .fairness_metrics import (
    WEIGHT_SCHEMES,
    as_distributions,
    ks_unfairness,
    unfairness_estimator,
    weight_scheme,
    weighted_mse,
)
from .linear_bias import (
    TAU_RULES,
    SimulationProtocol,
    SingularDesignError,
    run_simulation_study,
    sample_size_check,
    sample_size_threshold,
)
from .oracle import OracleModel, tradeoff_curve
from .postprocess import DEFAULT_JITTER, PostProcessor, calibrate

log = logging.getLogger("riskfair")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_SUITE = 0, 1, 2, 3


class NumericalError(RuntimeError):
    pass


# --- flag parsing ------------------------------------------------------------------


def float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def alpha_grid(text: str) -> list[float]:
    """``start:stop:num`` (inclusive linspace) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("alpha grid must be start:stop:num")
        try:
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad alpha grid {text!r}")
        if num < 1:
            raise argparse.ArgumentTypeError("alpha grid needs num >= 1")
        grid = np.linspace(start, stop, num).tolist()
    else:
        grid = float_list(text)
    if not grid or any(not 0.0 <= a <= 1.0 for a in grid):
        raise argparse.ArgumentTypeError("alphas must be non-empty and lie in [0, 1]")
    return grid


def resolve_weights(spec: str, counts) -> np.ndarray:
    if spec in WEIGHT_SCHEMES:
        return weight_scheme(spec, counts)
    try:
        w = np.array(float_list(spec))
    except argparse.ArgumentTypeError as exc:
        raise ValueError(str(exc)) from None
    if w.size != len(counts):
        raise ValueError(f"{w.size} explicit weights given for {len(counts)} groups")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"explicit weights must be non-negative and sum to 1, got sum {float(w.sum())!r}")
    return w / w.sum()


def manifest(args: argparse.Namespace, outputs: list, **extra) -> dict:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
              if k != "func"}
    return {"subcommand": args.command, "config": config, "seed": getattr(args, "seed", None),
            "version": __version__, "outputs": [str(p) for p in outputs], **extra}


def _finite(name: str, values) -> None:
    if not np.all(np.isfinite(np.asarray(values, dtype=float))):
        raise NumericalError(f"non-finite values in {name}")


# --- subcommands ---------------------------------------------------------------------


def cmd_simulate_linear(args) -> int:
    sizes = tuple(args.group_sizes) if args.group_sizes else (100,) * args.K
    protocol = SimulationProtocol(
        p=args.p, K=args.K, group_sizes=sizes, sigma=args.sigma, nur=args.nur,
        alphas=tuple(args.alphas), repetitions=args.reps, tau_rule=args.tau_rule,
        seed=args.seed, t=args.t, simplified=args.delta_variant == "simplified")
    cfg = protocol.rate_config()
    summary = run_simulation_study(protocol)
    _finite("simulation risk", summary.risk)
    out = Path(args.out)
    csv_path, json_path = out / "curve.csv", out / "summary.json"
    rows = zip(summary.alphas, summary.mean_risk, summary.std_risk, summary.mean_unfairness,
               summary.std_unfairness, summary.oracle_risk, summary.oracle_unfairness,
               summary.tau.mean(axis=0), summary.violations())
    write_rows(csv_path, ["alpha", "mean_risk", "std_risk", "mean_unfairness",
                          "std_unfairness", "oracle_risk", "oracle_unfairness", "mean_tau",
                          "violation_rate"], rows)
    write_json(json_path, {
        "manifest": manifest(args, [csv_path, json_path]),
        "summary": {
            "delta_r": summary.delta_r,
            "oracle_unfairness_at_alpha_1": summary.target_unfairness,
            "sample_size_ok": sample_size_check(cfg),
            "sample_size_threshold": sample_size_threshold(cfg),
            "max_violation_rate": float(summary.violations().max()),
        },
    })
    print(f"wrote {csv_path} and {json_path} (delta_r={summary.delta_r:.6g})")
    return EXIT_OK


def _oracle_model(args) -> tuple[OracleModel, dict]:
    if args.sample_csv:
        table = read_table(args.sample_csv)
        values = table.prediction if table.prediction is not None else table.target
        if values is None:
            raise SchemaError("sample CSV needs a 'prediction' or 'target' column")
        w = resolve_weights(args.weights, table.counts())
        return OracleModel(tuple(as_distributions(table.split(values))), w), table.label_map()
    if args.means is None or args.stds is None:
        raise ValueError("give either --sample-csv or both --means and --stds")
    if len(args.means) != len(args.stds):
        raise ValueError("--means and --stds differ in length")
    k = len(args.means)
    spec = args.weights if args.weights != "proportional" else "equal"
    w = resolve_weights(spec, np.ones(k))
    return OracleModel(tuple(Gaussian(m, s) for m, s in zip(args.means, args.stds)), w), {}


def cmd_oracle_curve(args) -> int:
    model, labels = _oracle_model(args)
    curve = tradeoff_curve(model, args.alphas, args.q, args.grid_size)
    _finite("trade-off curve", [(p.risk, p.unfairness) for p in curve])
    out = Path(args.out)
    csv_path, json_path = out / "curve.csv", out / "curve.json"
    write_rows(csv_path, ["alpha", "risk", "unfairness"],
               [(p.alpha, p.risk, p.unfairness) for p in curve])
    write_json(json_path, {
        "manifest": manifest(args, [csv_path, json_path], group_labels=labels,
                             weights=model.w),
        "curve": [{"alpha": p.alpha, "risk": p.risk, "unfairness": p.unfairness}
                  for p in curve],
    })
    print(f"wrote {csv_path} ({len(curve)} points)")
    return EXIT_OK


def _fairness_metrics(table: GroupedTable, preds: np.ndarray, w, q: float,
                      grid_size: int) -> dict:
    groups = table.split(preds)
    metrics = {
        "u_hat": unfairness_estimator(groups, w, q, grid_size),
        "u_ks": ks_unfairness(groups, w),
        "group_counts": table.counts(),
        "group_means": [float(np.mean(g)) for g in groups],
    }
    if table.target is not None:
        metrics["weighted_mse"] = weighted_mse(zip(groups, table.split(table.target)), w)
    return metrics


def cmd_postprocess(args) -> int:
    calib = read_table(args.calib_csv, require_prediction=True)
    evaluation = read_table(args.eval_csv, require_prediction=True,
                            known_labels=calib.labels)
    w = resolve_weights(args.weights, calib.counts())
    cal = calibrate(calib.split(calib.prediction), w, args.jitter_sigma, args.seed)
    pp = PostProcessor(cal)
    base = evaluation.prediction
    new = base.copy()
    if args.alpha < 1.0:
        for s in range(evaluation.n_groups):
            idx = np.flatnonzero(evaluation.groups == s)
            if idx.size:
                new[idx] = pp.predict_alpha(base[idx], s, args.alpha)
    _finite("post-processed predictions", new)
    out = Path(args.out)
    csv_path, json_path = out / "predictions.csv", out / "metrics.json"
    result = GroupedTable(evaluation.features, evaluation.groups, evaluation.labels,
                          evaluation.target, new,
                          {**evaluation.extra, "base_prediction": list(base)})
    write_table(csv_path, result)
    write_json(json_path, {
        "manifest": manifest(args, [csv_path, json_path], group_labels=calib.label_map(),
                             weights=w),
        "metrics": {
            "input": _fairness_metrics(evaluation, base, w, args.q, args.grid_size),
            "output": _fairness_metrics(evaluation, new, w, args.q, args.grid_size),
        },
    })
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


_ALPHA_IN_NAME = re.compile(r"alpha[_=-]?([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)")


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    if args.frontier_dir:
        files = []
        for path in sorted(Path(args.frontier_dir).glob("*.csv")):
            m = _ALPHA_IN_NAME.search(path.stem)
            if m:
                files.append((float(m.group(1)), path))
        if not files:
            raise SchemaError(f"no alpha<value>.csv files in {args.frontier_dir}")
        rows = []
        for alpha, path in sorted(files):
            table = read_table(path, require_target=True, require_prediction=True)
            w = resolve_weights(args.weights, table.counts())
            met = _fairness_metrics(table, table.prediction, w, args.q, args.grid_size)
            rows.append((alpha, met["weighted_mse"], met["u_hat"]))
        csv_path, json_path = out / "frontier.csv", out / "frontier.json"
        write_rows(csv_path, ["alpha", "mse", "u_hat"], rows)
        write_json(json_path, {
            "manifest": manifest(args, [csv_path, json_path],
                                 inputs=[str(p) for _, p in sorted(files)]),
            "curve": [{"alpha": a, "mse": m, "u_hat": u} for a, m, u in rows],
        })
        print(f"wrote {csv_path} ({len(rows)} points)")
        return EXIT_OK
    if not args.predictions:
        raise ValueError("give --predictions or --frontier-dir")
    table = read_table(args.predictions, require_target=True, require_prediction=True)
    w = resolve_weights(args.weights, table.counts())
    met = _fairness_metrics(table, table.prediction, w, args.q, args.grid_size)
    json_path = out / "metrics.json"
    write_json(json_path, {
        "manifest": manifest(args, [json_path], group_labels=table.label_map(), weights=w),
        "metrics": met,
    })
    print(f"mse={met['weighted_mse']:.6g} u_hat={met['u_hat']:.6g} u_ks={met['u_ks']:.6g}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_suite(args.suite, args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{args.suite}: {len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_SUITE


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskfair", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate-linear", help="linear group-bias simulation study")
    sim.add_argument("--p", type=int, default=10)
    sim.add_argument("--K", type=int, default=5)
    sim.add_argument("--group-sizes", type=int_list, default=None,
                     help="comma-separated n_s (default: 100 per group)")
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--nur", type=float, default=0.5, help="noise-to-unfairness ratio")
    sim.add_argument("--alphas", type=alpha_grid, default=alpha_grid("0:1:21"))
    sim.add_argument("--reps", type=int, default=50)
    sim.add_argument("--tau-rule", choices=TAU_RULES, default="proposed")
    sim.add_argument("--t", type=float, default=0.0, help="confidence parameter of the rate")
    sim.add_argument("--delta-variant", choices=("full", "simplified"), default="simplified")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", type=Path, required=True)
    sim.set_defaults(func=cmd_simulate_linear)

    orc = sub.add_parser("oracle-curve", help="risk/unfairness curve of the oracle family")
    orc.add_argument("--means", type=float_list)
    orc.add_argument("--stds", type=float_list)
    orc.add_argument("--sample-csv", type=Path,
                     help="per-group samples of f* in the 'prediction' (or 'target') column")
    orc.add_argument("--weights", default="proportional",
                     help="proportional|inverse|equal or explicit list; "
                          "Gaussian models default to equal")
    orc.add_argument("--alphas", type=alpha_grid, default=alpha_grid("0:1:21"))
    orc.add_argument("--q", type=float, default=2.0)
    orc.add_argument("--grid-size", type=int, default=100_000)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--out", type=Path, required=True)
    orc.set_defaults(func=cmd_oracle_curve)

    post = sub.add_parser("postprocess", help="fair post-processing of base predictions")
    post.add_argument("--calib-csv", type=Path, required=True)
    post.add_argument("--eval-csv", type=Path, required=True)
    post.add_argument("--alpha", type=float, default=0.0)
    post.add_argument("--weights", default="proportional")
    post.add_argument("--jitter-sigma", type=float, default=DEFAULT_JITTER)
    post.add_argument("--q", type=float, default=2.0, help="exponent of the reported U estimate")
    post.add_argument("--grid-size", type=int, default=10_000)
    post.add_argument("--seed", type=int, default=0)
    post.add_argument("--out", type=Path, required=True)
    post.set_defaults(func=cmd_postprocess)

    ev = sub.add_parser("evaluate", help="risk and fairness metrics of predictions")
    src = ev.add_mutually_exclusive_group(required=True)
    src.add_argument("--predictions", type=Path)
    src.add_argument("--frontier-dir", type=Path,
                     help="directory of per-alpha CSVs named like alpha_0.25.csv")
    ev.add_argument("--weights", default="proportional")
    ev.add_argument("--q", type=float, default=2.0)
    ev.add_argument("--grid-size", type=int, default=10_000)
    ev.add_argument("--out", type=Path, required=True)
    ev.set_defaults(func=cmd_evaluate)

    chk = sub.add_parser("check", help="run a property suite")
    chk.add_argument("--suite", choices=SUITES, required=True)
    chk.add_argument("--seed", type=int, default=0)
    chk.set_defaults(func=cmd_check)
    return parser


def _validate(args) -> None:
    if args.command == "postprocess":
        if not 0.0 <= args.alpha <= 1.0:
            raise ValueError("--alpha must lie in [0, 1]")
        if args.jitter_sigma <= 0:
            raise ValueError("--jitter-sigma must be positive")
    if args.command == "simulate-linear":
        if args.group_sizes and len(args.group_sizes) != args.K:
            raise ValueError(f"--group-sizes has {len(args.group_sizes)} entries, --K is {args.K}")
        if args.sigma <= 0 or args.nur <= 0:
            raise ValueError("--sigma and --nur must be positive")
    if getattr(args, "q", 2.0) < 1:
        raise ValueError("--q must be >= 1")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
        return args.func(args)
    except (SingularDesignError, NumericalError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
