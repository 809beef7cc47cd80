"""Command-line driver: data generation, training, evaluation and the studies.

Errors exit with status 1 (2 for bad arguments) after printing one JSON line
``{"error": <type>, "message": <text>}`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXPERIMENTS = ("seen", "ratio", "unseen", "time", "multi", "noise", "failure-convection", "failure-reaction")


def _add_space_args(p: argparse.ArgumentParser, default_high: int = 5) -> None:
    p.add_argument("--system", default="reaction")
    p.add_argument("--low", type=int, default=1)
    p.add_argument("--high", type=int, default=default_high)


def _add_global_args(p: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--config", default=d(None), help="INI file with [run], [grid], [ic], [model] and [pinn] sections")
    p.add_argument("--seed", type=int, default=d(None), help="overrides [run] seed")
    p.add_argument("--out-dir", default=d("out"))
    p.add_argument("--threads", type=int, default=d(None), help="BLAS/OpenMP thread cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdr-icl", description=__doc__.splitlines()[0])
    _add_global_args(parser, defaults=True)
    # global flags are accepted after the subcommand too; SUPPRESS keeps the
    # subparser from overwriting values given before it
    common = argparse.ArgumentParser(add_help=False)
    _add_global_args(common, defaults=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-truth", parents=[common], help="solve every coefficient vector of a range")
    _add_space_args(p)

    p = sub.add_parser("gen-prior", parents=[common], help="build prior fields and sampled point sets")
    _add_space_args(p)
    p.add_argument("--pinn-ratio", type=float, default=0.0)
    p.add_argument("--noise", default="P1", choices=("P1", "P2", "P3", "P4"))
    p.add_argument("--noise-level", type=float, default=0.0)

    p = sub.add_parser("train", parents=[common], help="train the in-context model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", help="output path (default <out-dir>/model.ckpt)")

    p = sub.add_parser("eval", parents=[common], help="zero-shot evaluation of a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--id", default="eval")
    p.add_argument("--svg", action="store_true")

    p = sub.add_parser("experiment", parents=[common], help="run one of the studies end to end")
    p.add_argument("id", choices=EXPERIMENTS)
    _add_space_args(p, default_high=None)
    p.add_argument("--prior", default="numerical", choices=("numerical", "pinn"))
    p.add_argument("--svg", action="store_true")

    p = sub.add_parser("report", parents=[common], help="summarize report CSV files")
    p.add_argument("reports", nargs="+")
    p.add_argument("--svg", action="store_true")
    return parser


def _settings(args):
    from .config import load_config
    from .experiments import ExperimentConfig
    from dataclasses import replace

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed, model=replace(cfg.model, seed=args.seed),
                      pinn=replace(cfg.pinn, seed=args.seed))
    return cfg


def _cmd_gen(args, cfg, pinn_ratio=0.0, noise=None):
    from .dataset import save_dataset
    from .experiments import prepare, system_space

    store, sets = prepare(system_space(args.system, args.low, args.high), cfg, pinn_ratio, noise)
    path = os.path.join(args.out_dir, "truth" if args.command == "gen-truth" else "dataset")
    save_dataset(store, sets, path)
    return {"dataset": path, "n_alpha": len(store.alphas), "provenance": store.provenance_counts()}


def _cmd_train(args, cfg):
    from .dataset import load_dataset
    from .experiments import training_tasks
    from .model import init_model, save_checkpoint, train_model

    _, sets = load_dataset(args.data)
    result = train_model(init_model(cfg.model), training_tasks(sets), cfg.model)
    path = args.checkpoint or os.path.join(args.out_dir, "model.ckpt")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    save_checkpoint(result.model, path)
    return {"checkpoint": path, "epochs_run": result.epochs_run, "stopped_early": result.stopped_early,
            "final_loss": result.history[-1] if result.history else None, "seconds": result.seconds}


def _cmd_eval(args, cfg):
    from .dataset import load_dataset
    from .experiments import evaluate
    from .metrics import ExperimentReport
    from .model import load_checkpoint

    _, sets = load_dataset(args.data)
    report = evaluate(load_checkpoint(args.checkpoint), sets, ExperimentReport(args.id))
    report.config = cfg.snapshot()
    path = report.write(args.out_dir, svg=args.svg)
    return {"report": str(path), **{k: v for k, v in report.summary().items() if k not in ("config", "extras")}}


def _cmd_experiment(args, cfg):
    from . import experiments as ex

    high = args.high
    if args.id == "seen":
        reports = [ex.run_seen_interpolation(args.system, high or 5, args.prior, cfg, low=args.low)[0]]
    elif args.id == "ratio":
        reports = list(ex.run_prior_ratio_sweep(args.system, high or 20, cfg=cfg, low=args.low).values())
    elif args.id == "unseen":
        reports = [ex.run_unseen_params(args.system, high or 20, cfg=cfg, prior=args.prior, trained_low=args.low)[0]]
    elif args.id == "time":
        report = ex.run_time_extrapolation(trained_high=high or 20, cfg=cfg, prior=args.prior)[0]
        _write_profile(report, args.out_dir)
        reports = [report]
    elif args.id == "multi":
        reports = [ex.run_multi_reaction(high or 5, cfg, low=args.low)[0]]
    elif args.id == "noise":
        reports = list(ex.run_noise_study(args.system, high or 20, cfg=cfg, low=args.low).values())
    else:
        reports = [ex.run_failure_mode(args.id.split("-", 1)[1], cfg)[0]]
    written = [str(r.write(args.out_dir, svg=args.svg)) for r in reports]
    return {"reports": written, "mean_rel_err": {r.experiment_id: r.mean().rel for r in reports}}


def _write_profile(report, out_dir) -> None:
    import numpy as np

    prof = report.extras.pop("profile", None)
    if prof is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    pred, truth = np.asarray(prof["prediction"]), np.asarray(prof["truth"])
    rows = []
    for j, t in enumerate(prof["t"]):
        for i in range(pred.shape[0]):
            rows.append((i, t, pred[i, j], truth[i, j]))
    path = os.path.join(out_dir, f"profile_beta_{prof['beta']:g}.csv")
    np.savetxt(path, np.array(rows), fmt="%.17g", delimiter=",", header="ix,t,u_pred,u_truth", comments="")
    report.extras["profile_file"] = path


def _cmd_report(args, cfg):
    import math

    from .metrics import ErrorPair, ExperimentReport, read_report_csv

    out = {}
    for path in args.reports:
        name = os.path.basename(path)
        rid = name[len("report_"):-4] if name.startswith("report_") and name.endswith(".csv") else name
        report = ExperimentReport(rid)
        for label, a, r in read_report_csv(path):
            report.add(label, ErrorPair(a, r))
        if args.svg:
            from .metrics import plot_report_svg

            os.makedirs(args.out_dir, exist_ok=True)
            plot_report_svg(report, os.path.join(args.out_dir, f"report_{rid}.svg"))
        m, s = report.mean(), report.std()
        out[rid] = {"n": len(report.rows), "mean_abs_err": m.abs, "std_abs_err": s.abs,
                    "mean_rel_err": None if math.isnan(m.rel) else m.rel,
                    "std_rel_err": None if math.isnan(s.rel) else s.rel}
    return out


def _limit_threads(n: int) -> None:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            print(json.dumps({"error": "UsageError", "message": "invalid command line"}), file=sys.stderr)
        return int(exc.code or 0)
    if args.threads is not None:
        if args.threads < 1:
            print(json.dumps({"error": "UsageError", "message": "--threads must be >= 1"}), file=sys.stderr)
            return 2
        _limit_threads(args.threads)
    try:
        cfg = _settings(args)
        if args.command == "gen-truth":
            result = _cmd_gen(args, cfg)
        elif args.command == "gen-prior":
            from .noise import NoiseSpec

            noise = None if args.noise == "P1" else NoiseSpec(args.noise, args.noise_level, seed=cfg.seed)
            result = _cmd_gen(args, cfg, args.pinn_ratio, noise)
        else:
            result = {"train": _cmd_train, "eval": _cmd_eval, "experiment": _cmd_experiment,
                      "report": _cmd_report}[args.command](args, cfg)
    except Exception as exc:  # one machine-readable line, nonzero status
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(result, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
