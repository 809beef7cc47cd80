"""Train/evaluate studies: seen and unseen coefficients, prior mixtures,
temporal extrapolation, combined reactions and noisy priors.

Every runner returns an :class:`ExperimentReport` (or a mapping of them) whose
per-row errors are measured on the test queries with ground-truth test
context.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .dataset import SampleSet, sample_points, sample_store, sample_time_split
from .metrics import ExperimentReport, l2_errors
from .model import IclModel, ModelConfig, TrainingTask, TrainResult, init_model, predict_zero_shot, train_model
from .noise import NoiseSpec
from .pde import CdrParams, Grid, InitialCondition, ParameterSpace, SolutionField, enumerate_parameters, solve_cdr
from .pinn import PinnConfig, PriorStore, build_prior

SYSTEMS = {
    "convection": ("beta",),
    "diffusion": ("nu",),
    "reaction": ("rho1",),
    "convection-diffusion": ("beta", "nu"),
    "reaction-diffusion": ("nu", "rho1"),
    "cdr": ("beta", "nu", "rho1"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    grid: Grid = Grid()
    ic: InitialCondition = InitialCondition()
    model: ModelConfig = ModelConfig()
    pinn: PinnConfig = PinnConfig()
    seed: int = 0

    def snapshot(self) -> dict:
        return asdict(self)


def desk_config(epochs: int = 3_000, seed: int = 0, **model_overrides) -> ExperimentConfig:
    """Settings that train to useful accuracy within minutes on one CPU core."""
    model = ModelConfig(lr=3e-3, lr_schedule="cosine", lr_final=3e-5, epochs=epochs, patience=0, seed=seed)
    return ExperimentConfig(model=replace(model, **model_overrides), seed=seed,
                            pinn=PinnConfig(seed=seed))


def system_space(system: str, low: int = 1, high: int = 5) -> ParameterSpace:
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}; choose from {sorted(SYSTEMS)}")
    return ParameterSpace.integer(**{name: (low, high) for name in SYSTEMS[system]})


_truths: dict = {}


def truth_field(alpha: CdrParams, ic: InitialCondition, grid: Grid) -> SolutionField:
    key = (alpha, ic, grid)
    if key not in _truths:
        _truths[key] = solve_cdr(alpha, ic, grid)
    return _truths[key]


def prepare(space: ParameterSpace, cfg: ExperimentConfig, pinn_ratio: float = 0.0,
            noise: Optional[NoiseSpec] = None) -> tuple[PriorStore, dict[CdrParams, SampleSet]]:
    alphas = enumerate_parameters(space)
    truths = {a: truth_field(a, cfg.ic, cfg.grid) for a in alphas}
    store = build_prior(space, pinn_ratio, noise, cfg.pinn, cfg.ic, cfg.grid, seed=cfg.seed, truths=truths)
    return store, sample_store(store, seed=cfg.seed)


def training_tasks(sets: dict[CdrParams, SampleSet]) -> list[TrainingTask]:
    return [TrainingTask(a.label(), s.train_points, s.context, s.queries) for a, s in sets.items()]


def train_on(sets: dict[CdrParams, SampleSet], cfg: ExperimentConfig) -> TrainResult:
    model = init_model(cfg.model)
    return train_model(model, training_tasks(sets), cfg.model)


def evaluate(model: IclModel, sets: dict[CdrParams, SampleSet], report: ExperimentReport, **extra) -> ExperimentReport:
    for alpha, s in sets.items():
        pred = predict_zero_shot(model, s.test_context, s.test_queries)
        report.add(alpha.label(), l2_errors(pred, s.test_queries[:, 2]), **extra)
    return report


def _finish(report: ExperimentReport, cfg: ExperimentConfig, start: float, result: Optional[TrainResult] = None):
    report.config = cfg.snapshot()
    report.wall_clock = time.perf_counter() - start
    if result is not None:
        h = np.asarray(result.history)
        report.extras.setdefault("train", {
            "epochs_run": result.epochs_run, "stopped_early": result.stopped_early,
            "train_seconds": result.seconds,
            "loss_first_100": float(h[:100].mean()) if h.size else None,
            "loss_last_100": float(h[-100:].mean()) if h.size else None})
    return report


def run_seen_interpolation(system: str, high: int = 5, prior: str = "numerical",
                           cfg: ExperimentConfig = ExperimentConfig(), low: int = 1,
                           experiment_id: Optional[str] = None) -> tuple[ExperimentReport, IclModel]:
    """Train on every coefficient vector of the integer range, test zero-shot on each."""
    start = time.perf_counter()
    ratio = {"numerical": 0.0, "pinn": 1.0}[prior]
    store, sets = prepare(system_space(system, low, high), cfg, pinn_ratio=ratio)
    result = train_on(sets, cfg)
    report = ExperimentReport(experiment_id or f"seen_{system}_{low}-{high}_{prior}")
    evaluate(result.model, sets, report)
    return _finish(report, cfg, start, result), result.model


def prior_error_report(store: PriorStore, experiment_id: str) -> ExperimentReport:
    """Errors of the stored prior fields themselves against ground truth (whole grid)."""
    report = ExperimentReport(experiment_id)
    for alpha in store.alphas:
        report.add(alpha.label(), l2_errors(store.priors[alpha].values, store.truths[alpha].values),
                   provenance=store.priors[alpha].provenance)
    return report


def run_prior_ratio_sweep(system: str, high: int = 20, ratios: Sequence[float] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0),
                          cfg: ExperimentConfig = ExperimentConfig(), low: int = 1
                          ) -> dict[str, ExperimentReport]:
    """One train/eval per PINN-prior ratio plus a ``prior`` entry for the PINN prior's own error."""
    space = system_space(system, low, high)
    reports: dict[str, ExperimentReport] = {}
    pinn_store = None
    for ratio in ratios:
        start = time.perf_counter()
        store, sets = prepare(space, cfg, pinn_ratio=ratio)
        if ratio == 1.0:
            pinn_store = store
        result = train_on(sets, cfg)
        report = ExperimentReport(f"ratio_{system}_{int(round(ratio * 100))}")
        evaluate(result.model, sets, report, ratio=ratio)
        reports[f"{ratio:g}"] = _finish(report, cfg, start, result)
    if pinn_store is None:
        pinn_store, _ = prepare(space, cfg, pinn_ratio=1.0)
    start = time.perf_counter()
    reports["prior"] = _finish(prior_error_report(pinn_store, f"ratio_{system}_prior"), cfg, start)
    return reports


def half_integers(low: float, high: float) -> list[float]:
    return [v + 0.5 for v in range(int(low), int(high))]


def run_unseen_params(system: str, trained_high: int = 20, test_values: Optional[Iterable[float]] = None,
                      cfg: ExperimentConfig = ExperimentConfig(), prior: str = "pinn",
                      model: Optional[IclModel] = None, trained_low: int = 1
                      ) -> tuple[ExperimentReport, IclModel]:
    """Test at coefficients never seen in training; rows beyond the trained
    range are flagged ``region='extrapolation'``."""
    if len(SYSTEMS[system]) != 1:
        raise ValueError("unseen-parameter study is defined for single-coefficient systems")
    start = time.perf_counter()
    result = None
    if model is None:
        _, sets = prepare(system_space(system, trained_low, trained_high), cfg,
                          pinn_ratio={"numerical": 0.0, "pinn": 1.0}[prior])
        result = train_on(sets, cfg)
        model = result.model
    if test_values is None:
        test_values = half_integers(trained_low, trained_high) + half_integers(trained_high, trained_high + 11)
    name = SYSTEMS[system][0]
    report = ExperimentReport(f"unseen_{system}")
    for i, value in enumerate(test_values):
        alpha = enumerate_parameters(ParameterSpace.explicit(**{name: [value]}))[0]
        truth = truth_field(alpha, cfg.ic, cfg.grid)
        s = sample_points(truth, truth, seed=cfg.seed + 10_000 + i)
        pred = predict_zero_shot(model, s.test_context, s.test_queries)
        region = "interpolation" if trained_low <= value <= trained_high else "extrapolation"
        report.add(alpha.label(), l2_errors(pred, s.test_queries[:, 2]), coefficient=float(value), region=region)
    return _finish(report, cfg, start, result), model


def run_time_extrapolation(betas: Optional[Iterable[float]] = None, trained_high: int = 20,
                           cfg: ExperimentConfig = ExperimentConfig(), prior: str = "pinn",
                           model: Optional[IclModel] = None, t_split: float = 0.6,
                           profile_beta: float = 10.5) -> tuple[ExperimentReport, IclModel]:
    """Context from t <= t_split only, queries from t > t_split, pure convection.

    The grid profile (truth and prediction over the late times) for
    ``profile_beta`` is stored in ``report.extras['profile']``.
    """
    start = time.perf_counter()
    result = None
    if model is None:
        _, sets = prepare(system_space("convection", 1, trained_high), cfg,
                          pinn_ratio={"numerical": 0.0, "pinn": 1.0}[prior])
        result = train_on(sets, cfg)
        model = result.model
    if betas is None:
        betas = half_integers(1, 17)
    report = ExperimentReport("time_extrapolation")
    for i, beta in enumerate(betas):
        alpha = CdrParams(beta=beta)
        truth = truth_field(alpha, cfg.ic, cfg.grid)
        context, queries = sample_time_split(truth, seed=cfg.seed + 20_000 + i, t_split=t_split)
        if np.any(context[:, 1] > t_split):
            raise AssertionError("time-extrapolation context contains points beyond the split")
        pred = predict_zero_shot(model, context, queries)
        report.add(alpha.label(), l2_errors(pred, queries[:, 2]), coefficient=float(beta),
                   context_t_max=float(context[:, 1].max()), query_t_min=float(queries[:, 1].min()))
        if np.isclose(beta, profile_beta):
            grid = cfg.grid
            late = np.nonzero(grid.t > t_split)[0]
            X, T = np.meshgrid(grid.x, grid.t[late], indexing="ij")
            full = predict_zero_shot(model, context, np.stack([X.ravel(), T.ravel()], axis=1))
            report.extras["profile"] = {"beta": float(beta), "t": grid.t[late].tolist(),
                                        "prediction": full.reshape(X.shape).tolist(),
                                        "truth": truth.values[:, late].tolist()}
    return _finish(report, cfg, start, result), model


REACTION_TERMS = ("fisher", "allen-cahn", "zeldovich")


def run_multi_reaction(high: int = 5, cfg: ExperimentConfig = ExperimentConfig(), low: int = 1,
                       test_values: Optional[Iterable[float]] = None) -> tuple[ExperimentReport, IclModel]:
    """Train on all rho1, rho2, rho3 combinations, test on each pure reaction term.

    Per-term means are stored in ``report.extras['per_term']``.
    """
    start = time.perf_counter()
    space = ParameterSpace.integer(rho1=(low, high), rho2=(low, high), rho3=(low, high))
    _, sets = prepare(space, cfg)
    result = train_on(sets, cfg)
    model = result.model
    values = list(range(low, high + 1)) if test_values is None else list(test_values)
    report = ExperimentReport("multi_reaction")
    i = 0
    for j, term in enumerate(REACTION_TERMS):
        for value in values:
            rho = [0.0, 0.0, 0.0]
            rho[j] = float(value)
            alpha = CdrParams(rho=tuple(rho))
            truth = truth_field(alpha, cfg.ic, cfg.grid)
            s = sample_points(truth, truth, seed=cfg.seed + 30_000 + i)
            i += 1
            pred = predict_zero_shot(model, s.test_context, s.test_queries)
            report.add(alpha.label(), l2_errors(pred, s.test_queries[:, 2]), term=term, coefficient=float(value))
    report.extras["per_term"] = {term: report.mean(report.select(term=term))._asdict() for term in REACTION_TERMS}
    return _finish(report, cfg, start, result), model


def run_noise_study(system: str = "reaction", high: int = 20, kinds: Sequence[str] = ("P2", "P3", "P4"),
                    levels: Sequence[float] = (0.01, 0.05, 0.10), cfg: ExperimentConfig = ExperimentConfig(),
                    low: int = 1, baseline: Optional[ExperimentReport] = None) -> dict[str, ExperimentReport]:
    """One run per (noise kind, level) plus the noiseless P1 baseline (key ``"P1"``)."""
    space = system_space(system, low, high)
    reports: dict[str, ExperimentReport] = {}
    if baseline is None:
        start = time.perf_counter()
        _, sets = prepare(space, cfg)
        result = train_on(sets, cfg)
        baseline = _finish(evaluate(result.model, sets, ExperimentReport(f"noise_{system}_P1")), cfg, start, result)
    reports["P1"] = baseline
    for kind in kinds:
        for level in levels:
            start = time.perf_counter()
            _, sets = prepare(space, cfg, noise=NoiseSpec(kind, level, seed=cfg.seed))
            result = train_on(sets, cfg)
            rid = f"noise_{system}_{kind}_{int(round(level * 100))}"
            reports[f"{kind}@{level:g}"] = _finish(
                evaluate(result.model, sets, ExperimentReport(rid), kind=kind, level=level), cfg, start, result)
    return reports


FAILURE_MODES = {
    "convection": dict(system="convection", low=30, high=40, ic=InitialCondition("one_plus_sin")),
    "reaction": dict(system="reaction", low=1, high=10, ic=InitialCondition("gaussian_bump")),
}


def run_failure_mode(which: str, cfg: ExperimentConfig = ExperimentConfig()) -> tuple[ExperimentReport, IclModel]:
    """Seen-parameter study on the classic PINN failure regimes with their initial conditions."""
    preset = FAILURE_MODES[which]
    cfg = replace(cfg, ic=preset["ic"])
    return run_seen_interpolation(preset["system"], preset["high"], "numerical", cfg, low=preset["low"],
                                  experiment_id=f"failure_{which}")
