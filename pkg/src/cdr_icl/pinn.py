"""Physics-informed networks as cheap, imperfect solution priors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .autodiff import NonFiniteLossError, Tensor, param_gradient
from .mlp import PinnNet, forward_tensors, init_pinn, jet_tensors, mlp_forward
from .noise import NoiseSpec, inject_noise
from .optim import AdamState, adam_step
from .pde import (CdrParams, Grid, InitialCondition, ParameterSpace, SolutionField,
                  enumerate_parameters, eval_initial_condition, solve_cdr)


class PinnDivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PinnConfig:
    loss_threshold: float = 1e-3
    max_epochs: int = 100
    lr: float = 1e-2
    n_collocation: int = 1000
    n_initial: int = 256
    n_boundary: int = 100
    widths: tuple[int, ...] = (2, 64, 64, 64, 1)
    features: str = "periodic"
    seed: int = 0

    def __post_init__(self):
        if self.loss_threshold <= 0:
            raise ValueError("loss_threshold must be positive")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")


@dataclass
class PinnPoints:
    initial_x: np.ndarray
    collocation_x: np.ndarray
    collocation_t: np.ndarray
    boundary_t: np.ndarray

    def __post_init__(self):
        for name in ("initial_x", "collocation_x", "boundary_t"):
            if np.size(getattr(self, name)) == 0:
                raise ValueError(f"PINN point set {name} is empty")


def pinn_points(grid: Grid, config: PinnConfig, seed: int) -> PinnPoints:
    """Initial points on the t=0 nodes, boundary points on the time levels,
    collocation points drawn from the grid nodes with t > 0."""
    rng = np.random.default_rng(seed)
    ix0 = np.linspace(0, grid.nx - 1, min(config.n_initial, grid.nx)).round().astype(int)
    it_b = np.linspace(0, grid.nt - 1, min(config.n_boundary, grid.nt)).round().astype(int)
    interior = np.arange(grid.size).reshape(grid.nx, grid.nt)[:, 1:].reshape(-1)
    chosen = rng.choice(interior, size=config.n_collocation, replace=False)
    cx, ct = grid.coords(chosen)
    return PinnPoints(grid.x[ix0], cx, ct, grid.t[it_b])


class PinnLoss(NamedTuple):
    total: float
    initial: float
    residual: float
    boundary: float


def _loss_terms(net: PinnNet, tensors: Mapping[str, Tensor], points: PinnPoints,
                params: CdrParams, ic: InitialCondition):
    u0 = eval_initial_condition(ic, points.initial_x)
    pred0 = forward_tensors(net, tensors, points.initial_x, np.zeros_like(points.initial_x))
    loss_u = (pred0 - u0).square().mean()

    u, u_x, u_t, u_xx = jet_tensors(net, tensors, points.collocation_x, points.collocation_t)
    r1, r2, r3 = params.rho
    reaction = r1 * u * (1.0 - u) + r2 * u * (1.0 - u.square()) + r3 * u.square() * (1.0 - u)
    residual = u_t + params.beta * u_x - params.nu * u_xx - reaction
    loss_f = residual.square().mean()

    tb = points.boundary_t
    left = forward_tensors(net, tensors, np.zeros_like(tb), tb)
    right = forward_tensors(net, tensors, np.full_like(tb, 2.0 * np.pi), tb)
    loss_b = (left - right).square().mean()
    return loss_u, loss_f, loss_b


def pinn_loss(net: PinnNet, points: PinnPoints, params: CdrParams,
              ic: InitialCondition = InitialCondition()) -> PinnLoss:
    tensors = {k: Tensor(v) for k, v in net.params.items()}
    lu, lf, lb = (float(term.data) for term in _loss_terms(net, tensors, points, params, ic))
    for name, value in (("L_u", lu), ("L_f", lf), ("L_b", lb)):
        if not math.isfinite(value):
            raise NonFiniteLossError(f"PINN loss component {name} is {value} for alpha=({params.label()})")
    return PinnLoss(lu + lf + lb, lu, lf, lb)


def pinn_total_loss_tensor(net: PinnNet, tensors, points, params, ic) -> Tensor:
    lu, lf, lb = _loss_terms(net, tensors, points, params, ic)
    return lu + lf + lb


class PinnResult(NamedTuple):
    net: PinnNet
    field: SolutionField
    final_loss: float
    history: list


def evaluate_on_grid(net: PinnNet, grid: Grid) -> np.ndarray:
    X, T = np.meshgrid(grid.x, grid.t, indexing="ij")
    return mlp_forward(net, X.reshape(-1), T.reshape(-1)).reshape(grid.nx, grid.nt)


def train_pinn(params: CdrParams, config: PinnConfig = PinnConfig(),
               ic: InitialCondition = InitialCondition(), grid: Grid = Grid(),
               seed: Optional[int] = None) -> PinnResult:
    """Full-batch Adam on L_u + L_f + L_b; one epoch is one gradient step.

    Stops when the loss drops below ``config.loss_threshold`` or after
    ``config.max_epochs`` steps.
    """
    seed = config.seed if seed is None else seed
    net = init_pinn(config.widths, seed=seed, features=config.features)
    points = pinn_points(grid, config, seed)
    state = AdamState(lr=config.lr)
    history = []

    def loss_fn(tensors):
        return pinn_total_loss_tensor(net, tensors, points, params, ic)

    for epoch in range(config.max_epochs + 1):
        value, grads = param_gradient(loss_fn, net.params, batch=f"alpha=({params.label()}) epoch {epoch}")
        if value > 1e6:
            raise PinnDivergenceError(f"PINN diverged (loss {value:.3g}) at epoch {epoch} "
                                      f"for alpha=({params.label()})")
        history.append(value)
        if value < config.loss_threshold or epoch == config.max_epochs:
            break
        adam_step(state, net.params, grads)

    values = evaluate_on_grid(net, grid)
    if not np.all(np.isfinite(values)):
        raise PinnDivergenceError(f"PINN produced non-finite values for alpha=({params.label()})")
    return PinnResult(net, SolutionField(grid, values, params, "pinn", ic), history[-1], history)


@dataclass
class PriorStore:
    """Prior and ground-truth fields for every coefficient vector of a space."""

    space: ParameterSpace
    grid: Grid
    ic: InitialCondition
    pinn_ratio: float
    noise: Optional[NoiseSpec]
    priors: dict[CdrParams, SolutionField] = field(default_factory=dict)
    truths: dict[CdrParams, SolutionField] = field(default_factory=dict)

    def __len__(self):
        return len(self.priors)

    @property
    def alphas(self) -> list[CdrParams]:
        return list(self.priors)

    def provenance_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for f in self.priors.values():
            counts[f.provenance] = counts.get(f.provenance, 0) + 1
        return counts


def pinn_count(ratio: float, n: int) -> int:
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"PINN ratio must lie in [0, 1], got {ratio}")
    return int(math.floor(ratio * n + 0.5))


def build_prior(space: ParameterSpace, pinn_ratio: float = 0.0, noise: Optional[NoiseSpec] = None,
                pinn_config: PinnConfig = PinnConfig(), ic: InitialCondition = InitialCondition(),
                grid: Grid = Grid(), seed: int = 0, truths: Optional[Mapping[CdrParams, SolutionField]] = None
                ) -> PriorStore:
    """Assemble the prior: a seeded subset of ``round(ratio * |space|)`` vectors
    gets PINN fields, the rest numerical fields (optionally noise-corrupted).

    Precomputed ground truth may be passed in ``truths`` to skip re-solving.
    """
    alphas = enumerate_parameters(space)
    n_pinn = pinn_count(pinn_ratio, len(alphas))
    rng = np.random.default_rng(seed)
    pinn_set = set(rng.permutation(len(alphas))[:n_pinn].tolist())
    store = PriorStore(space, grid, ic, pinn_ratio, noise)
    for i, alpha in enumerate(alphas):
        truth = truths[alpha] if truths is not None and alpha in truths else solve_cdr(alpha, ic, grid)
        if i in pinn_set:
            try:
                prior = train_pinn(alpha, pinn_config, ic, grid, seed=pinn_config.seed + i).field
            except (PinnDivergenceError, NonFiniteLossError) as exc:
                raise PinnDivergenceError(f"alpha #{i} ({alpha.label()}): {exc}") from exc
        elif noise is not None and noise.kind != "P1":
            prior = inject_noise(truth, noise, stream=i)
        else:
            prior = truth
        store.priors[alpha] = prior
        store.truths[alpha] = truth
    return store
