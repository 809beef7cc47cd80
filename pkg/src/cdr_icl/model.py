"""In-context transformer regressing u(x, t) at query points from observed
(x, t, u) context triples.

Context and query tokens pass through the same stack of pre-norm blocks.
Inside each block context tokens attend to each other and query tokens attend
to the context tokens with the same projections; queries never attend to
queries, so every prediction depends only on its own coordinates and on the
(unordered) context.
"""

from __future__ import annotations

import json
import math
import struct
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .autodiff import NonFiniteLossError, Tensor, concat, layer_norm, param_gradient, softmax
from .optim import AdamState, adam_step


class EmptyContextError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    layers: int = 3
    hidden: int = 32
    heads: int = 1
    ffn: int = 64
    lr: float = 1e-5
    epochs: int = 20_000
    seed: int = 0
    lr_schedule: str = "constant"  # or "cosine"
    lr_final: float = 0.0  # cosine floor
    warmup: int = 0
    patience: int = 2_000
    min_improvement: float = 0.01
    resample_split: bool = True
    context_fraction: float = 0.3

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.hidden % self.heads:
            raise ValueError(f"hidden size {self.hidden} is not divisible by {self.heads} heads")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr schedule {self.lr_schedule!r}")


PHYSICAL_DOMAIN = ((0.0, 2.0 * math.pi), (0.0, 1.0))
NORMALIZED_DOMAIN = ((-1.0, 1.0), (-1.0, 1.0))


def normalize_coords(x, t, domain=PHYSICAL_DOMAIN):
    """Map ``domain`` (x range, t range) affinely onto [-1, 1] x [-1, 1].

    With the default domain this is x / pi - 1 and 2 t - 1; coordinates that
    are already normalized pass through unchanged with ``NORMALIZED_DOMAIN``.
    """
    (x0, x1), (t0, t1) = domain
    return (2.0 * (np.asarray(x) - x0) / (x1 - x0) - 1.0,
            2.0 * (np.asarray(t) - t0) / (t1 - t0) - 1.0)


def denormalize_coords(xn, tn, domain=PHYSICAL_DOMAIN):
    (x0, x1), (t0, t1) = domain
    return (x0 + (np.asarray(xn) + 1.0) * (x1 - x0) / 2.0,
            t0 + (np.asarray(tn) + 1.0) * (t1 - t0) / 2.0)


@dataclass
class IclModel:
    config: ModelConfig
    params: dict[str, np.ndarray]

    def n_parameters(self) -> int:
        return count_parameters(self)

    def copy(self) -> "IclModel":
        return IclModel(self.config, {k: v.copy() for k, v in self.params.items()})


def _uniform(rng, fan_in, shape):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_model(config: ModelConfig = ModelConfig()) -> IclModel:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); readout starts at zero."""
    rng = np.random.default_rng(config.seed)
    h, f = config.hidden, config.ffn
    p: dict[str, np.ndarray] = {
        "ctx_W": _uniform(rng, 3, (3, h)), "ctx_b": _uniform(rng, 3, (h,)),
        "qry_W": _uniform(rng, 2, (2, h)), "qry_b": _uniform(rng, 2, (h,)),
    }
    for l in range(config.layers):
        p[f"L{l}.ln1_g"], p[f"L{l}.ln1_b"] = np.ones(h), np.zeros(h)
        for name in ("q", "k", "v", "o"):
            p[f"L{l}.W{name}"] = _uniform(rng, h, (h, h))
            p[f"L{l}.b{name}"] = _uniform(rng, h, (h,))
        p[f"L{l}.ln2_g"], p[f"L{l}.ln2_b"] = np.ones(h), np.zeros(h)
        p[f"L{l}.W1"], p[f"L{l}.b1"] = _uniform(rng, h, (h, f)), _uniform(rng, h, (f,))
        p[f"L{l}.W2"], p[f"L{l}.b2"] = _uniform(rng, f, (f, h)), _uniform(rng, f, (h,))
    p["lnf_g"], p["lnf_b"] = np.ones(h), np.zeros(h)
    p["out_W"], p["out_b"] = np.zeros((h, 1)), np.zeros(1)
    return IclModel(config, p)


def count_parameters(model_or_params) -> int:
    params = model_or_params.params if isinstance(model_or_params, IclModel) else model_or_params
    return int(sum(np.size(v) for v in params.values()))


def _attention(q: Tensor, k: Tensor, v: Tensor, heads: int) -> Tensor:
    n, h = q.shape
    m = k.shape[0]
    d = h // heads
    if heads == 1:
        return softmax((q @ k.T) * (1.0 / math.sqrt(d))) @ v
    qh = q.reshape(n, heads, d).transpose((1, 0, 2))
    kh = k.reshape(m, heads, d).transpose((1, 2, 0))
    vh = v.reshape(m, heads, d).transpose((1, 0, 2))
    out = softmax((qh @ kh) * (1.0 / math.sqrt(d))) @ vh
    return out.transpose((1, 0, 2)).reshape(n, h)


def forward_tensors(config: ModelConfig, p: Mapping[str, Tensor], context: np.ndarray,
                    queries: np.ndarray) -> Tensor:
    """Predictions for ``queries`` (n, 2) given ``context`` (m, 3), raw coordinates."""
    context = np.asarray(context, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    if context.ndim != 2 or context.shape[0] == 0:
        raise EmptyContextError("model needs at least one context point")
    m = context.shape[0]
    cx, ct = normalize_coords(context[:, 0], context[:, 1])
    qx, qt = normalize_coords(queries[:, 0], queries[:, 1])
    ctx_in = np.stack([cx, ct, context[:, 2]], axis=1)
    qry_in = np.stack([qx, qt], axis=1)

    tokens = concat([Tensor(ctx_in) @ p["ctx_W"] + p["ctx_b"],
                     Tensor(qry_in) @ p["qry_W"] + p["qry_b"]])
    for l in range(config.layers):
        pre = f"L{l}."
        hdd = layer_norm(tokens, p[pre + "ln1_g"], p[pre + "ln1_b"])
        q = hdd @ p[pre + "Wq"] + p[pre + "bq"]
        ctx_h = hdd[:m]
        k = ctx_h @ p[pre + "Wk"] + p[pre + "bk"]
        v = ctx_h @ p[pre + "Wv"] + p[pre + "bv"]
        att = _attention(q, k, v, config.heads)
        tokens = tokens + att @ p[pre + "Wo"] + p[pre + "bo"]
        hdd = layer_norm(tokens, p[pre + "ln2_g"], p[pre + "ln2_b"])
        tokens = tokens + (hdd @ p[pre + "W1"] + p[pre + "b1"]).gelu() @ p[pre + "W2"] + p[pre + "b2"]
    out = layer_norm(tokens[m:], p["lnf_g"], p["lnf_b"]) @ p["out_W"] + p["out_b"]
    return out.reshape(-1)


def model_forward(model: IclModel, context, queries) -> np.ndarray:
    """Predicted u at each query (x, t); extra query columns are ignored."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.shape[0] == 0:
        return np.zeros(0)
    wrapped = {k: Tensor(v) for k, v in model.params.items()}
    return forward_tensors(model.config, wrapped, context, queries[:, :2]).data.copy()


def predict_zero_shot(model: IclModel, test_context, test_queries, chunk: int = 4096) -> np.ndarray:
    """Inference only: no parameter is touched."""
    test_queries = np.asarray(test_queries, dtype=np.float64)
    parts = [model_forward(model, test_context, test_queries[i:i + chunk])
             for i in range(0, max(len(test_queries), 1), chunk)]
    return np.concatenate(parts) if parts else np.zeros(0)


def mse_loss_tensor(config: ModelConfig, p, context, queries, targets) -> Tensor:
    pred = forward_tensors(config, p, context, queries)
    return (pred - np.asarray(targets, dtype=np.float64)).square().mean()


@dataclass
class TrainingTask:
    """Training points D u T of one coefficient vector, as (x, t, u_prior) rows."""

    label: str
    points: np.ndarray
    context: np.ndarray  # fixed split, used when the split is not resampled
    queries: np.ndarray


@dataclass
class TrainResult:
    model: IclModel
    history: list[float]
    epochs_run: int
    stopped_early: bool
    seconds: float


def learning_rate(config: ModelConfig, epoch: int) -> float:
    if config.warmup and epoch < config.warmup:
        return config.lr * (epoch + 1) / config.warmup
    if config.lr_schedule == "constant":
        return config.lr
    span = max(config.epochs - config.warmup, 1)
    frac = min(max(epoch - config.warmup, 0) / span, 1.0)
    return config.lr_final + 0.5 * (config.lr - config.lr_final) * (1.0 + math.cos(math.pi * frac))


def train_model(model: IclModel, tasks: Sequence[TrainingTask], config: Optional[ModelConfig] = None,
                callback: Optional[Callable[[int, float], None]] = None) -> TrainResult:
    """Each epoch draws one task uniformly, splits its points into context and
    queries, and takes one Adam step on the query MSE.

    Training stops after ``config.epochs`` epochs, or earlier when the mean
    loss over the last ``patience`` epochs fails to improve on the best such
    window by ``min_improvement`` (relative).
    """
    config = config or model.config
    if not tasks:
        raise ValueError("no training tasks")
    rng = np.random.default_rng(config.seed + 1)
    state = AdamState(lr=config.lr)
    history: list[float] = []
    start = time.perf_counter()
    best_window = math.inf
    stopped = False
    mcfg = model.config

    for epoch in range(config.epochs):
        task = tasks[rng.integers(len(tasks))]
        if config.resample_split:
            order = rng.permutation(len(task.points))
            n_ctx = int(round(config.context_fraction * len(task.points)))
            context, queries = task.points[order[:n_ctx]], task.points[order[n_ctx:]]
        else:
            context, queries = task.context, task.queries

        def loss_fn(tensors):
            return mse_loss_tensor(mcfg, tensors, context, queries[:, :2], queries[:, 2])

        try:
            value, grads = param_gradient(loss_fn, model.params, batch=f"epoch {epoch}, alpha=({task.label})")
        except NonFiniteLossError as exc:
            raise NonFiniteLossError(f"training aborted: {exc}") from exc
        adam_step(state, model.params, grads, lr=learning_rate(config, epoch))
        history.append(value)
        if callback is not None:
            callback(epoch, value)

        if config.patience and (epoch + 1) % config.patience == 0:
            window = float(np.mean(history[-config.patience:]))
            if window < best_window * (1.0 - config.min_improvement):
                best_window = window
            else:
                stopped = True
                break
    return TrainResult(model, history, len(history), stopped, time.perf_counter() - start)


# checkpoints ---------------------------------------------------------------

CHECKPOINT_MAGIC = b"CDRICLCK"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: IclModel, path) -> None:
    """Magic, version, JSON header (config + parameter layout), raw float64 LE."""
    names = list(model.params)
    header = json.dumps({"config": asdict(model.config),
                         "layout": [[n, list(model.params[n].shape)] for n in names]}).encode()
    flat = np.concatenate([model.params[n].reshape(-1) for n in names]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        fh.write(flat.tobytes())


def load_checkpoint(path) -> IclModel:
    blob = Path(path).read_bytes()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a model checkpoint")
    version, hlen = struct.unpack("<II", blob[8:16])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(blob[16:16 + hlen])
    flat = np.frombuffer(blob[16 + hlen:], dtype="<f8")
    params, offset = {}, 0
    for name, shape in header["layout"]:
        size = int(np.prod(shape))
        if offset + size > flat.size:
            raise CheckpointError(f"{path} is truncated")
        params[name] = flat[offset:offset + size].reshape(shape).astype(np.float64)
        offset += size
    if offset != flat.size:
        raise CheckpointError(f"{path} has {flat.size - offset} trailing values")
    return IclModel(ModelConfig(**header["config"]), params)
