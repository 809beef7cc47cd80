"""Tanh MLP u(x, t) with exact input derivatives.

Input derivatives are carried forward as jets (value, d/dx, d/dt, d2/dx2)
through every layer.  Because the jet rules are written with ``Tensor`` ops,
parameter gradients of any loss built from them come out of the same tape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .autodiff import Tensor


@dataclass
class PinnNet:
    """Fully connected tanh network from (x, t) to a scalar.

    ``features`` selects the fixed input map applied before the first layer:
    ``"affine"`` feeds (x * sx + ox, t * st + ot); ``"periodic"`` feeds
    (cos x, sin x, t * st + ot), which makes the network exactly 2*pi-periodic.
    """

    widths: tuple[int, ...]
    params: dict[str, np.ndarray]
    input_scale: tuple[float, float] = (1.0, 1.0)
    input_shift: tuple[float, float] = (0.0, 0.0)
    features: str = "affine"

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if self.widths[0] != 2 or self.widths[-1] != 1:
            raise ValueError(f"PINN widths must start at 2 and end at 1, got {self.widths}")
        if self.features not in ("affine", "periodic"):
            raise ValueError(f"unknown input features {self.features!r}")
        sizes = (self.n_features,) + self.widths[1:]
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            if self.params[f"W{i}"].shape != (fan_in, fan_out) or self.params[f"b{i}"].shape != (fan_out,):
                raise ValueError(f"layer {i} parameters do not match widths {self.widths}")

    @property
    def n_features(self) -> int:
        return 3 if self.features == "periodic" else 2

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    def n_parameters(self) -> int:
        return sum(v.size for v in self.params.values())

    def copy(self) -> "PinnNet":
        return PinnNet(self.widths, {k: v.copy() for k, v in self.params.items()},
                       self.input_scale, self.input_shift, self.features)


def init_pinn(widths: Sequence[int] = (2, 64, 64, 64, 1), seed: int = 0,
              features: str = "periodic") -> PinnNet:
    """Glorot-normal weights and zero biases; t is mapped from [0, 1] to [-1, 1].

    With affine features x is likewise mapped from [0, 2pi] to [-1, 1].
    """
    rng = np.random.default_rng(seed)
    sizes = (3 if features == "periodic" else 2,) + tuple(widths[1:])
    params = {}
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        std = np.sqrt(2.0 / (fan_in + fan_out))
        params[f"W{i}"] = rng.normal(0.0, std, size=(fan_in, fan_out))
        params[f"b{i}"] = np.zeros(fan_out)
    return PinnNet(tuple(widths), params, (1.0 / np.pi, 2.0), (-1.0, -1.0), features)


class InputJet(NamedTuple):
    u: np.ndarray
    du_dx: np.ndarray
    du_dt: np.ndarray
    d2u_dx2: np.ndarray


def _feature_jet(net: PinnNet, x, t):
    """Input features and their x, t and xx derivatives, each of shape (n, n_features)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    sx, st = net.input_scale
    ox, ot = net.input_shift
    zero, one = np.zeros_like(x), np.ones_like(x)
    if net.features == "periodic":
        c, s = np.cos(x), np.sin(x)
        cols = [(c, -s, zero, -c), (s, c, zero, -s), (t * st + ot, zero, st * one, zero)]
    else:
        cols = [(x * sx + ox, sx * one, zero, zero), (t * st + ot, zero, st * one, zero)]
    return tuple(np.stack([col[k] for col in cols], axis=1) for k in range(4))


def forward_tensors(net: PinnNet, params: Mapping[str, Tensor], x, t) -> Tensor:
    z = Tensor(_feature_jet(net, x, t)[0])
    last = net.n_layers - 1
    for i in range(net.n_layers):
        z = z @ params[f"W{i}"] + params[f"b{i}"]
        if i < last:
            z = z.tanh()
    return z.reshape(-1)


def jet_tensors(net: PinnNet, params: Mapping[str, Tensor], x, t) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """(u, u_x, u_t, u_xx) at the points, as differentiable tensors.

    Through ``a = h W + b`` derivatives map linearly; through ``s = tanh(a)``
    they follow s_x = s' a_x and s_xx = s'' a_x^2 + s' a_xx with
    s' = 1 - s^2 and s'' = -2 s s'.
    """
    z, z_x, z_t, z_xx = _feature_jet(net, x, t)
    W0 = params["W0"]
    a = Tensor(z) @ W0 + params["b0"]
    a_x, a_t, a_xx = Tensor(z_x) @ W0, Tensor(z_t) @ W0, Tensor(z_xx) @ W0
    for i in range(1, net.n_layers):
        s = a.tanh()
        ds = 1.0 - s.square()
        d2s = -2.0 * s * ds
        h_x, h_t = ds * a_x, ds * a_t
        h_xx = d2s * a_x.square() + ds * a_xx
        W = params[f"W{i}"]
        a = s @ W + params[f"b{i}"]
        a_x, a_t, a_xx = h_x @ W, h_t @ W, h_xx @ W
    return a.reshape(-1), a_x.reshape(-1), a_t.reshape(-1), a_xx.reshape(-1)


def _wrap(net: PinnNet) -> dict[str, Tensor]:
    return {k: Tensor(v) for k, v in net.params.items()}


def mlp_forward(net: PinnNet, x, t) -> np.ndarray:
    """Network value at the points (x, t); scalars in, length-1 array out."""
    return forward_tensors(net, _wrap(net), x, t).data


def mlp_input_jet(net: PinnNet, x, t) -> InputJet:
    return InputJet(*(j.data for j in jet_tensors(net, _wrap(net), x, t)))
