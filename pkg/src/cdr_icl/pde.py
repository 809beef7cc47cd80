"""Convection-diffusion-reaction equations on the periodic interval [0, 2*pi).

The family solved here is

    u_t = -beta * u_x + nu * u_xx + rho1 * f1(u) + rho2 * f2(u) + rho3 * f3(u)

with Fisher f1 = u(1-u), Allen-Cahn f2 = u(1-u^2) and Zeldovich f3 = u^2(1-u).
Reference fields come from a Fourier pseudo-spectral discretisation in x with
an integrating factor for the linear part and classical RK4 for the reaction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

COEFFICIENTS = ("beta", "nu", "rho1", "rho2", "rho3")
PROVENANCES = ("numerical", "pinn", "noisy")
IC_PRESETS = ("gaussian_bump", "one_plus_sin", "sin", "constant")


class SolverError(RuntimeError):
    """Raised when time stepping produces non-finite values."""


@dataclass(frozen=True)
class CdrParams:
    """Coefficient vector selecting one equation of the dictionary."""

    beta: float = 0.0
    nu: float = 0.0
    rho: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        if len(rho) != 3:
            raise ValueError(f"rho must have 3 entries, got {len(rho)}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "nu", float(self.nu))
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise ValueError(f"non-finite coefficient in {self}")
        if self.nu < 0:
            raise ValueError(f"nu must be non-negative, got {self.nu}")

    @classmethod
    def from_tuple(cls, values: Sequence[float]) -> "CdrParams":
        beta, nu, r1, r2, r3 = values
        return cls(beta, nu, (r1, r2, r3))

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.beta, self.nu, *self.rho)

    @property
    def rho_total(self) -> float:
        return float(sum(abs(r) for r in self.rho))

    def label(self) -> str:
        return ",".join(f"{name}={value:g}" for name, value in zip(COEFFICIENTS, self.as_tuple()))


@dataclass(frozen=True)
class ParameterSpace:
    """A set of coefficient vectors.

    In ``grid`` mode every active coefficient carries an explicit tuple of
    values and the space is their Cartesian product.  In ``uniform`` mode each
    active coefficient carries ``(low, high)`` and ``n_samples`` vectors are
    drawn uniformly with ``seed``.  Coefficients that are not listed are zero.
    """

    values: Mapping[str, tuple[float, ...]]
    mode: str = "grid"
    n_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.values) - set(COEFFICIENTS)
        if unknown:
            raise ValueError(f"unknown coefficients {sorted(unknown)}")
        if self.mode not in ("grid", "uniform"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        frozen = {k: tuple(float(v) for v in vals) for k, vals in self.values.items()}
        object.__setattr__(self, "values", frozen)

    @classmethod
    def integer(cls, **ranges: tuple[int, int]) -> "ParameterSpace":
        """Integer grid, e.g. ``ParameterSpace.integer(beta=(1, 5))``."""
        vals = {}
        for name, (lo, hi) in ranges.items():
            vals[name] = tuple(float(v) for v in range(int(lo), int(hi) + 1))
        return cls(vals)

    @classmethod
    def explicit(cls, **values: Iterable[float]) -> "ParameterSpace":
        return cls({name: tuple(v) for name, v in values.items()})

    @classmethod
    def uniform(cls, n_samples: int, seed: int = 0, **bounds: tuple[float, float]) -> "ParameterSpace":
        return cls({k: (float(lo), float(hi)) for k, (lo, hi) in bounds.items()},
                   mode="uniform", n_samples=n_samples, seed=seed)

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(name for name in COEFFICIENTS if name in self.values)

    def describe(self) -> dict:
        return {"values": {k: list(v) for k, v in self.values.items()}, "mode": self.mode,
                "n_samples": self.n_samples, "seed": self.seed}

    @classmethod
    def from_description(cls, desc: Mapping) -> "ParameterSpace":
        return cls({k: tuple(v) for k, v in desc["values"].items()}, desc.get("mode", "grid"),
                   desc.get("n_samples", 0), desc.get("seed", 0))


def enumerate_parameters(space: ParameterSpace) -> list[CdrParams]:
    """All coefficient vectors of ``space`` in lexicographic order."""
    names = space.active
    if not names or any(len(space.values[n]) == 0 for n in names):
        raise ValueError("parameter space has an empty range")
    if space.mode == "uniform":
        if space.n_samples < 1:
            raise ValueError("uniform parameter space needs n_samples >= 1")
        rng = np.random.default_rng(space.seed)
        draws = []
        for _ in range(space.n_samples):
            entry = dict.fromkeys(COEFFICIENTS, 0.0)
            for n in names:
                lo, hi = space.values[n]
                entry[n] = float(rng.uniform(lo, hi))
            draws.append(entry)
        combos = [tuple(d[c] for c in COEFFICIENTS) for d in draws]
    else:
        combos = []
        for point in itertools.product(*(space.values[n] for n in names)):
            entry = dict.fromkeys(COEFFICIENTS, 0.0)
            entry.update(zip(names, point))
            combos.append(tuple(entry[c] for c in COEFFICIENTS))
    return [CdrParams.from_tuple(c) for c in combos]


@dataclass(frozen=True)
class InitialCondition:
    preset: str = "gaussian_bump"
    mean: float = math.pi
    width: float = math.pi / 2
    value: float = 0.5  # only used by the ``constant`` preset

    def __post_init__(self):
        if self.preset not in IC_PRESETS:
            raise ValueError(f"unknown initial condition preset {self.preset!r}")

    def __call__(self, x):
        return eval_initial_condition(self, x)

    def describe(self) -> dict:
        return {"preset": self.preset, "mean": self.mean, "width": self.width, "value": self.value}


def eval_initial_condition(ic: InitialCondition, x):
    x = np.asarray(x, dtype=np.float64)
    if ic.preset == "gaussian_bump":
        out = np.exp(-((x - ic.mean) ** 2) / (2.0 * ic.width ** 2))
    elif ic.preset == "one_plus_sin":
        out = 1.0 + np.sin(x)
    elif ic.preset == "sin":
        out = np.sin(x)
    else:
        out = np.full_like(x, ic.value)
    return out if out.ndim else float(out)


def eval_reaction(u, rho):
    """rho1 * u(1-u) + rho2 * u(1-u^2) + rho3 * u^2(1-u)."""
    r1, r2, r3 = rho
    return r1 * u * (1.0 - u) + r2 * u * (1.0 - u * u) + r3 * u * u * (1.0 - u)


@dataclass(frozen=True)
class Grid:
    nx: int = 256
    nt: int = 100

    def __post_init__(self):
        if self.nx < 8 or self.nx & (self.nx - 1):
            raise ValueError(f"nx must be a power of two >= 8, got {self.nx}")
        if self.nt < 2:
            raise ValueError(f"nt must be >= 2, got {self.nt}")

    @property
    def x(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.nx) / self.nx

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nt)

    @property
    def size(self) -> int:
        return self.nx * self.nt

    def coords(self, flat_index) -> tuple[np.ndarray, np.ndarray]:
        """(x, t) of flattened node indices; index = ix * nt + it."""
        ix, it = np.divmod(np.asarray(flat_index), self.nt)
        return self.x[ix], self.t[it]


@dataclass
class SolutionField:
    grid: Grid
    values: np.ndarray  # shape (nx, nt)
    params: CdrParams
    provenance: str = "numerical"
    ic: InitialCondition = field(default_factory=InitialCondition)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.nx, self.grid.nt):
            raise ValueError(f"field shape {self.values.shape} does not match grid "
                             f"({self.grid.nx}, {self.grid.nt})")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite values in field for {self.params.label()}")

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def at_x(self, x, time_index: int) -> np.ndarray:
        """Trigonometric interpolant of one time level at arbitrary ``x``."""
        return spectral_interpolate(self.values[:, time_index], x)


def spectral_interpolate(samples: np.ndarray, x) -> np.ndarray:
    n = samples.shape[0]
    coef = np.fft.rfft(samples) / n
    k = np.arange(coef.shape[0])
    weights = np.where((k == 0) | (k == n // 2), 1.0, 2.0)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    phase = np.exp(1j * np.outer(x, k))
    # the Nyquist term is taken as a cosine so the interpolant stays real
    return (phase.real * (weights * coef.real) - phase.imag * (weights * coef.imag)).sum(axis=1)


def _internal_steps(params: CdrParams, interval: float) -> int:
    dt_max = min(1e-3, 0.5 / max(1.0, params.rho_total))
    return max(1, math.ceil(interval / dt_max - 1e-9))


def solve_cdr(params: CdrParams, ic: InitialCondition, grid: Grid = Grid()) -> SolutionField:
    """Numerical solution on ``grid`` with periodic boundaries."""
    nx = grid.nx
    k = np.fft.rfftfreq(nx, d=1.0 / nx)
    k_odd = k.copy()
    k_odd[-1] = 0.0  # Nyquist mode carries no first derivative
    linear = -1j * params.beta * k_odd - params.nu * k * k
    keep = k <= nx / 3.0  # 2/3-rule dealiasing for the reaction term

    u0 = np.asarray(eval_initial_condition(ic, grid.x), dtype=np.float64)
    u_hat = np.fft.rfft(u0)
    out = np.empty((nx, grid.nt))
    out[:, 0] = u0
    interval = 1.0 / (grid.nt - 1)
    reacting = params.rho_total > 0.0

    if not reacting:
        propagator = np.exp(linear * interval)
        for j in range(1, grid.nt):
            u_hat = u_hat * propagator
            out[:, j] = np.fft.irfft(u_hat, n=nx)
        return SolutionField(grid, out, params, "numerical", ic)

    n_sub = _internal_steps(params, interval)
    dt = interval / n_sub
    half = np.exp(linear * dt / 2.0)
    full = half * half
    rho = params.rho

    def nonlinear(v_hat):
        u = np.fft.irfft(v_hat, n=nx)
        r = np.fft.rfft(eval_reaction(u, rho))
        return np.where(keep, r, 0.0)

    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(1, grid.nt):
            for _ in range(n_sub):
                k1 = dt * nonlinear(u_hat)
                k2 = dt * nonlinear(half * (u_hat + 0.5 * k1))
                k3 = dt * nonlinear(half * u_hat + 0.5 * k2)
                k4 = dt * nonlinear(full * u_hat + half * k3)
                u_hat = full * u_hat + (full * k1 + 2.0 * half * (k2 + k3) + k4) / 6.0
            out[:, j] = np.fft.irfft(u_hat, n=nx)
            if not np.all(np.isfinite(out[:, j])):
                raise SolverError(f"solver became unstable at t={grid.t[j]:.4g} "
                                  f"for alpha=({params.label()})")
    return SolutionField(grid, out, params, "numerical", ic)
