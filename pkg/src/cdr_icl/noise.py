"""Corrupting clean solution fields with the P1-P4 noise priors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pde import SolutionField

NOISE_KINDS = ("P1", "P2", "P3", "P4")


@dataclass(frozen=True)
class NoiseSpec:
    """P1 noiseless, P2 Gaussian, P3 salt-and-pepper, P4 uniform.

    For P2 and P4 ``level`` is relative to the mean of the clean field (the
    Gaussian standard deviation, resp. the half-width of the uniform support).
    For P3 it is the corruption probability.
    """

    kind: str = "P1"
    level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.level < 0:
            raise ValueError(f"noise level must be non-negative, got {self.level}")

    def describe(self) -> dict:
        return {"kind": self.kind, "level": self.level, "seed": self.seed}


def inject_noise(field: SolutionField, spec: NoiseSpec, stream: int = 0) -> SolutionField:
    """Return a noisy copy of ``field``; ``stream`` decorrelates fields sharing a seed."""
    if spec.kind == "P1":
        return SolutionField(field.grid, field.values.copy(), field.params, field.provenance, field.ic)
    rng = np.random.default_rng([spec.seed, stream])
    clean = field.values
    scale = spec.level * abs(clean.mean())
    if spec.kind == "P2":
        noisy = clean + rng.normal(0.0, scale, size=clean.shape)
    elif spec.kind == "P4":
        eps = scale
        noisy = clean + rng.uniform(-eps, eps, size=clean.shape)
    else:
        # min/max are taken per field
        draw = rng.uniform(size=clean.shape)
        gamma = spec.level
        factor = np.where(draw < gamma / 2, clean.min(), np.where(draw < gamma, clean.max(), 1.0))
        noisy = clean * factor
    return SolutionField(field.grid, noisy, field.params, "noisy", field.ic)
