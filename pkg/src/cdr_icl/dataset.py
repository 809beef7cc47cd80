"""Context/query point sets and on-disk datasets.

Per coefficient vector, 1000 collocation nodes are drawn from the grid
(t > 0).  800 of them form D u T (30 % context D, 70 % queries T) and carry
prior values; the other 200 form the test context and carry ground truth.
1000 further nodes, disjoint from the collocation nodes, are the test queries.

On disk a dataset is a directory::

    manifest.json
    fields/alpha_<i>.csv    x,t,u_prior,u_truth for every grid node
    sets/alpha_<i>.json     node indices of the four point sets
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .noise import NoiseSpec
from .pde import CdrParams, Grid, InitialCondition, ParameterSpace, SolutionField
from .pinn import PriorStore

FORMAT_VERSION = 1


class DatasetError(ValueError):
    pass


class DigestMismatchError(DatasetError):
    pass


class FormatVersionError(DatasetError):
    pass


@dataclass
class SampleSet:
    """Node indices (flattened, ``ix * nt + it``) and (x, t, u) rows of each set."""

    alpha: CdrParams
    seed: int
    context_idx: np.ndarray
    query_idx: np.ndarray
    test_context_idx: np.ndarray
    test_query_idx: np.ndarray
    context: np.ndarray
    queries: np.ndarray
    test_context: np.ndarray
    test_queries: np.ndarray

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (len(self.context), len(self.queries), len(self.test_context), len(self.test_queries))

    @property
    def train_points(self) -> np.ndarray:
        return np.concatenate([self.context, self.queries])


def _rows(field: SolutionField, idx: np.ndarray) -> np.ndarray:
    x, t = field.grid.coords(idx)
    return np.stack([x, t, field.flat()[idx]], axis=1)


def interior_nodes(grid: Grid) -> np.ndarray:
    return np.arange(grid.size).reshape(grid.nx, grid.nt)[:, 1:].reshape(-1)


def build_sample_set(alpha: CdrParams, field: SolutionField, truth: SolutionField, seed: int,
                     context_idx, query_idx, test_context_idx, test_query_idx) -> SampleSet:
    idx = [np.asarray(i, dtype=np.int64) for i in (context_idx, query_idx, test_context_idx, test_query_idx)]
    return SampleSet(alpha, seed, *idx, _rows(field, idx[0]), _rows(field, idx[1]),
                     _rows(truth, idx[2]), _rows(truth, idx[3]))


def sample_points(field: SolutionField, truth: SolutionField, seed: int, n_collocation: int = 1000,
                  n_train: int = 800, context_fraction: float = 0.3, n_test: int = 1000) -> SampleSet:
    """Draw D, T (values from ``field``) and the test sets (values from ``truth``)."""
    if field.grid != truth.grid:
        raise DatasetError(f"grid mismatch: {field.grid} vs {truth.grid}")
    rng = np.random.default_rng(seed)
    interior = interior_nodes(field.grid)
    colloc = rng.choice(interior, size=n_collocation, replace=False)
    n_ctx = int(round(context_fraction * n_train))
    rest = np.setdiff1d(interior, colloc, assume_unique=True)
    test_q = rng.choice(rest, size=n_test, replace=False)
    return build_sample_set(truth.params, field, truth, seed, colloc[:n_ctx], colloc[n_ctx:n_train],
                            colloc[n_train:], test_q)


def sample_time_split(truth: SolutionField, seed: int, t_split: float = 0.6, n_context: int = 200,
                      n_queries: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Test context restricted to t <= t_split and queries to t > t_split."""
    rng = np.random.default_rng(seed)
    interior = interior_nodes(truth.grid)
    _, t = truth.grid.coords(interior)
    early, late = interior[t <= t_split], interior[t > t_split]
    ctx = rng.choice(early, size=min(n_context, len(early)), replace=False)
    qry = rng.choice(late, size=min(n_queries, len(late)), replace=False)
    return _rows(truth, ctx), _rows(truth, qry)


def sample_store(store: PriorStore, seed: int = 0) -> dict[CdrParams, SampleSet]:
    return {alpha: sample_points(store.priors[alpha], store.truths[alpha], seed + i)
            for i, alpha in enumerate(store.alphas)}


# persistence -----------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_field_csv(path: Path, prior: SolutionField, truth: SolutionField) -> None:
    grid = prior.grid
    X, T = np.meshgrid(grid.x, grid.t, indexing="ij")
    table = np.stack([X.reshape(-1), T.reshape(-1), prior.flat(), truth.flat()], axis=1)
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header="x,t,u_prior,u_truth", comments="")


def _read_field_csv(path: Path, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,t,u_prior,u_truth":
            raise DatasetError(f"{path}: unexpected header {header!r}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    if table.shape != (grid.size, 4):
        raise DatasetError(f"{path}: expected {grid.size} rows, found {table.shape[0]}")
    return table[:, 2].reshape(grid.nx, grid.nt), table[:, 3].reshape(grid.nx, grid.nt)


def save_dataset(store: PriorStore, sets: Mapping[CdrParams, SampleSet], path) -> dict:
    """Write ``store`` and ``sets`` under ``path``; returns the manifest."""
    root = Path(path)
    (root / "fields").mkdir(parents=True, exist_ok=True)
    (root / "sets").mkdir(exist_ok=True)
    entries, files = [], {}
    for i, alpha in enumerate(store.alphas):
        field_rel = f"fields/alpha_{i}.csv"
        _write_field_csv(root / field_rel, store.priors[alpha], store.truths[alpha])
        files[field_rel] = _sha256(root / field_rel)
        entry = {"index": i, "alpha": list(alpha.as_tuple()), "provenance": store.priors[alpha].provenance,
                 "field_file": field_rel}
        if alpha in sets:
            s = sets[alpha]
            sets_rel = f"sets/alpha_{i}.json"
            (root / sets_rel).write_text(json.dumps({
                "seed": int(s.seed), "context": s.context_idx.tolist(), "queries": s.query_idx.tolist(),
                "test_context": s.test_context_idx.tolist(), "test_queries": s.test_query_idx.tolist()}))
            files[sets_rel] = _sha256(root / sets_rel)
            entry["sets_file"] = sets_rel
        entries.append(entry)
    manifest = {
        "format_version": FORMAT_VERSION,
        "parameter_space": store.space.describe(),
        "grid": {"nx": store.grid.nx, "nt": store.grid.nt},
        "initial_condition": store.ic.describe(),
        "pinn_ratio": store.pinn_ratio,
        "noise": store.noise.describe() if store.noise is not None else None,
        "entries": entries,
        "files": files,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def load_dataset(path) -> tuple[PriorStore, dict[CdrParams, SampleSet]]:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DatasetError(f"missing {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"dataset format version {version!r} is not supported "
                                 f"(expected {FORMAT_VERSION})")
    for rel, digest in manifest["files"].items():
        fp = root / rel
        if not fp.exists():
            raise DatasetError(f"missing dataset file {fp}")
        if _sha256(fp) != digest:
            raise DigestMismatchError(f"digest mismatch for {fp}")

    grid = Grid(**manifest["grid"])
    ic = InitialCondition(**manifest["initial_condition"])
    noise = NoiseSpec(**manifest["noise"]) if manifest["noise"] else None
    store = PriorStore(ParameterSpace.from_description(manifest["parameter_space"]), grid, ic,
                       manifest["pinn_ratio"], noise)
    sets: dict[CdrParams, SampleSet] = {}
    for entry in manifest["entries"]:
        alpha = CdrParams.from_tuple(entry["alpha"])
        prior_vals, truth_vals = _read_field_csv(root / entry["field_file"], grid)
        store.priors[alpha] = SolutionField(grid, prior_vals, alpha, entry["provenance"], ic)
        store.truths[alpha] = SolutionField(grid, truth_vals, alpha, "numerical", ic)
        if "sets_file" in entry:
            s = json.loads((root / entry["sets_file"]).read_text())
            sets[alpha] = build_sample_set(alpha, store.priors[alpha], store.truths[alpha], s["seed"],
                                           s["context"], s["queries"], s["test_context"], s["test_queries"])
    return store, sets
