from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np


class ErrorPair(NamedTuple):
    """RMS error and norm-ratio error; ``rel`` is NaN when the truth has zero norm."""

    abs: float
    rel: float


def l2_errors(pred, truth) -> ErrorPair:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError(f"need equal non-empty lengths, got {pred.size} and {truth.size}")
    diff = np.linalg.norm(pred - truth)
    norm = np.linalg.norm(truth)
    rel = float(diff / norm) if norm > 0 else math.nan
    return ErrorPair(float(diff / math.sqrt(pred.size)), rel)


@dataclass
class ReportRow:
    label: str
    errors: ErrorPair
    extra: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    experiment_id: str
    rows: list[ReportRow] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    extras: dict = field(default_factory=dict)

    def add(self, label: str, errors: ErrorPair, **extra) -> None:
        self.rows.append(ReportRow(label, errors, extra))

    def _column(self, which: str, rows=None) -> np.ndarray:
        rows = self.rows if rows is None else rows
        return np.array([getattr(r.errors, which) for r in rows], dtype=np.float64)

    def mean(self, rows=None) -> ErrorPair:
        return ErrorPair(float(np.mean(self._column("abs", rows))), float(np.mean(self._column("rel", rows))))

    def std(self, rows=None) -> ErrorPair:
        return ErrorPair(float(np.std(self._column("abs", rows))), float(np.std(self._column("rel", rows))))

    def select(self, **criteria) -> list[ReportRow]:
        return [r for r in self.rows if all(r.extra.get(k) == v for k, v in criteria.items())]

    def summary(self) -> dict:
        mean, std = self.mean(), self.std()
        return {"experiment": self.experiment_id, "n": len(self.rows),
                "mean_abs_err": mean.abs, "mean_rel_err": mean.rel,
                "std_abs_err": std.abs, "std_rel_err": std.rel,
                "wall_clock_s": self.wall_clock, "config": self.config, "extras": self.extras}

    def write(self, out_dir, svg: bool = False) -> Path:
        """``report_<id>.csv`` plus a ``report_<id>_summary.json`` footer file."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"report_{self.experiment_id}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "abs_err", "rel_err"])
            for r in self.rows:
                w.writerow([r.label, repr(r.errors.abs),
                            "undefined" if math.isnan(r.errors.rel) else repr(r.errors.rel)])
        (out / f"report_{self.experiment_id}_summary.json").write_text(
            json.dumps(self.summary(), indent=2, default=str))
        if svg:
            plot_report_svg(self, out / f"report_{self.experiment_id}.svg")
        return path


def read_report_csv(path) -> list[tuple[str, float, float]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["alpha", "abs_err", "rel_err"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for label, a, r in reader:
            rows.append((label, float(a), math.nan if r == "undefined" else float(r)))
    return rows


def plot_report_svg(report: ExperimentReport, path, x_key: Optional[str] = None) -> None:
    """Relative error per row as a line chart."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if x_key is None:
        x_key = next((k for k in ("coefficient", "beta", "rho", "nu") if report.rows and k in report.rows[0].extra), None)
    xs = [r.extra[x_key] for r in report.rows] if x_key else list(range(len(report.rows)))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(xs, [r.errors.rel for r in report.rows], marker="o")
    ax.set_xlabel(x_key or "row")
    ax.set_ylabel("relative L2 error")
    ax.set_title(report.experiment_id)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
