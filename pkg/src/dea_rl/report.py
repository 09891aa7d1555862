"""Aggregate run directories into ``report.csv`` and SVG line charts."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import EvalRecord, aulc, final_return, iqm, rank_table
from .trainer import fmt, write_csv

REPORT_HEADER = ["env", "method", "final_return", "iqm", "aulc", "rank_final", "rank_iqm", "rank_aulc"]
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


class ReportError(ValueError):
    pass


@dataclass
class RunData:
    env: str
    method: str
    seed: int
    records: list[EvalRecord]
    kappa: np.ndarray | None  # rows of (step, kappa_bar, kappa, delta, delta_bar)


def read_metrics(path: Path) -> list[EvalRecord]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [EvalRecord(int(r["step"]), float(r["eval_return_mean"]), float(r["eval_return_std"])) for r in rows]


def read_kappa(path: Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data.reshape(-1, 5)


def _failed_runs(root: Path) -> set[tuple[str, str, int]]:
    failed = set()
    for summary in sorted(root.rglob("summary.csv")):
        with open(summary, newline="") as f:
            for row in csv.DictReader(f):
                if row["status"] != "ok":
                    failed.add((row["env"], row["method"], int(row["seed"])))
    return failed


def collect_runs(inputs: Sequence[str | Path]) -> list[RunData]:
    """Every completed run below the input directories, keyed by its run.json."""
    runs: dict[tuple[str, str, int], RunData] = {}
    for root in map(Path, inputs):
        if not root.is_dir():
            raise ReportError(f"{root}: not a directory")
        failed = _failed_runs(root)
        for run_json in sorted(root.rglob("run.json")):
            cfg = json.loads(run_json.read_text())
            key = (cfg["env"], cfg["method"], int(cfg["seed"]))
            metrics = run_json.parent / "metrics.csv"
            if key in failed or not metrics.exists():
                continue
            if key in runs:
                raise ReportError(f"run {key} appears more than once across inputs")
            records = read_metrics(metrics)
            if not records:
                continue
            kappa_path = run_json.parent / "kappa.csv"
            kappa = read_kappa(kappa_path) if kappa_path.exists() else None
            runs[key] = RunData(*key, records, kappa)
    if not runs:
        raise ReportError("no completed runs found in " + ", ".join(map(str, inputs)))
    return [runs[k] for k in sorted(runs)]


def summarize(runs: Sequence[RunData]) -> list[dict]:
    groups: dict[tuple[str, str], list[RunData]] = defaultdict(list)
    for run in runs:
        groups[(run.env, run.method)].append(run)
    envs = sorted({e for e, _ in groups})
    methods = sorted({m for _, m in groups})
    missing = [f"{m} on {e}" for e in envs for m in methods if (e, m) not in groups]
    if missing:
        raise ReportError("inconsistent env/method sets; missing: " + ", ".join(missing))

    table = {"final_return": {}, "iqm": {}, "aulc": {}}
    for (env, method), group in groups.items():
        finals = [final_return(r.records) for r in group]
        table["final_return"].setdefault(method, {})[env] = float(np.mean(finals))
        table["iqm"].setdefault(method, {})[env] = iqm(finals)
        table["aulc"].setdefault(method, {})[env] = float(np.mean([aulc(r.records) for r in group]))
    ranks = {name: rank_table(values) for name, values in table.items()}

    rows = []
    for env in envs:
        for method in methods:
            rows.append({
                "env": env,
                "method": method,
                "final_return": table["final_return"][method][env],
                "iqm": table["iqm"][method][env],
                "aulc": table["aulc"][method][env],
                "rank_final": ranks["final_return"][method],
                "rank_iqm": ranks["iqm"][method],
                "rank_aulc": ranks["aulc"][method],
            })
    return rows


def svg_line_chart(
    series: Sequence[dict], title: str, xlabel: str, ylabel: str, width: int = 640, height: int = 400
) -> str:
    """Minimal SVG line chart.

    Each series is a dict with ``label``, ``x``, ``y`` and optional ``lo``/``hi``
    arrays drawn as a shaded band.
    """
    left, right, top, bottom = 70, 20, 40, 50
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = np.concatenate(
        [np.asarray(s[k], float) for s in series for k in ("y", "lo", "hi") if s.get(k) is not None]
    )
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (np.asarray(x, float) - x0) / (x1 - x0) * (width - left - right)

    def py(y):
        return height - bottom - (np.asarray(y, float) - y0) / (y1 - y0) * (height - top - bottom)

    def points(x, y):
        return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(y)))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{float(px(xv)):.2f}" y="{height - bottom + 16}" text-anchor="middle">{xv:.6g}</text>')
        out.append(f'<text x="{left - 6}" y="{float(py(yv)) + 4:.2f}" text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" transform="rotate(-90 16 {height / 2:.1f})">{ylabel}</text>'
    )
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        if s.get("lo") is not None and s.get("hi") is not None:
            x = np.asarray(s["x"], float)
            band = points(np.concatenate([x, x[::-1]]), np.concatenate([s["hi"], np.asarray(s["lo"])[::-1]]))
            out.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        out.append(f'<polyline points="{points(s["x"], s["y"])}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 * i + 6
        out.append(f'<line x1="{width - right - 110}" y1="{ly}" x2="{width - right - 90}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{width - right - 85}" y="{ly + 4}">{s["label"]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _downsample(rows: np.ndarray, max_points: int = 500) -> np.ndarray:
    if len(rows) <= max_points:
        return rows
    idx = np.unique(np.linspace(0, len(rows) - 1, max_points).round().astype(int))
    return rows[idx]


def learning_curve_series(runs: Sequence[RunData]) -> list[dict]:
    by_method: dict[str, list[RunData]] = defaultdict(list)
    for r in runs:
        by_method[r.method].append(r)
    series = []
    for method in sorted(by_method):
        group = by_method[method]
        length = min(len(r.records) for r in group)
        steps = [rec.step for rec in group[0].records[:length]]
        curves = np.array([[rec.mean_return for rec in r.records[:length]] for r in group])
        mean, std = curves.mean(axis=0), curves.std(axis=0)
        series.append({"label": method, "x": steps, "y": mean, "lo": mean - std, "hi": mean + std})
    return series


def kappa_series(runs: Sequence[RunData]) -> list[dict]:
    with_kappa = [r for r in runs if r.kappa is not None and len(r.kappa)]
    if not with_kappa:
        return []
    length = min(len(r.kappa) for r in with_kappa)
    stacked = np.stack([r.kappa[:length] for r in with_kappa])
    steps = stacked[0, :, 0]
    series = []
    for col, label in ((1, "kappa_bar"), (2, "kappa")):
        values = stacked[:, :, col]
        rows = _downsample(np.column_stack([steps, values.mean(0), values.min(0), values.max(0)]))
        series.append({"label": label, "x": rows[:, 0], "y": rows[:, 1], "lo": rows[:, 2], "hi": rows[:, 3]})
    return series


def build_report(inputs: Sequence[str | Path], out_dir: str | Path) -> list[dict]:
    """Write report.csv plus per-env learning-curve and kappa SVGs.

    Nothing is written unless the inputs are complete and consistent.
    """
    runs = collect_runs(inputs)
    rows = summarize(runs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "report.csv", REPORT_HEADER, ([r["env"], r["method"]] + [fmt(r[k]) for k in REPORT_HEADER[2:]] for r in rows))
    for env in sorted({r.env for r in runs}):
        env_runs = [r for r in runs if r.env == env]
        (out / f"learning_curve_{env}.svg").write_text(
            svg_line_chart(learning_curve_series(env_runs), f"{env}: evaluation return", "env step", "return")
        )
        ks = kappa_series(env_runs)
        if ks:
            (out / f"kappa_{env}.svg").write_text(
                svg_line_chart(ks, f"{env}: directional parameters (mean, min-max over seeds)", "env step", "value")
            )
    return rows
