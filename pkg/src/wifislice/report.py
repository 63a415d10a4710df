"""Violation rates, per-window curves and the tolerance-sweep table."""
from __future__ import annotations

import csv
import hashlib
import json
from typing import Callable, Mapping, Sequence

import numpy as np

from .domain import NetworkConfig, NetworkRealization, QosSpec, SlaCategory
from .execution import Trajectory

RATE_KEYS = ("h_inst", "h_erg", "l_inst", "l_erg")
CURVE_METRICS = ("f_h", "f_l", "objective")


def violation_rates(trajectories: Sequence[Trajectory], qos: QosSpec) -> dict[str, float]:
    """Percentages of instantaneous (flow, window) and ergodic (flow) QoS
    violations, pooled over all realizations.

    Throughput is violated below ``r_min``; latency above ``ell_max`` with
    absent latency counted as 0 ms. Ergodic checks use the time-average of the
    per-window metric.
    """
    if not trajectories:
        raise ValueError("no trajectories")
    h_inst, h_erg, l_inst, l_erg = [], [], [], []
    for tr in trajectories:
        sla = tr.realization.sla_array
        rates = np.array([w.throughput for w in tr.windows])
        lats = np.array([w.latency_or_zero() for w in tr.windows])
        r_h = rates[:, sla == SlaCategory.HighThroughput]
        l_l = lats[:, sla == SlaCategory.LowLatency]
        h_inst.append((r_h < qos.r_min).ravel())
        h_erg.append(r_h.mean(axis=0) < qos.r_min)
        l_inst.append((l_l > qos.ell_max).ravel())
        l_erg.append(l_l.mean(axis=0) > qos.ell_max)

    def pct(parts):
        flat = np.concatenate(parts)
        return 100.0 * float(flat.mean()) if flat.size else 0.0

    return {"h_inst": pct(h_inst), "h_erg": pct(h_erg),
            "l_inst": pct(l_inst), "l_erg": pct(l_erg)}


def aggregate_curves(trajectories: Sequence[Trajectory]) -> dict[str, dict[str, np.ndarray]]:
    """Per-window mean and worst-case (99th percentile) band of each metric.

    The band sits on the bad side of each metric: the upper 99th percentile
    of the constraints and the lower 1st percentile of the objective, using
    the nearest order statistic toward that side.
    """
    if len(trajectories) < 2:
        raise ValueError("need at least two realizations")
    out = {}
    for metric in CURVE_METRICS:
        data = np.array([getattr(tr, metric) for tr in trajectories])
        if metric == "objective":
            worst = np.percentile(data, 1, axis=0, method="lower")
        else:
            worst = np.percentile(data, 99, axis=0, method="higher")
        out[metric] = {"mean": data.mean(axis=0), "p99": worst}
    return out


def sweep_table(runners: Mapping[str, Callable[[NetworkRealization, QosSpec], Trajectory]],
                qos_grid: Sequence[tuple[float, float]],
                test_set: Sequence[NetworkRealization],
                qos_dependent: Sequence[str] = ("sapd",)) -> list[dict]:
    """Violation matrix over methods and tolerance points.

    ``runners[method](realization, qos)`` executes a method. Methods listed in
    ``qos_dependent`` are rerun at each grid point (their online dual dynamics
    depend on the targets); the others are run once and re-thresholded.
    """
    rows = []
    cache: dict[str, list[Trajectory]] = {}
    for r_min, ell_max in qos_grid:
        qos = QosSpec(r_min, ell_max)
        for method, run in runners.items():
            if method in qos_dependent or method not in cache:
                trajs = [run(r, qos) for r in test_set]
                if method not in qos_dependent:
                    cache[method] = trajs
            else:
                trajs = cache[method]
            rows.append({"method": method, "r_min": r_min, "ell_max": ell_max,
                         **violation_rates(trajs, qos)})
    return rows


def parse_grid(spec: str) -> list[tuple[float, float]]:
    """Parse ``"0.7:5,0.9:10"`` into [(0.7, 5.0), (0.9, 10.0)]."""
    grid = []
    for item in spec.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2:
            raise ValueError(f"malformed grid point {item!r}")
        r_min, ell_max = float(parts[0]), float(parts[1])
        QosSpec(r_min, ell_max)
        grid.append((r_min, ell_max))
    if not grid:
        raise ValueError("empty grid")
    return grid


def write_table(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, ["method", "r_min", "ell_max", *RATE_KEYS])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (round(v, 6) if isinstance(v, float) else v)
                             for k, v in row.items()})


def write_curves(curves_by_method: Mapping[str, dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "window", "metric", "mean", "p99"])
        for method, curves in curves_by_method.items():
            for metric, band in curves.items():
                for t, (m, w) in enumerate(zip(band["mean"], band["p99"])):
                    writer.writerow([method, t, metric, repr(float(m)), repr(float(w))])


def config_hash(config: NetworkConfig, extra: dict | None = None) -> str:
    doc = {"network": config.to_dict(), **(extra or {})}
    blob = json.dumps(doc, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_summary(path, **fields) -> None:
    with open(path, "w") as fh:
        json.dump(fields, fh, indent=2, sort_keys=True, default=str)
