"""Objective, QoS constraint functions and the Lagrangian.

Constraints are normalized worst-case metrics over each SLA category, so a
value <= 0 means the category meets its target in that window. The
Lagrangian is in minimization form: the objective enters negated.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .domain import DualMultipliers, FlowSpec, QosSpec, SlaCategory, WindowMetrics


def _indices(flows: Sequence[FlowSpec], sla: SlaCategory) -> np.ndarray:
    idx = np.array([i for i, f in enumerate(flows) if f.sla == sla], dtype=np.int64)
    if idx.size == 0:
        raise ValueError(f"no {sla.name} flows")
    return idx


def throughput_constraint(window: WindowMetrics, qos: QosSpec,
                          flows: Sequence[FlowSpec]) -> float:
    r = window.throughput[_indices(flows, SlaCategory.HighThroughput)]
    return float(np.max(1.0 - r / qos.r_min))


def latency_constraint(window: WindowMetrics, qos: QosSpec,
                       flows: Sequence[FlowSpec]) -> float:
    ell = window.latency_or_zero()[_indices(flows, SlaCategory.LowLatency)]
    return float(np.max(ell / qos.ell_max - 1.0))


def objective(window: WindowMetrics, flows: Sequence[FlowSpec]) -> float:
    """Mean best-effort throughput (to be maximized)."""
    return float(np.mean(window.throughput[_indices(flows, SlaCategory.BestEffort)]))


def window_terms(window: WindowMetrics, qos: QosSpec,
                 flows: Sequence[FlowSpec]) -> tuple[float, float, float]:
    """(objective, f_h, f_l) of one window."""
    return (objective(window, flows), throughput_constraint(window, qos, flows),
            latency_constraint(window, qos, flows))


def lagrangian_term(window: WindowMetrics, lam, qos: QosSpec,
                    flows: Sequence[FlowSpec]) -> float:
    lam = lam.as_array() if isinstance(lam, DualMultipliers) else np.asarray(lam)
    obj, f_h, f_l = window_terms(window, qos, flows)
    return -obj + lam[0] * f_h + lam[1] * f_l


def lagrangian(trajectory: Sequence[WindowMetrics], lam, qos: QosSpec,
               flows: Sequence[FlowSpec]) -> float:
    if not trajectory:
        raise ValueError("empty trajectory")
    return float(np.mean([lagrangian_term(w, lam, qos, flows) for w in trajectory]))
