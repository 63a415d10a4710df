"""Online execution of slicing policies and the classical baselines."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import policy as mlp
from .domain import NetworkRealization, QosSpec, SliceAllocation, WindowMetrics
from .qos import window_terms
from .simulator import Episode

BASELINES = ("uniform", "proportional", "traffic_weighted")


@dataclass
class Trajectory:
    """Everything recorded while running one realization for T windows.

    ``lambdas[t]`` is the multiplier vector fed to the policy at window t and
    ``dual_iterates`` the sequence lambda_0, lambda_1, ... of online updates.
    ``states`` holds the network state vectors seen by the policy, when recorded.
    """

    realization: NetworkRealization
    windows: list[WindowMetrics]
    allocations: np.ndarray = None
    lambdas: np.ndarray = None
    dual_iterates: np.ndarray = None
    f_h: np.ndarray = None
    f_l: np.ndarray = None
    objective: np.ndarray = None
    qos: Optional[QosSpec] = None
    states: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        T = len(self.windows)
        if self.qos is None:
            self.qos = self.realization.config.qos
        if self.f_h is None:
            terms = np.array([window_terms(w, self.qos, self.realization.flows)
                              for w in self.windows]).reshape(T, 3)
            self.objective, self.f_h, self.f_l = terms.T.copy()
        if self.lambdas is None:
            self.lambdas = np.zeros((T, 2))
        if self.allocations is None:
            self.allocations = np.full((T, 3), np.nan)

    def records(self):
        for t in range(len(self.windows)):
            p = self.allocations[t]
            yield {"t": t, "p_h": float(p[0]), "p_l": float(p[1]), "p_b": float(p[2]),
                   "lambda_h": float(self.lambdas[t, 0]), "lambda_l": float(self.lambdas[t, 1]),
                   "f_h": float(self.f_h[t]), "f_l": float(self.f_l[t]),
                   "objective": float(self.objective[t])}

    def write_jsonl(self, fh, realization_index: Optional[int] = None) -> None:
        for rec in self.records():
            if realization_index is not None:
                rec = {"realization": realization_index, **rec}
            fh.write(json.dumps(rec) + "\n")


def online_dual_update(lam, constraint_values, eta: float) -> np.ndarray:
    """Projected ascent on the mean of ``constraint_values`` (rows = windows)."""
    f = np.asarray(constraint_values, dtype=float).reshape(-1, 2)
    return np.maximum(np.asarray(lam, dtype=float) + eta / len(f) * f.sum(axis=0), 0.0)


def run_online(params: mlp.PolicyParams, realization: NetworkRealization,
               T: Optional[int] = None, T0: Optional[int] = None,
               eta_lambda: float = 1.0, qos: Optional[QosSpec] = None,
               slot_log: Optional[list] = None) -> Trajectory:
    """Execute the state-augmented policy with dual dynamics, lambda_0 = 0."""
    cfg = realization.config
    T = cfg.num_windows if T is None else T
    T0 = cfg.dual_period if T0 is None else T0
    qos = cfg.qos if qos is None else qos
    if T % T0 != 0:
        raise ValueError("T0 must divide T")
    if not eta_lambda >= 0:
        raise ValueError("dual step size must be nonnegative")
    if T > cfg.num_windows:
        raise ValueError("T exceeds the configured number of windows")

    ep = Episode(realization)
    flows = realization.flows
    lam = np.zeros(2)
    iterates = [lam]
    windows, allocs, lams, terms, states = [], [], [], [], []
    for t in range(T):
        states.append(ep.state_vector())
        x = mlp.policy_input(states[-1], lam)
        _, alloc, _ = mlp.forward(params, x)
        w = ep.step(alloc, slot_log=slot_log)
        windows.append(w)
        allocs.append(alloc.as_array())
        lams.append(lam)
        terms.append(window_terms(w, qos, flows))
        if (t + 1) % T0 == 0:
            block = np.array(terms[-T0:])[:, 1:]
            lam = online_dual_update(lam, block, eta_lambda)
            iterates.append(lam)
    terms = np.array(terms)
    return Trajectory(realization, windows, np.array(allocs), np.array(lams),
                      np.array(iterates), terms[:, 1].copy(), terms[:, 2].copy(),
                      terms[:, 0].copy(), qos, np.array(states))


def baseline_allocation(kind: str, realization: NetworkRealization,
                        demand=None) -> SliceAllocation:
    """Classical slicing rule; ``demand`` is the current per-flow mean rate."""
    counts = realization.counts().astype(float)
    if np.any(counts < 1):
        raise ValueError("every slice needs at least one flow")
    if kind == "uniform":
        return SliceAllocation(1 / 3, 1 / 3, 1 / 3)
    if kind == "proportional":
        return SliceAllocation.from_array(counts / counts.sum())
    if kind == "traffic_weighted":
        if demand is None:
            demand = realization.mu_init
        per_slice = np.bincount(realization.sla_array, weights=np.asarray(demand, float),
                                minlength=3)
        if not per_slice.sum() > 0:
            return baseline_allocation("proportional", realization)
        return SliceAllocation.from_array(per_slice / per_slice.sum())
    raise ValueError(f"unknown baseline {kind!r}")


def run_policy(realization: NetworkRealization,
               allocate: Callable[[Episode], SliceAllocation],
               qos: Optional[QosSpec] = None, lam=None,
               slot_log: Optional[list] = None) -> Trajectory:
    """Roll a fixed (dual-free) allocation rule through all windows."""
    ep = Episode(realization)
    windows, allocs = [], []
    while not ep.done:
        alloc = allocate(ep)
        allocs.append(alloc.as_array())
        windows.append(ep.step(alloc, slot_log=slot_log))
    T = len(windows)
    lambdas = np.tile(np.zeros(2) if lam is None else np.asarray(lam, float), (T, 1))
    return Trajectory(realization, windows, np.array(allocs), lambdas, qos=qos)


def run_baseline(kind: str, realization: NetworkRealization,
                 qos: Optional[QosSpec] = None, slot_log=None) -> Trajectory:
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}")
    return run_policy(realization,
                      lambda ep: baseline_allocation(kind, realization, ep.mu[ep.t]),
                      qos=qos, slot_log=slot_log)


def run_fixed_lambda(params: mlp.PolicyParams, realization: NetworkRealization,
                     lam, qos: Optional[QosSpec] = None, slot_log=None) -> Trajectory:
    """Execute a primal-dual policy with its multiplier frozen at ``lam``."""
    lam = np.asarray(lam, dtype=float)

    def allocate(ep):
        return mlp.forward(params, mlp.policy_input(ep.state_vector(), lam))[1]

    return run_policy(realization, allocate, qos=qos, lam=lam, slot_log=slot_log)
