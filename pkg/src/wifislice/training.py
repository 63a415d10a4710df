"""Offline training of slicing policies.

The packet simulator is not differentiable, so the gradient of each window's
Lagrangian term with respect to the three policy logits is estimated by
central differences. Every perturbed evaluation re-simulates the same window
from the same queue snapshot with the same traffic and fading draws (common
random numbers); the logit gradient is then pushed through the MLP with
:func:`policy.backward`.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import policy as mlp
from .channel import sample_mean_snr
from .domain import (FlowSpec, NetworkConfig, NetworkRealization, QosSpec,
                     SlaCategory, fresh_seed)
from .execution import run_online
from .qos import lagrangian_term, window_terms
from .simulator import Episode
from .traffic import init_rates

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    num_epochs: int = 100
    batch_size: int = 8
    learning_rate: float = 1e-4
    dual_step_pd: float = 0.1
    dual_step: float = 1.0
    lambda_max_init: tuple[float, float] = (1.0, 1.0)
    lambda_margin: float = 1.1
    lambda_floor: float = 1.0
    fd_epsilon: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown training fields: {sorted(unknown)}")
        doc = dict(doc)
        if "lambda_max_init" in doc:
            doc["lambda_max_init"] = tuple(doc["lambda_max_init"])
        return cls(**doc)


@dataclass
class TrainResult:
    params: mlp.PolicyParams
    log: list[dict] = field(default_factory=list)
    timing: list[float] = field(default_factory=list)
    lambda_max: Optional[np.ndarray] = None
    dual_trajectory: Optional[np.ndarray] = None

    @property
    def final_lambda(self) -> Optional[np.ndarray]:
        return None if self.dual_trajectory is None else self.dual_trajectory[-1]


def compositions(total: int = 20) -> list[tuple[int, int, int]]:
    """All (n_H, n_L, n_B) with every part >= 1 summing to ``total``."""
    return [(h, l, total - h - l) for h in range(1, total - 1)
            for l in range(1, total - h)]


def sample_realizations(count: int, rng: np.random.Generator,
                        config: Optional[NetworkConfig] = None) -> list[NetworkRealization]:
    if count < 1:
        raise ValueError("count must be >= 1")
    config = config or NetworkConfig()
    comps = compositions(config.num_flows)
    out = []
    for _ in range(count):
        n_h, n_l, n_b = comps[rng.integers(len(comps))]
        slas = ([SlaCategory.HighThroughput] * n_h + [SlaCategory.LowLatency] * n_l
                + [SlaCategory.BestEffort] * n_b)
        mu = init_rates(slas, rng)
        snr = sample_mean_snr(rng, len(slas), config.snr_db_range)
        flows = [FlowSpec(i, s, float(m), float(d))
                 for i, (s, m, d) in enumerate(zip(slas, mu, snr))]
        out.append(NetworkRealization(config, flows, fresh_seed(rng), fresh_seed(rng)))
    return out


def estimate_logit_gradient(episode: Episode, logits: np.ndarray, lam,
                            qos: QosSpec, eps: float = 1e-2) -> np.ndarray:
    """Central-difference gradient of the current window's Lagrangian term
    with respect to the policy logits, under common random numbers."""
    flows = episode.realization.flows
    grad = np.empty(3)
    for k in range(3):
        step = np.zeros(3)
        step[k] = eps
        plus = episode.evaluate(mlp.softmax(logits + step))
        minus = episode.evaluate(mlp.softmax(logits - step))
        grad[k] = (lagrangian_term(plus, lam, qos, flows)
                   - lagrangian_term(minus, lam, qos, flows)) / (2 * eps)
    return grad


@dataclass
class Rollout:
    grad: mlp.PolicyParams
    lagrangian: float
    objective: float
    constraints: np.ndarray  # time-averaged (f_h, f_l)


def rollout_gradient(params: mlp.PolicyParams, realization: NetworkRealization,
                     lam, eps: float = 1e-2, qos: Optional[QosSpec] = None) -> Rollout:
    """Run one episode with ``lam`` held fixed and accumulate the parameter
    gradient of its Lagrangian."""
    qos = qos or realization.config.qos
    lam = np.asarray(lam, dtype=float)
    ep = Episode(realization)
    T = realization.config.num_windows
    grad = mlp.PolicyParams.zeros_like(params)
    acc = [a for a in grad.arrays()]
    terms = np.zeros((T, 3))
    for t in range(T):
        logits, alloc, cache = mlp.forward(params, mlp.policy_input(ep.state_vector(), lam))
        g = estimate_logit_gradient(ep, logits, lam, qos, eps)
        for a, d in zip(acc, mlp.backward(params, cache, g).arrays()):
            a += d
        terms[t] = window_terms(ep.step(alloc), qos, realization.flows)
    for a in acc:
        a /= T
    obj, f_h, f_l = terms.mean(axis=0)
    value = -obj + lam[0] * f_h + lam[1] * f_l
    return Rollout(grad, float(value), float(obj), np.array([f_h, f_l]))


class Adam:
    def __init__(self, params: mlp.PolicyParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in params.arrays()]
        self.v = [np.zeros_like(a) for a in params.arrays()]
        self.k = 0

    def step(self, params: mlp.PolicyParams, grad: mlp.PolicyParams) -> None:
        self.k += 1
        c1 = 1 - self.beta1 ** self.k
        c2 = 1 - self.beta2 ** self.k
        for p, g, m, v in zip(params.arrays(), grad.arrays(), self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(fn, items))


def _batch_step(params, rollouts: list[Rollout], opt: Adam) -> float:
    value = float(np.mean([r.lagrangian for r in rollouts]))
    if not np.isfinite(value):
        raise TrainingDiverged(f"empirical Lagrangian is {value}")
    mean = mlp.PolicyParams.zeros_like(params)
    for r in rollouts:
        for a, d in zip(mean.arrays(), r.grad.arrays()):
            a += d
    for a in mean.arrays():
        a /= len(rollouts)
    opt.step(params, mean)
    return value


def _batches(n: int, size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for i in range(0, n, size):
        yield order[i:i + size]


def calibrate_lambda_max(params: mlp.PolicyParams, val_set: Sequence[NetworkRealization],
                         config: TrainConfig, runs: Optional[list] = None) -> np.ndarray:
    """New lambda_max from online dual runs on the validation set.

    If ``runs`` is a list, the trajectories are appended to it.
    """
    peak = np.zeros(2)
    trajs = _map(lambda r: run_online(params, r, eta_lambda=config.dual_step),
                 list(val_set), config.threads)
    for traj in trajs:
        peak = np.maximum(peak, traj.dual_iterates.max(axis=0))
    if runs is not None:
        runs.extend(trajs)
    return np.maximum(config.lambda_margin * peak, config.lambda_floor)


def train_state_augmented(train_set: Sequence[NetworkRealization],
                          val_set: Sequence[NetworkRealization],
                          config: TrainConfig,
                          params: Optional[mlp.PolicyParams] = None,
                          on_epoch: Optional[Callable[[dict], None]] = None) -> TrainResult:
    if not train_set or not val_set:
        raise ValueError("training and validation sets must be nonempty")
    rng = np.random.default_rng(config.seed)
    if params is None:
        params = mlp.init_params(rng)
    params = params.copy()
    opt = Adam(params, config.learning_rate, config.adam_beta1, config.adam_beta2,
               config.adam_eps)
    lam_max = np.array(config.lambda_max_init, dtype=float)
    result = TrainResult(params, lambda_max=lam_max)
    for epoch in range(config.num_epochs):
        t0 = time.perf_counter()
        for idx in _batches(len(train_set), config.batch_size, rng):
            lams = rng.uniform(0.0, 1.0, size=(len(idx), 2)) * lam_max
            jobs = [(train_set[i], lam) for i, lam in zip(idx, lams)]
            rollouts = _map(lambda job: rollout_gradient(params, job[0], job[1],
                                                         config.fd_epsilon),
                            jobs, config.threads)
            _batch_step(params, rollouts, opt)
        runs: list = []
        lam_max = calibrate_lambda_max(params, val_set, config, runs)
        row = {
            "epoch": epoch,
            "val_objective": float(np.mean([r.objective.mean() for r in runs])),
            "val_f_h": float(np.mean([r.f_h.mean() for r in runs])),
            "val_f_l": float(np.mean([r.f_l.mean() for r in runs])),
            "lambda_max_h": float(lam_max[0]),
            "lambda_max_l": float(lam_max[1]),
        }
        result.log.append(row)
        result.timing.append(time.perf_counter() - t0)
        log.info("sapd epoch %d: %s", epoch, row)
        if on_epoch:
            on_epoch(row)
    result.lambda_max = lam_max
    return result


def pd_dual_step(lam, constraints, eta: float) -> np.ndarray:
    return np.maximum(np.asarray(lam, float) + eta * np.asarray(constraints, float), 0.0)


def train_vanilla_pd(train_set: Sequence[NetworkRealization], config: TrainConfig,
                     params: Optional[mlp.PolicyParams] = None,
                     on_epoch: Optional[Callable[[dict], None]] = None) -> TrainResult:
    """Alternate one Adam step on the batch Lagrangian at a shared multiplier
    with projected dual ascent on the batch's ergodic constraint values."""
    if not train_set:
        raise ValueError("training set must be nonempty")
    rng = np.random.default_rng(config.seed)
    if params is None:
        params = mlp.init_params(rng)
    params = params.copy()
    opt = Adam(params, config.learning_rate, config.adam_beta1, config.adam_beta2,
               config.adam_eps)
    lam = np.zeros(2)
    duals = [lam]
    result = TrainResult(params)
    for epoch in range(config.num_epochs):
        t0 = time.perf_counter()
        stats = []
        for idx in _batches(len(train_set), config.batch_size, rng):
            rollouts = _map(lambda i: rollout_gradient(params, train_set[i], lam,
                                                       config.fd_epsilon),
                            list(idx), config.threads)
            _batch_step(params, rollouts, opt)
            f = np.mean([r.constraints for r in rollouts], axis=0)
            stats.append([np.mean([r.objective for r in rollouts]), *f])
            lam = pd_dual_step(lam, f, config.dual_step_pd)
            duals.append(lam)
        obj, f_h, f_l = np.mean(stats, axis=0)
        row = {"epoch": epoch, "train_objective": float(obj), "train_f_h": float(f_h),
               "train_f_l": float(f_l), "lambda_h": float(lam[0]), "lambda_l": float(lam[1])}
        result.log.append(row)
        result.timing.append(time.perf_counter() - t0)
        log.info("pd epoch %d: %s", epoch, row)
        if on_epoch:
            on_epoch(row)
    result.dual_trajectory = np.array(duals)
    return result


def split_seeds(root_seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for the train, validation and test sets."""
    names = ("train", "val", "test")
    ss = np.random.SeedSequence(int(root_seed)).spawn(len(names))
    return {n: np.random.default_rng(s) for n, s in zip(names, ss)}

