"""Constant-bit-rate packet arrivals with random-walk mean rates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import (STREAM_ARRIVALS, STREAM_RATES, NetworkConfig,
                     NetworkRealization, SlaCategory, derive_rng)

WALK_STD = 0.5
RATE_BOUNDS = (0.1, 8.0)
INIT_RANGES = {SlaCategory.HighThroughput: (1.0, 5.0),
               SlaCategory.LowLatency: (0.5, 1.5),
               SlaCategory.BestEffort: (1.0, 5.0)}


@dataclass(frozen=True, eq=False)
class ArrivalTrace:
    """Within-window arrival timestamps of every flow, stored CSR-style.

    Flow ``i`` owns ``times[offsets[i]:offsets[i + 1]]``.
    """

    times: np.ndarray
    offsets: np.ndarray
    mu: np.ndarray

    def for_flow(self, i: int) -> np.ndarray:
        return self.times[self.offsets[i]:self.offsets[i + 1]]

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)


def sla_ranges(slas: Sequence[SlaCategory]) -> tuple[np.ndarray, np.ndarray]:
    """Per-flow (low, high) of the initial-rate distribution."""
    slas = list(slas)
    lo = np.array([INIT_RANGES[SlaCategory(s)][0] for s in slas])
    hi = np.array([INIT_RANGES[SlaCategory(s)][1] for s in slas])
    return lo, hi


def init_rates(slas: Sequence[SlaCategory], rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(*sla_ranges(slas))


def evolve_rates(mu_prev, rng: np.random.Generator, std: float = WALK_STD,
                 bounds=RATE_BOUNDS) -> np.ndarray:
    """One random-walk step, clamped to ``bounds`` (scalars or per-flow arrays)."""
    mu_prev = np.asarray(mu_prev, dtype=float)
    if np.any(mu_prev < 0):
        raise ValueError("rates must be nonnegative")
    step = rng.normal(0.0, std, size=mu_prev.shape) if std > 0 else 0.0
    return np.clip(mu_prev + step, *bounds)


def rate_schedule(realization: NetworkRealization) -> np.ndarray:
    """Mean rates mu_i^t for every window, shape (T, flows)."""
    cfg = realization.config
    if cfg.rate_bounds is None:
        bounds = sla_ranges(f.sla for f in realization.flows)
    else:
        bounds = cfg.rate_bounds
    mu = np.empty((cfg.num_windows, realization.num_flows))
    mu[0] = realization.mu_init
    for t in range(1, cfg.num_windows):
        rng = derive_rng(realization.traffic_seed, STREAM_RATES, t)
        mu[t] = evolve_rates(mu[t - 1], rng, bounds=bounds)
    return mu


def packets_per_window(mu, config: NetworkConfig) -> np.ndarray:
    bits = np.asarray(mu, dtype=float) * config.bandwidth_hz * config.tau_max
    return np.rint(bits / config.packet_size_bits).astype(np.int64)


def generate_arrivals(mu, config: NetworkConfig,
                      rng: np.random.Generator) -> ArrivalTrace:
    """Equally spaced arrivals with a uniform random phase per flow."""
    mu = np.asarray(mu, dtype=float)
    n = packets_per_window(mu, config)
    spacing = np.divide(config.tau_max, n, out=np.zeros(len(n)), where=n > 0)
    phase = rng.uniform(0.0, 1.0, size=len(n)) * spacing
    offsets = np.zeros(len(n) + 1, dtype=np.int64)
    np.cumsum(n, out=offsets[1:])
    k = np.arange(offsets[-1]) - np.repeat(offsets[:-1], n)
    times = np.repeat(phase, n) + k * np.repeat(spacing, n)
    np.minimum(times, np.nextafter(config.tau_max, 0.0), out=times)
    return ArrivalTrace(times, offsets, mu)


def window_arrivals(realization: NetworkRealization, window_index: int,
                    mu: Optional[np.ndarray] = None) -> ArrivalTrace:
    if mu is None:
        mu = rate_schedule(realization)[window_index]
    rng = derive_rng(realization.traffic_seed, STREAM_ARRIVALS, window_index)
    return generate_arrivals(mu, realization.config, rng)
