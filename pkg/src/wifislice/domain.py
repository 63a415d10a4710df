"""Core value types, configuration and the network-state feature vector."""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

# Max of the Unif[1, 5] initial-rate range; keeps MLP inputs O(1).
RATE_NORMALIZER = 5.0

# Stream tags for hierarchical seeding: root -> realization -> stream -> window.
STREAM_RATES = 1
STREAM_ARRIVALS = 2
STREAM_CHANNEL = 3


class ConfigError(ValueError):
    """Raised for invalid configurations or realizations."""


class SlaCategory(enum.IntEnum):
    HighThroughput = 0
    LowLatency = 1
    BestEffort = 2


@dataclass(frozen=True)
class QosSpec:
    r_min: float = 1.0  # bps/Hz
    ell_max: float = 10.0  # ms

    def __post_init__(self):
        if not (self.r_min > 0 and self.ell_max > 0):
            raise ConfigError(f"QoS targets must be positive, got {self}")


@dataclass(frozen=True)
class NetworkConfig:
    bandwidth_hz: float = 20e6
    num_flows: int = 20
    num_windows: int = 50
    dual_period: int = 2
    tau_max: float = 0.05
    slot_duration: float = 0.5e-3
    packet_size_bits: float = 10_000.0
    queue_capacity_packets: int = 500
    noise_power: float = 1.0
    qos: QosSpec = field(default_factory=QosSpec)
    rng_seed: int = 0
    log_base: float = 2.0
    latency_mode: str = "conventional"
    snr_db_range: tuple[float, float] = (60.0, 80.0)
    # None clamps each flow's random walk to its SLA's initial-rate range.
    rate_bounds: Optional[tuple[float, float]] = None

    @property
    def num_slots(self) -> int:
        return int(round(self.tau_max / self.slot_duration))

    def with_qos(self, r_min: float, ell_max: float) -> "NetworkConfig":
        return replace(self, qos=QosSpec(r_min, ell_max))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkConfig":
        doc = dict(doc)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "qos" in doc and isinstance(doc["qos"], dict):
            doc["qos"] = QosSpec(**doc["qos"])
        for key in ("snr_db_range", "rate_bounds"):
            if doc.get(key) is not None:
                doc[key] = tuple(float(v) for v in doc[key])
        return cls(**doc)


def validate_config(config: NetworkConfig) -> list[str]:
    """Return every violated invariant of ``config`` (empty list means ok)."""
    errors = []
    if not config.bandwidth_hz > 0:
        errors.append("W must be positive")
    if config.num_flows < 3:
        errors.append("num_flows must be at least 3 (one per SLA category)")
    if config.num_windows < 1:
        errors.append("T must be at least 1")
    if config.dual_period < 1:
        errors.append("T0 must be at least 1")
    elif config.num_windows % config.dual_period != 0:
        errors.append("T0 must divide T")
    if not config.slot_duration > 0:
        errors.append("slot_duration must be positive")
    if not config.tau_max > 0:
        errors.append("tau_max must be positive")
    if config.slot_duration > 0 and config.tau_max > 0:
        ratio = config.tau_max / config.slot_duration
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            errors.append("tau_max must be an integer multiple of slot_duration")
    if not config.packet_size_bits > 0:
        errors.append("packet_size_bits must be positive")
    if config.queue_capacity_packets < 1:
        errors.append("Q_max must be at least 1")
    if not config.noise_power > 0:
        errors.append("noise_power must be positive")
    if config.log_base not in (2.0, float(np.e)):
        errors.append("log_base must be 2 or e")
    if config.latency_mode not in ("conventional", "literal"):
        errors.append("latency_mode must be 'conventional' or 'literal'")
    lo, hi = config.snr_db_range
    if not lo <= hi:
        errors.append("snr_db_range must be ordered")
    if config.rate_bounds is not None and not 0 < config.rate_bounds[0] <= config.rate_bounds[1]:
        errors.append("rate_bounds must be positive and ordered")
    return errors


@dataclass(frozen=True)
class FlowSpec:
    id: int
    sla: SlaCategory
    mu_init: float
    mean_snr_db: float

    def __post_init__(self):
        if not self.mu_init > 0:
            raise ConfigError(f"flow {self.id}: mu_init must be positive")


@dataclass(frozen=True)
class NetworkRealization:
    config: NetworkConfig
    flows: tuple[FlowSpec, ...]
    traffic_seed: int
    channel_seed: int

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))
        if not self.flows:
            raise ConfigError("realization has no flows")
        ids = [f.id for f in self.flows]
        if len(set(ids)) != len(ids):
            raise ConfigError("flow ids must be unique")
        present = {f.sla for f in self.flows}
        missing = [c.name for c in SlaCategory if c not in present]
        if missing:
            raise ConfigError(f"no flows in SLA categories {missing}")

    @property
    def num_flows(self) -> int:
        return len(self.flows)

    @property
    def sla_array(self) -> np.ndarray:
        return np.array([int(f.sla) for f in self.flows], dtype=np.int64)

    @property
    def mu_init(self) -> np.ndarray:
        return np.array([f.mu_init for f in self.flows])

    @property
    def mean_snr_db(self) -> np.ndarray:
        return np.array([f.mean_snr_db for f in self.flows])

    def counts(self) -> np.ndarray:
        return np.bincount(self.sla_array, minlength=3)

    def members(self, sla: SlaCategory) -> np.ndarray:
        return np.flatnonzero(self.sla_array == int(sla))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "flows": [
                {"id": f.id, "sla": f.sla.name, "mu_init": f.mu_init,
                 "mean_snr_db": f.mean_snr_db}
                for f in self.flows
            ],
            "traffic_seed": int(self.traffic_seed),
            "channel_seed": int(self.channel_seed),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkRealization":
        flows = tuple(
            FlowSpec(int(f["id"]), SlaCategory[f["sla"]], float(f["mu_init"]),
                     float(f["mean_snr_db"]))
            for f in doc["flows"]
        )
        return cls(NetworkConfig.from_dict(doc["config"]), flows,
                   int(doc["traffic_seed"]), int(doc["channel_seed"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NetworkRealization":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SliceAllocation:
    p_h: float
    p_l: float
    p_b: float

    def __post_init__(self):
        p = self.as_array()
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"allocation is not on the simplex: {p}")

    @classmethod
    def from_array(cls, p) -> "SliceAllocation":
        return cls(float(p[0]), float(p[1]), float(p[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.p_h, self.p_l, self.p_b])


@dataclass(frozen=True)
class DualMultipliers:
    lambda_h: float = 0.0
    lambda_l: float = 0.0

    def __post_init__(self):
        if not (self.lambda_h >= 0 and self.lambda_l >= 0):
            raise ValueError(f"dual multipliers must be nonnegative: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.lambda_h, self.lambda_l])


@dataclass(frozen=True, eq=False)
class WindowMetrics:
    """QoS measurements of one slicing window.

    ``latency`` is in ms and holds NaN where the flow neither transmitted nor
    had a backlog. Packet counters satisfy
    ``queued_start + generated == completed + dropped + queued_end``.
    """

    t: int
    throughput: np.ndarray
    latency: np.ndarray
    generated: np.ndarray
    completed: np.ndarray
    dropped: np.ndarray
    queued_start: np.ndarray
    queued_end: np.ndarray

    def __post_init__(self):
        for name in ("throughput", "latency", "generated", "completed",
                     "dropped", "queued_start", "queued_end"):
            arr = np.array(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def latency_or_zero(self) -> np.ndarray:
        return np.nan_to_num(self.latency, nan=0.0)

    def conserves_packets(self) -> bool:
        lhs = self.queued_start + self.generated
        rhs = self.completed + self.dropped + self.queued_end
        return bool(np.array_equal(lhs, rhs))


def arrival_rate_estimates(window: WindowMetrics, config: NetworkConfig) -> np.ndarray:
    """Empirical per-flow arrival rate (bps/Hz) observed during ``window``."""
    bits = window.generated * config.packet_size_bits
    return bits / (config.bandwidth_hz * config.tau_max)


def build_state_vector(realization: NetworkRealization,
                       prev_window: Optional[WindowMetrics] = None,
                       arrival_estimates: Optional[Sequence[float]] = None) -> np.ndarray:
    """Nine-entry network state: flow fractions, mean and total rates per slice.

    Rates come from ``arrival_estimates`` if given, else from the previous
    window's generated packets, else (window 0) from the declared ``mu_init``.
    """
    if not realization.flows:
        raise ConfigError("empty flow list")
    if arrival_estimates is not None:
        rates = np.asarray(arrival_estimates, dtype=float)
    elif prev_window is not None:
        rates = arrival_rate_estimates(prev_window, realization.config)
    else:
        rates = realization.mu_init
    if np.any(rates < 0):
        raise ValueError("arrival estimates must be nonnegative")
    sla = realization.sla_array
    counts = np.bincount(sla, minlength=3).astype(float)
    totals = np.bincount(sla, weights=rates, minlength=3)
    n = len(sla)
    fractions = counts / n
    avg = totals / np.maximum(counts, 1.0) / RATE_NORMALIZER
    tot = totals / RATE_NORMALIZER / n
    return np.concatenate([fractions, avg, tot])


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def fresh_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**64, dtype=np.uint64))
