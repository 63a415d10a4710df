"""Per-window queueing simulation with fluid round-robin inside each slice.

Flows of a slice whose head packet has arrived share the slice's airtime
equally, so under saturation every flow gets the same airtime and a
throughput proportional to its own spectral efficiency. This is the limit of
round-robin turn taking with a vanishing turn length; unlike a finite turn it
keeps per-flow throughput monotone in the slice's allocation.

The inner loop lives in a compiled kernel (``_kernel``). When the extension
is missing, or ``WIFISLICE_PURE_PYTHON=1`` is set, the pure-Python twin in
``_kernel_py`` is used instead; both produce bit-identical results.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernel_py
from .channel import ChannelTrace, sample_fading, shannon_rate
from .domain import (FlowSpec, NetworkConfig, NetworkRealization,
                     SliceAllocation, WindowMetrics, build_state_vector)
from .traffic import ArrivalTrace, rate_schedule, window_arrivals

if os.environ.get("WIFISLICE_PURE_PYTHON") == "1":
    _compiled = None
else:
    try:
        from . import _kernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

KERNEL = "compiled" if _compiled is not None else "python"
_run_window = (_compiled or _kernel_py).run_window


def kernels() -> dict:
    """Available kernel implementations by name."""
    found = {"python": _kernel_py.run_window}
    if _compiled is not None:
        found["compiled"] = _compiled.run_window
    return found


@dataclass
class QueueState:
    """FIFO queues of all flows as fixed-capacity ring buffers.

    Row ``f`` holds the arrival time (absolute, s) and remaining bits of each
    buffered packet of flow ``f``; ``head`` and ``length`` locate them.
    """

    arrival: np.ndarray
    remaining: np.ndarray
    head: np.ndarray
    length: np.ndarray

    @classmethod
    def empty(cls, num_flows: int, capacity: int) -> "QueueState":
        shape = (num_flows, capacity)
        return cls(np.zeros(shape), np.zeros(shape),
                   np.zeros(num_flows, dtype=np.int64),
                   np.zeros(num_flows, dtype=np.int64))

    def copy(self) -> "QueueState":
        return QueueState(self.arrival.copy(), self.remaining.copy(),
                          self.head.copy(), self.length.copy())

    def push(self, flow: int, arrival_time: float, bits: float) -> None:
        """Append one packet (used to build test and warm-start states)."""
        cap = self.arrival.shape[1]
        if self.length[flow] >= cap:
            raise OverflowError(f"queue of flow {flow} is full")
        tail = (self.head[flow] + self.length[flow]) % cap
        self.arrival[flow, tail] = arrival_time
        self.remaining[flow, tail] = bits
        self.length[flow] += 1

    def head_arrival(self) -> np.ndarray:
        rows = np.arange(len(self.head))
        return np.where(self.length > 0, self.arrival[rows, self.head], np.nan)


@dataclass(frozen=True, eq=False)
class SlotLog:
    """Per-slot service record: bits served and queue length after arrivals."""

    bits: np.ndarray
    queue_len: np.ndarray
    sla: np.ndarray

    def write_csv(self, path, first_slot: int = 0) -> None:
        with open(path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if fh.tell() == 0:
                writer.writerow(["slot", "slice", "flow", "bits_served", "queue_len"])
            for s, f in zip(*np.nonzero(self.bits > 0)):
                writer.writerow([first_slot + s, int(self.sla[f]), f,
                                 repr(float(self.bits[s, f])), int(self.queue_len[s, f])])


def instantaneous_rate(allocation: Union[SliceAllocation, np.ndarray],
                       flow: FlowSpec, h: float, sigma2: float = 1.0,
                       base: float = 2.0) -> float:
    p = allocation.as_array() if isinstance(allocation, SliceAllocation) else allocation
    return float(p[int(flow.sla)] * shannon_rate(h, sigma2, base))


def packet_latency(arrival_time: float, service_time: float, rate: float,
                   config: NetworkConfig) -> float:
    """Latency (ms) of a packet with instantaneous rate ``rate`` (bps/Hz).

    ``service_time`` is when a full-rate transmission of the packet would have
    had to start to finish at its actual completion time, so the conventional
    form equals the packet's sojourn time.
    """
    if service_time < arrival_time:
        raise ValueError("service cannot start before arrival")
    if not rate > 0:
        raise ValueError("packet latency needs a positive rate")
    P = config.packet_size_bits
    if config.latency_mode == "literal":
        return (service_time - arrival_time) * 1000.0 / P + 1.0 / (rate * P)
    return ((service_time - arrival_time) + P / (rate * config.bandwidth_hz)) * 1000.0


def _slice_members(realization: NetworkRealization) -> tuple[np.ndarray, np.ndarray]:
    sla = realization.sla_array
    members = np.argsort(sla, kind="stable").astype(np.int64)
    offsets = np.zeros(4, dtype=np.int64)
    np.cumsum(np.bincount(sla, minlength=3), out=offsets[1:])
    return members, offsets


def simulate_window(realization: NetworkRealization, window_index: int,
                    allocation: Union[SliceAllocation, np.ndarray],
                    queues: QueueState, arrivals: ArrivalTrace, channel: ChannelTrace,
                    slot_log: Optional[list] = None, kernel=None):
    """Simulate one slicing window.

    Inputs are not mutated; an updated copy of the queue state is returned
    alongside the window's metrics. ``allocation`` may be a raw
    per-slice fraction array (not necessarily normalized). If ``slot_log`` is
    a list, a :class:`SlotLog` for the window is appended to it.
    """
    config = realization.config
    n = realization.num_flows
    if channel.window_index != window_index or len(channel.gains) != n:
        raise ValueError("channel trace does not match this window")
    if len(arrivals.offsets) != n + 1:
        raise ValueError("arrival trace does not match the realization")
    if queues.arrival.shape != (n, config.queue_capacity_packets):
        raise ValueError("queue state does not match the realization")
    p = allocation.as_array() if isinstance(allocation, SliceAllocation) \
        else np.asarray(allocation, dtype=float)
    if p.shape != (3,) or np.any(p < 0):
        raise ValueError(f"invalid allocation {p}")

    sla = realization.sla_array
    g = shannon_rate(channel.gains, config.noise_power, config.log_base)
    inst = p[sla] * g
    rate_bps = inst * config.bandwidth_hz
    members, moffsets = _slice_members(realization)
    window_start = window_index * config.tau_max
    abs_times = window_start + arrivals.times

    q = queues.copy()
    queued_start = q.length.copy()
    n_slots = config.num_slots
    bits = np.zeros(n)
    completed = np.zeros(n, dtype=np.int64)
    dropped = np.zeros(n, dtype=np.int64)
    lat = np.zeros(n)
    slot_bits = np.zeros((n_slots, n))
    slot_qlen = np.zeros((n_slots, n), dtype=np.int64)
    run = kernel or _run_window
    run(members, moffsets, rate_bps, inst, abs_times,
        arrivals.offsets.astype(np.int64), q.arrival, q.remaining,
        q.head, q.length, float(window_start),
        float(config.slot_duration), n_slots, float(config.packet_size_bits),
        config.latency_mode == "literal", bits, completed, dropped, lat,
        slot_bits, slot_qlen)

    latency = np.where(lat >= 0.0, lat, np.nan)
    window_end = window_start + config.tau_max
    hol = (completed == 0) & (q.length > 0)
    if np.any(hol):
        age_ms = (window_end - q.head_arrival()) * 1000.0
        latency = np.where(hol, age_ms, latency)
    metrics = WindowMetrics(
        t=window_index,
        throughput=bits / (config.bandwidth_hz * config.tau_max),
        latency=latency,
        generated=arrivals.counts(),
        completed=completed,
        dropped=dropped,
        queued_start=queued_start,
        queued_end=q.length.copy(),
    )
    if slot_log is not None:
        slot_log.append(SlotLog(slot_bits, slot_qlen, sla))
    return metrics, q


class Episode:
    """Mutable world of one realization rolled forward window by window.

    Exogenous inputs (rates, arrivals, fading) are regenerated from the
    realization's seeds, so any window can be re-simulated bit-identically
    from a snapshot of the queue state.
    """

    def __init__(self, realization: NetworkRealization):
        self.realization = realization
        cfg = realization.config
        self.mu = rate_schedule(realization)
        self.queues = QueueState.empty(realization.num_flows, cfg.queue_capacity_packets)
        self.t = 0
        self.history: list[WindowMetrics] = []
        self._inputs: Optional[tuple[ArrivalTrace, ChannelTrace]] = None

    @property
    def done(self) -> bool:
        return self.t >= self.realization.config.num_windows

    def state_vector(self) -> np.ndarray:
        prev = self.history[-1] if self.history else None
        return build_state_vector(self.realization, prev)

    def window_inputs(self) -> tuple[ArrivalTrace, ChannelTrace]:
        if self._inputs is None:
            arrivals = window_arrivals(self.realization, self.t, self.mu[self.t])
            channel = sample_fading(self.realization, self.t)
            self._inputs = (arrivals, channel)
        return self._inputs

    def evaluate(self, allocation) -> WindowMetrics:
        """Simulate the current window without advancing the episode."""
        arrivals, channel = self.window_inputs()
        metrics, _ = simulate_window(self.realization, self.t, allocation,
                                     self.queues, arrivals, channel)
        return metrics

    def step(self, allocation, slot_log: Optional[list] = None) -> WindowMetrics:
        if self.done:
            raise RuntimeError("episode already finished")
        arrivals, channel = self.window_inputs()
        metrics, self.queues = simulate_window(
            self.realization, self.t, allocation, self.queues, arrivals, channel,
            slot_log=slot_log)
        self.history.append(metrics)
        self.t += 1
        self._inputs = None
        return metrics
