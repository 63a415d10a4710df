import numpy as np
import pytest

from wifislice.channel import ChannelTrace
from wifislice.domain import FlowSpec, NetworkConfig, NetworkRealization, SlaCategory
from wifislice.simulator import QueueState
from wifislice.traffic import ArrivalTrace

H, L, B = SlaCategory.HighThroughput, SlaCategory.LowLatency, SlaCategory.BestEffort


def make_realization(slas, mu=1.0, snr_db=20.0, config=None, seeds=(1, 2)):
    """Realization with flows in the given SLA order (ids 0..n-1)."""
    config = config or NetworkConfig()
    n = len(slas)
    mu = np.broadcast_to(np.asarray(mu, float), (n,))
    snr = np.broadcast_to(np.asarray(snr_db, float), (n,))
    flows = [FlowSpec(i, SlaCategory(s), float(m), float(d))
             for i, (s, m, d) in enumerate(zip(slas, mu, snr))]
    return NetworkRealization(config, flows, *seeds)


def gain_for_rate(g, base=2.0):
    """Channel gain h (sigma^2 = 1) whose spectral efficiency is exactly ``g``."""
    return base ** g - 1.0


def constant_channel(realization, window_index, g):
    gains = np.array([gain_for_rate(x) for x in np.broadcast_to(g, (realization.num_flows,))])
    return ChannelTrace(window_index, gains, realization.config.num_slots)


def no_arrivals(n):
    return ArrivalTrace(np.zeros(0), np.zeros(n + 1, dtype=np.int64), np.zeros(n))


def saturated_queues(realization, flows, packets=None, arrival=0.0):
    """Queues where each flow in ``flows`` holds ``packets`` packets that
    arrived at ``arrival``."""
    cfg = realization.config
    q = QueueState.empty(realization.num_flows, cfg.queue_capacity_packets)
    count = cfg.queue_capacity_packets if packets is None else packets
    for f in flows:
        for _ in range(count):
            q.push(f, arrival, cfg.packet_size_bits)
    return q


@pytest.fixture
def config():
    return NetworkConfig()


@pytest.fixture
def small_realization():
    return make_realization([H, H, L, L, B, B], mu=[2.0, 3.0, 0.8, 1.0, 2.0, 4.0],
                            snr_db=[62.0, 70.0, 65.0, 75.0, 60.0, 78.0])


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
