import csv

import numpy as np
import pytest

from conftest import (B, H, L, constant_channel, make_realization, no_arrivals,
                      saturated_queues)
from wifislice import simulator
from wifislice.domain import NetworkConfig, SliceAllocation
from wifislice.simulator import (Episode, QueueState, instantaneous_rate,
                                 packet_latency, simulate_window)
from wifislice.traffic import ArrivalTrace


def run(realization, alloc, queues, arrivals, g, t=0, **kw):
    channel = constant_channel(realization, t, g)
    return simulate_window(realization, t, np.asarray(alloc, float), queues,
                           arrivals, channel, **kw)


def test_instantaneous_rate_example():
    r = make_realization([H, L, B])
    alloc = SliceAllocation(1 / 2, 1 / 3, 1 / 6)
    assert instantaneous_rate(alloc, r.flows[0], 3.0) == pytest.approx(1.0)
    assert instantaneous_rate(np.array([0.0, 0.5, 0.5]), r.flows[0], 1e6) == 0.0
    assert instantaneous_rate(alloc, r.flows[1], 0.0) == 0.0


def test_packet_latency_examples(config):
    rate = config.packet_size_bits / (config.bandwidth_hz * 1e-4)
    assert packet_latency(1.0, 1.0, rate, config) == pytest.approx(0.1)
    assert packet_latency(1.0, 1.005, rate, config) == pytest.approx(5.1)
    literal = NetworkConfig(latency_mode="literal")
    assert packet_latency(0.2, 0.2, 10.0 / literal.packet_size_bits, literal) == pytest.approx(0.1)


def test_packet_latency_preconditions(config):
    with pytest.raises(ValueError):
        packet_latency(1.0, 0.5, 1.0, config)
    with pytest.raises(ValueError):
        packet_latency(0.0, 0.0, 0.0, config)


def test_single_saturated_flow_matches_closed_form():
    r = make_realization([H, L, B])
    q = saturated_queues(r, [0])
    m, _ = run(r, [0.5, 0.25, 0.25], q, no_arrivals(3), 2.0)
    assert m.throughput[0] == pytest.approx(1.0, rel=1e-12)
    assert m.completed[0] == 100
    assert m.conserves_packets()


def test_two_symmetric_flows_split_evenly():
    r = make_realization([H, H, L, B])
    q = saturated_queues(r, [0, 1])
    m, _ = run(r, [0.6, 0.2, 0.2], q, no_arrivals(4), 3.0)
    share = 0.6 * 3.0 / 2
    slot_bits = 0.6 * 3.0 * r.config.slot_duration / r.config.tau_max
    assert abs(m.throughput[0] - share) <= slot_bits
    assert m.throughput[0] == m.throughput[1]
    assert abs(int(m.completed[0]) - int(m.completed[1])) <= 1


def test_saturated_flows_share_airtime_not_bits():
    r = make_realization([H, H, L, B])
    q = saturated_queues(r, [0, 1])
    channel = constant_channel(r, 0, 1.0)
    channel.gains[:2] = [2.0 ** 2 - 1, 2.0 ** 4 - 1]
    m, _ = simulate_window(r, 0, np.array([0.5, 0.25, 0.25]), q, no_arrivals(4), channel)
    np.testing.assert_allclose(m.throughput[:2], [0.5 * 2 / 2, 0.5 * 4 / 2], rtol=1e-9)


def test_idle_network():
    r = make_realization([H, L, B])
    q = QueueState.empty(3, r.config.queue_capacity_packets)
    m, q2 = run(r, [1 / 3] * 3, q, no_arrivals(3), 5.0)
    np.testing.assert_array_equal(m.throughput, 0.0)
    assert np.all(np.isnan(m.latency))
    np.testing.assert_array_equal(m.dropped, 0)
    np.testing.assert_array_equal(m.latency_or_zero(), 0.0)


def test_light_load_latency_is_transmission_time():
    # One L flow with 10 packets spread over the window: each is served
    # alone and immediately, so latency is one packet's airtime.
    r = make_realization([H, L, B])
    cfg = r.config
    times = np.arange(10) * 0.005 + 0.001
    arrivals = ArrivalTrace(times, np.array([0, 0, 10, 10]), np.zeros(3))
    q = QueueState.empty(3, cfg.queue_capacity_packets)
    m, _ = run(r, [0.25, 0.5, 0.25], q, arrivals, 2.0)
    airtime_ms = cfg.packet_size_bits / (0.5 * 2.0 * cfg.bandwidth_hz) * 1000
    assert m.latency[1] == pytest.approx(airtime_ms, rel=1e-9)
    assert m.completed[1] == 10


def test_queueing_delay_enters_latency():
    # Five packets arrive together; the last waits for four others.
    r = make_realization([H, L, B])
    cfg = r.config
    arrivals = ArrivalTrace(np.full(5, 0.002), np.array([0, 0, 5, 5]), np.zeros(3))
    q = QueueState.empty(3, cfg.queue_capacity_packets)
    m, _ = run(r, [0.25, 0.5, 0.25], q, arrivals, 2.0)
    airtime_ms = cfg.packet_size_bits / (0.5 * 2.0 * cfg.bandwidth_hz) * 1000
    assert m.latency[1] == pytest.approx(5 * airtime_ms, rel=1e-9)


def test_backlog_without_service_reports_head_age():
    r = make_realization([H, L, B])
    q = saturated_queues(r, [1], packets=3, arrival=-0.010)
    m, q2 = run(r, [0.5, 0.0, 0.5], q, no_arrivals(3), 2.0)
    assert m.completed[1] == 0
    assert m.latency[1] == pytest.approx(60.0)
    assert q2.length[1] == 3


def test_overload_drops_and_conserves():
    cfg = NetworkConfig(queue_capacity_packets=20)
    r = make_realization([H, L, B], config=cfg)
    times = np.linspace(0, 0.049, 300)
    arrivals = ArrivalTrace(np.concatenate([times] * 3), np.array([0, 300, 600, 900]),
                            np.zeros(3))
    q = QueueState.empty(3, cfg.queue_capacity_packets)
    m, q2 = run(r, [0.8, 0.1, 0.1], q, arrivals, 0.5)
    assert m.dropped.sum() > 0
    assert m.conserves_packets()
    assert np.all(q2.length <= cfg.queue_capacity_packets)


def test_inputs_are_not_mutated(small_realization):
    ep = Episode(small_realization)
    ep.step(np.array([0.4, 0.3, 0.3]))
    before = ep.queues.copy()
    ep.evaluate(np.array([0.2, 0.2, 0.6]))
    np.testing.assert_array_equal(before.length, ep.queues.length)
    np.testing.assert_array_equal(before.remaining, ep.queues.remaining)
    assert ep.t == 1


def test_trace_mismatch_is_rejected(small_realization):
    r = small_realization
    q = QueueState.empty(r.num_flows, r.config.queue_capacity_packets)
    channel = constant_channel(r, 2, 1.0)
    with pytest.raises(ValueError):
        simulate_window(r, 3, np.full(3, 1 / 3), q, no_arrivals(r.num_flows), channel)
    with pytest.raises(ValueError):
        simulate_window(r, 2, np.full(3, 1 / 3), q, no_arrivals(2), channel)
    with pytest.raises(ValueError):
        simulate_window(r, 2, np.array([-0.1, 0.6, 0.5]), q, no_arrivals(r.num_flows), channel)


def test_episode_runs_to_completion(small_realization):
    ep = Episode(small_realization)
    while not ep.done:
        m = ep.step(SliceAllocation(0.4, 0.2, 0.4))
        assert m.conserves_packets()
    assert len(ep.history) == 50
    with pytest.raises(RuntimeError):
        ep.step(SliceAllocation(0.4, 0.2, 0.4))


def test_compiled_and_python_kernels_agree(small_realization):
    kernels = simulator.kernels()
    if len(kernels) < 2:
        pytest.skip("compiled kernel not built")
    results = {}
    for name, kernel in kernels.items():
        ep = Episode(small_realization)
        out = []
        for t in range(10):
            arrivals, channel = ep.window_inputs()
            m, ep.queues = simulate_window(small_realization, t, np.array([0.3, 0.2, 0.5]),
                                           ep.queues, arrivals, channel, kernel=kernel)
            out.append(m)
            ep.t += 1
            ep._inputs = None
        results[name] = out
    for a, b in zip(results["python"], results["compiled"]):
        np.testing.assert_array_equal(a.throughput, b.throughput)
        np.testing.assert_array_equal(a.latency, b.latency)
        np.testing.assert_array_equal(a.completed, b.completed)


def test_slot_log_csv(tmp_path, small_realization):
    logs = []
    ep = Episode(small_realization)
    m = ep.step(np.array([0.4, 0.3, 0.3]), slot_log=logs)
    log = logs[0]
    assert log.bits.shape == (100, small_realization.num_flows)
    np.testing.assert_allclose(log.bits.sum(axis=0) / (20e6 * 0.05), m.throughput, rtol=1e-9)
    path = tmp_path / "slots.csv"
    log.write_csv(path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"slot", "slice", "flow", "bits_served", "queue_len"}
    assert sum(float(r["bits_served"]) for r in rows) == pytest.approx(log.bits.sum())


def test_literal_latency_mode_differs(small_realization):
    lit = make_realization([H, H, L, L, B, B], mu=[2.0, 3.0, 0.8, 1.0, 2.0, 4.0],
                           config=NetworkConfig(latency_mode="literal"))
    conv = make_realization([H, H, L, L, B, B], mu=[2.0, 3.0, 0.8, 1.0, 2.0, 4.0])
    a = Episode(lit).step(np.array([0.3, 0.3, 0.4]))
    b = Episode(conv).step(np.array([0.3, 0.3, 0.4]))
    np.testing.assert_array_equal(a.throughput, b.throughput)
    assert not np.allclose(a.latency_or_zero(), b.latency_or_zero())
