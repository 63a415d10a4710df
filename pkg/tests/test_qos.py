import numpy as np
import pytest

from conftest import B, H, L, make_realization
from wifislice.domain import DualMultipliers, QosSpec, WindowMetrics
from wifislice.qos import (lagrangian, lagrangian_term, latency_constraint,
                           objective, throughput_constraint, window_terms)

QOS = QosSpec(1.0, 10.0)


def window(throughput, latency, t=0):
    n = len(throughput)
    z = np.zeros(n, dtype=int)
    return WindowMetrics(t, np.asarray(throughput, float), np.asarray(latency, float),
                         z, z, z, z, z)


def flows(slas):
    return make_realization(slas).flows


def test_throughput_constraint_examples():
    fl = flows([H, H, L, B])
    assert throughput_constraint(window([1.0, 1.0, 0, 0], [0] * 4), QOS, fl) == 0.0
    assert throughput_constraint(window([0.5, 1.2, 0, 0], [0] * 4), QOS, fl) == pytest.approx(0.5)
    assert throughput_constraint(window([2.0, 0, 0, 0], [0] * 4), QOS, flows([H, L, L, B])) == -1.0


def test_latency_constraint_examples():
    fl = flows([H, L, L, B])
    assert latency_constraint(window([0] * 4, [0, 10, 10, 0]), QOS, fl) == 0.0
    assert latency_constraint(window([0] * 4, [0, 5, 12, 0]), QOS, fl) == pytest.approx(0.2)
    assert latency_constraint(window([0] * 4, [np.nan] * 4), QOS, fl) == -1.0


def test_objective_examples():
    assert objective(window([0, 0, 1.5], [0] * 3), flows([H, L, B])) == 1.5
    assert objective(window([0, 0, 1, 2, 3], [0] * 5), flows([H, L, B, B, B])) == 2.0
    assert objective(window([0, 0, 0], [0] * 3), flows([H, L, B])) == 0.0


def test_missing_category_is_an_error():
    fl = flows([H, L, B])[1:]
    with pytest.raises(ValueError):
        throughput_constraint(window([0, 0], [0, 0]), QOS, fl)


def test_lagrangian_with_zero_duals_is_negated_objective():
    fl = flows([H, L, B])
    traj = [window([0.5, 0, 2.0], [0, 20, 0], t) for t in range(3)]
    assert lagrangian(traj, DualMultipliers(), QOS, fl) == pytest.approx(-2.0)


def test_lagrangian_single_window_example():
    fl = flows([H, L, B])
    # objective 2, f_h = 0.5, f_l = -0.2
    w = window([0.5, 0, 2.0], [0, 8.0, 0])
    assert window_terms(w, QOS, fl) == pytest.approx((2.0, 0.5, -0.2))
    assert lagrangian([w], [1.0, 1.0], QOS, fl) == pytest.approx(-1.7)


def test_lagrangian_is_linear_in_duals():
    fl = flows([H, L, B])
    w = window([0.4, 0, 1.0], [0, 15.0, 0])
    base = lagrangian_term(w, [0.0, 0.0], QOS, fl)
    one = lagrangian_term(w, [1.5, 0.0], QOS, fl) - base
    two = lagrangian_term(w, [3.0, 0.0], QOS, fl) - base
    assert two == pytest.approx(2 * one)


def test_lagrangian_rejects_empty_trajectory():
    with pytest.raises(ValueError):
        lagrangian([], [0, 0], QOS, flows([H, L, B]))
