import io
import json

import numpy as np
import pytest

from conftest import B, H, L, make_realization
from wifislice import policy as mlp
from wifislice.domain import NetworkConfig, SliceAllocation
from wifislice.execution import (Trajectory, baseline_allocation, online_dual_update,
                                 run_baseline, run_fixed_lambda, run_online)

SHORT = NetworkConfig(num_windows=6, dual_period=2)


def test_online_update_example():
    lam = online_dual_update([0.2, 0.0], [[0.3, -1.0], [0.1, -1.0]], 1.0)
    np.testing.assert_allclose(lam, [0.4, 0.0])


def test_online_update_projects_to_nonnegative():
    lam = online_dual_update([0.1, 0.3], [[-1.0, 0.2], [-1.0, 0.2]], 1.0)
    np.testing.assert_allclose(lam, [0.0, 0.5])


def test_run_online_shapes_and_nonnegative_duals(small_realization):
    params = mlp.init_params(np.random.default_rng(0))
    tr = run_online(params, small_realization)
    assert len(tr.windows) == 50
    assert tr.allocations.shape == (50, 3)
    assert tr.dual_iterates.shape == (26, 2)
    np.testing.assert_array_equal(tr.dual_iterates[0], 0.0)
    assert np.all(tr.dual_iterates >= 0)
    # The multiplier fed at window t is the latest completed update.
    np.testing.assert_array_equal(tr.lambdas[2], tr.dual_iterates[1])
    np.testing.assert_array_equal(tr.lambdas[3], tr.dual_iterates[1])


def test_run_online_dual_recursion(small_realization):
    params = mlp.init_params(np.random.default_rng(1))
    tr = run_online(params, small_realization, eta_lambda=0.5)
    f = np.stack([tr.f_h, tr.f_l], axis=1)
    lam = np.zeros(2)
    for k in range(25):
        lam = np.maximum(lam + 0.5 * f[2 * k:2 * k + 2].mean(axis=0), 0.0)
        np.testing.assert_allclose(tr.dual_iterates[k + 1], lam, rtol=1e-12)


def test_run_online_slack_constraints_keep_duals_zero():
    cfg = SHORT.with_qos(0.01, 1000.0)
    r = make_realization([H, L, B], mu=[2.0, 1.0, 2.0], snr_db=65.0, config=cfg)
    tr = run_online(mlp.init_params(np.random.default_rng(0)), r)
    np.testing.assert_array_equal(tr.dual_iterates, 0.0)


def test_run_online_validates_arguments(small_realization):
    params = mlp.init_params(np.random.default_rng(0))
    with pytest.raises(ValueError):
        run_online(params, small_realization, T=50, T0=3)
    with pytest.raises(ValueError):
        run_online(params, small_realization, eta_lambda=-1.0)
    with pytest.raises(ValueError):
        run_online(params, small_realization, T=60)


def test_run_online_is_deterministic(small_realization):
    params = mlp.init_params(np.random.default_rng(0))
    a = run_online(params, small_realization)
    b = run_online(params, small_realization)
    np.testing.assert_array_equal(a.f_h, b.f_h)
    np.testing.assert_array_equal(a.allocations, b.allocations)


def test_baseline_examples():
    r = make_realization([H] * 10 + [L] * 6 + [B] * 4)
    assert baseline_allocation("uniform", r) == SliceAllocation(1 / 3, 1 / 3, 1 / 3)
    np.testing.assert_allclose(baseline_allocation("proportional", r).as_array(),
                               [0.5, 0.3, 0.2])
    tw = baseline_allocation("traffic_weighted", make_realization([H, L, B]),
                             demand=[4.0, 1.0, 5.0])
    np.testing.assert_allclose(tw.as_array(), [0.4, 0.1, 0.5])


def test_traffic_weighted_without_demand_falls_back():
    r = make_realization([H, H, L, B])
    tw = baseline_allocation("traffic_weighted", r, demand=np.zeros(4))
    np.testing.assert_allclose(tw.as_array(), [0.5, 0.25, 0.25])


def test_unknown_baseline():
    with pytest.raises(ValueError):
        baseline_allocation("greedy", make_realization([H, L, B]))
    with pytest.raises(ValueError):
        run_baseline("greedy", make_realization([H, L, B]))


def test_run_baseline_uses_current_demand():
    r = make_realization([H, L, B], mu=[2.0, 1.0, 3.0], config=SHORT)
    tr = run_baseline("traffic_weighted", r)
    from wifislice.traffic import rate_schedule
    mu = rate_schedule(r)
    np.testing.assert_allclose(tr.allocations, mu / mu.sum(axis=1, keepdims=True))
    np.testing.assert_array_equal(tr.lambdas, 0.0)


def test_fixed_lambda_feeds_constant_multiplier(small_realization):
    params = mlp.init_params(np.random.default_rng(2))
    tr = run_fixed_lambda(params, small_realization, [1.5, 0.5])
    assert np.all(tr.lambdas == [1.5, 0.5])


def test_trajectory_jsonl(small_realization):
    tr = run_baseline("uniform", small_realization)
    buf = io.StringIO()
    tr.write_jsonl(buf, realization_index=3)
    rows = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert len(rows) == 50
    assert rows[0]["realization"] == 3
    assert set(rows[0]) >= {"t", "p_h", "p_l", "p_b", "lambda_h", "lambda_l", "f_h", "f_l",
                            "objective"}


def test_trajectory_recomputes_terms_for_other_targets(small_realization):
    tr = run_baseline("uniform", small_realization)
    from wifislice.domain import QosSpec
    loose = Trajectory(small_realization, tr.windows, qos=QosSpec(0.5, 10.0))
    assert np.all(loose.f_h <= tr.f_h)
