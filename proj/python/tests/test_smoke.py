import csv
import io
import json
import math

import pytest

import resched


def test_special_functions():
    assert resched.digamma(1.0) == pytest.approx(-0.5772156649015329, rel=1e-12)
    assert resched.log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-14)
    with pytest.raises(resched.DomainError):
        resched.digamma(0.0)


def test_dirichlet_and_schedule():
    tau = resched.sample_dirichlet([1.0, 2.0, 3.0, 0.5], seed=7, path=[1, 2])
    assert tau == resched.sample_dirichlet([1.0, 2.0, 3.0, 0.5], seed=7, path=[1, 2])
    assert sum(tau) == pytest.approx(1.0, abs=1e-12)
    timesteps, margin = resched.allocation_to_schedule(tau)
    assert len(timesteps) == 3
    assert all(a > b for a, b in zip(timesteps, timesteps[1:]))
    assert margin == timesteps[-1]
    score = resched.score_wrt_alpha(tau, [1.0, 2.0, 3.0, 0.5])
    h = 1e-6
    up = resched.dirichlet_log_prob(tau, [1.0 + h, 2.0, 3.0, 0.5])
    dn = resched.dirichlet_log_prob(tau, [1.0 - h, 2.0, 3.0, 0.5])
    assert (up - dn) / (2 * h) == pytest.approx(score[0], rel=1e-5, abs=1e-7)


def test_baselines():
    assert resched.rloo_baseline([[1.0, 2.0, 3.0], [4.0, 6.0]]) == [[2.5, 2.0, 1.5], [6.0, 4.0]]
    assert resched.xctx_baseline([[1.0, 2.0], [3.0, 4.0]])[0][0] == 3.0
    rewards = [[0.1, 1.3], [2.0, 2.4], [-1.0, 0.5], [0.7, 0.2]]
    js = resched.js_baseline(rewards)
    assert len(js) == 4 and all(len(row) == 2 for row in js)
    sigma2, delta2 = resched.variance_components(rewards)
    assert sigma2 > 0 and delta2 >= 0
    assert resched.optimal_baseline([0.0, 10.0], [[1.0], [math.sqrt(3.0)]]) == pytest.approx(7.5)
    with pytest.raises(resched.ConfigError):
        resched.js_baseline(rewards, scope="sideways")
    with pytest.raises(resched.Error):
        resched.rloo_baseline([[1.0], [2.0, 3.0]])


def test_toy_sampler():
    args = ([1.0], [0.5], [0.3])
    assert resched.marginal_velocity(0.0, 1.0, *args) == pytest.approx(-0.5 + 0.0)
    exact = 0.5 + 0.3 * 1.2
    coarse = abs(resched.integrate([0.75, 0.5, 0.25], *args, x_T=1.2) - exact)
    fine = abs(resched.integrate([1.0 - k / 64 for k in range(1, 64)], *args, x_T=1.2) - exact)
    assert fine < coarse
    assert resched.terminal_reward([0.75, 0.5, 0.25], [0.5, 0.5], [-2.0, 2.0], [0.05, 0.05], 0.4) < 0.0


def test_bench_csv_and_hash():
    config = json.dumps({
        "bench": {"contexts": [4], "rollouts": [2], "horizons": [4], "batches_per_cell": 20},
    })
    text = resched.bench(config)
    assert text == resched.bench(config)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["baseline"] for r in rows] == ["rloo", "xctx", "js", "oracle_mean"]
    assert rows[0]["ratio_to_rloo"] == "1"
    assert len(resched.config_hash(config)) == 16
    assert resched.config_hash(config) != resched.config_hash(json.dumps({"seed": 1}))
    with pytest.raises(resched.ConfigError):
        resched.bench('{"bench": {"typo": 1}}')


def test_train_toy_smoke():
    config = json.dumps({
        "seed": 3,
        "train": {"contexts": 4, "iterations": 3, "hidden": 4},
        "sampler": {"reference_steps": 128, "eval_contexts": 4},
    })
    out = resched.train_toy(config, steps=3)
    assert len(out["reward_trace"]) == 3
    assert out["contexts"] == 4
    assert json.loads(out["checkpoint"])["variant"] == "feature_net"
    assert out == resched.train_toy(config, steps=3)
