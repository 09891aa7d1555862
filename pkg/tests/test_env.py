import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dea_rl.env import EnvState, PendulumSwingUp, PointReach, angle_normalize, make_env
from dea_rl.errors import ConfigError

actions = st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=1, max_size=60)


def test_reset_is_deterministic_for_a_seed():
    for name in ("pendulum", "pointreach"):
        env = make_env(name)
        s1, o1 = env.reset(np.random.default_rng(3))
        s2, o2 = env.reset(np.random.default_rng(3))
        assert np.array_equal(s1.x, s2.x) and np.array_equal(o1, o2) and s1.t == 0


def test_pointreach_reset_has_zero_velocity():
    state, obs = PointReach().reset(np.random.default_rng(0))
    assert obs[2:].tolist() == [0.0, 0.0]
    assert np.all(np.abs(obs[:2]) <= 4.0)


def test_pendulum_reset_angle_is_centered():
    env = PendulumSwingUp()
    rng = np.random.default_rng(11)
    thetas = np.array([env.reset(rng)[0].x[0] for _ in range(10_000)])
    sigma = math.pi / math.sqrt(3) / math.sqrt(len(thetas))
    assert abs(thetas.mean()) < 3 * sigma
    assert thetas.min() >= -math.pi and thetas.max() <= math.pi


def test_pendulum_upright_at_rest_has_reward_one():
    env = PendulumSwingUp()
    _, _, r, _ = env.step(EnvState(np.array([0.0, 0.0])), [0.0])
    assert r == 1.0


def test_pendulum_hanging_reward():
    env = PendulumSwingUp()
    _, _, r, _ = env.step(EnvState(np.array([math.pi, 0.0])), [0.0])
    assert r == pytest.approx(1 - math.pi**2 / (math.pi**2 + 6.404), abs=1e-12)
    assert r == pytest.approx(0.3935, abs=1e-4)


def test_pendulum_dynamics_one_step():
    env = PendulumSwingUp()
    theta, theta_dot, a = 0.3, -0.5, 0.25
    nxt, obs, _, _ = env.step(EnvState(np.array([theta, theta_dot])), [a])
    acc = 15.0 * math.sin(theta) + 3.0 * (2 * a)
    new_dot = theta_dot + 0.05 * acc
    assert nxt.x[1] == pytest.approx(new_dot, abs=1e-14)
    assert nxt.x[0] == pytest.approx(theta + 0.05 * new_dot, abs=1e-14)
    np.testing.assert_allclose(obs, [math.cos(nxt.x[0]), math.sin(nxt.x[0]), nxt.x[1]])


def test_pointreach_origin_reward_one():
    env = PointReach()
    _, _, r, _ = env.step(EnvState(np.zeros(4)), [0.0, 0.0])
    assert r == 1.0


def test_out_of_range_actions_are_clamped_and_counted():
    env = PointReach()
    s = EnvState(np.zeros(4))
    clipped, _, _, _ = env.step(s, [3.0, -7.0])
    inside, _, _, _ = env.step(s, [1.0, -1.0])
    assert np.array_equal(clipped.x, inside.x)
    assert env.n_clamped == 1


@pytest.mark.parametrize("name, length", [("pendulum", 200), ("pointreach", 100)])
def test_truncation_at_episode_length(name, length):
    env = make_env(name)
    state, _ = env.reset(np.random.default_rng(0))
    zero = np.zeros(env.spec.act_dim)
    for k in range(1, length + 1):
        state, _, _, truncated = env.step(state, zero)
        assert truncated == (k == length)
    with pytest.raises(ConfigError):
        env.step(state, zero)


def test_unknown_env_name():
    with pytest.raises(ConfigError):
        make_env("cartpole")


@given(st.floats(-100, 100, allow_nan=False))
def test_angle_normalize_range(theta):
    w = angle_normalize(theta)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(theta), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["pendulum", "pointreach"]), st.integers(0, 2**31), actions)
def test_rewards_bounds_and_replay(name, seed, acts):
    env = make_env(name)
    start, _ = env.reset(np.random.default_rng(seed))
    traj = []
    state = start
    for a in acts:
        state, obs, r, _ = env.step(state, np.full(env.spec.act_dim, a))
        assert 0.0 <= r <= env.spec.reward_bound
        if name == "pendulum":
            assert -8.0 <= state.x[1] <= 8.0
        else:
            assert np.all(np.abs(state.x[:2]) <= 5.0) and np.all(np.abs(state.x[2:]) <= 1.0)
        traj.append((obs.tobytes(), r))
    state = start
    for a, (obs_bytes, r) in zip(acts, traj):
        state, obs, r2, _ = env.step(state, np.full(env.spec.act_dim, a))
        assert obs.tobytes() == obs_bytes and r2 == r
