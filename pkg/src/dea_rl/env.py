"""Two small deterministic continuous-control tasks with rewards in [0, 1].

``step`` is a pure function of (state, action); time-limit truncation is the
only way an episode ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class EnvSpec:
    name: str
    obs_dim: int
    act_dim: int
    action_bound: float
    episode_len: int
    reward_bound: float = 1.0


@dataclass(frozen=True)
class EnvState:
    x: np.ndarray
    t: int = 0


def angle_normalize(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = (theta + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if wrapped == -math.pi else wrapped


class Env:
    spec: EnvSpec

    def __init__(self):
        self.n_clamped = 0

    def _clip_action(self, action) -> np.ndarray:
        a = np.asarray(action, dtype=np.float64).reshape(self.spec.act_dim)
        clipped = np.clip(a, -1.0, 1.0)
        if not np.array_equal(clipped, a):
            self.n_clamped += 1
        return clipped

    def reset(self, rng: np.random.Generator) -> tuple[EnvState, np.ndarray]:
        raise NotImplementedError

    def observe(self, state: EnvState) -> np.ndarray:
        raise NotImplementedError

    def step(self, state: EnvState, action) -> tuple[EnvState, np.ndarray, float, bool]:
        raise NotImplementedError


class PendulumSwingUp(Env):
    """Torque-limited pendulum; theta = 0 is upright."""

    g = 10.0
    m = 1.0
    length = 1.0
    dt = 0.05
    max_speed = 8.0
    max_torque = 2.0
    max_cost = math.pi**2 + 0.1 * 8.0**2 + 0.001 * 2.0**2

    spec = EnvSpec("pendulum", obs_dim=3, act_dim=1, action_bound=2.0, episode_len=200)

    def reset(self, rng):
        theta = rng.uniform(-math.pi, math.pi)
        theta_dot = rng.uniform(-1.0, 1.0)
        state = EnvState(np.array([theta, theta_dot]), 0)
        return state, self.observe(state)

    def observe(self, state):
        theta, theta_dot = state.x
        return np.array([math.cos(theta), math.sin(theta), theta_dot])

    def reward(self, theta: float, theta_dot: float, u: float) -> float:
        cost = angle_normalize(theta) ** 2 + 0.1 * theta_dot**2 + 0.001 * u**2
        return 1.0 - cost / self.max_cost

    def step(self, state, action):
        if state.t >= self.spec.episode_len:
            raise ConfigError("episode already truncated; call reset")
        u = self.max_torque * float(self._clip_action(action)[0])
        theta, theta_dot = float(state.x[0]), float(state.x[1])
        r = self.reward(theta, theta_dot, u)
        acc = 3.0 * self.g / (2.0 * self.length) * math.sin(theta) + 3.0 / (self.m * self.length**2) * u
        theta_dot = min(max(theta_dot + acc * self.dt, -self.max_speed), self.max_speed)
        theta = angle_normalize(theta + theta_dot * self.dt)
        nxt = EnvState(np.array([theta, theta_dot]), state.t + 1)
        return nxt, self.observe(nxt), r, nxt.t >= self.spec.episode_len


class PointReach(Env):
    """Double-integrator point mass steered toward the origin."""

    dt = 0.1
    spec = EnvSpec("pointreach", obs_dim=4, act_dim=2, action_bound=1.0, episode_len=100)

    def reset(self, rng):
        pos = rng.uniform(-4.0, 4.0, size=2)
        state = EnvState(np.concatenate([pos, np.zeros(2)]), 0)
        return state, self.observe(state)

    def observe(self, state):
        return state.x.copy()

    def step(self, state, action):
        if state.t >= self.spec.episode_len:
            raise ConfigError("episode already truncated; call reset")
        a = self._clip_action(action)
        p, v = state.x[:2], state.x[2:]
        v = np.clip(v + self.dt * a, -1.0, 1.0)
        p = np.clip(p + self.dt * v, -5.0, 5.0)
        r = math.exp(-math.hypot(p[0], p[1]))
        nxt = EnvState(np.concatenate([p, v]), state.t + 1)
        return nxt, self.observe(nxt), r, nxt.t >= self.spec.episode_len


ENVS = {"pendulum": PendulumSwingUp, "pointreach": PointReach}


def make_env(name: str) -> Env:
    try:
        return ENVS[name]()
    except KeyError:
        raise ConfigError(f"unknown env {name!r}; choose from {sorted(ENVS)}") from None
