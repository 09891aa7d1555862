from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Transition(NamedTuple):
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray


class Batch(NamedTuple):
    """Stacked transitions, one row per sample."""

    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray

    def __len__(self):
        return len(self.r)


class ReplayBuffer:
    """FIFO ring buffer with uniform sampling with replacement."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, obs_dim))
        self.size = 0
        self.index = 0

    def __len__(self):
        return self.size

    def push(self, t: Transition) -> None:
        i = self.index
        self.s[i] = t.s
        self.a[i] = t.a
        self.r[i] = t.r
        self.s_next[i] = t.s_next
        self.index = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _order(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (self.index + np.arange(self.capacity)) % self.capacity

    def contents(self) -> list[Transition]:
        """All stored transitions, oldest first."""
        return [Transition(self.s[i], self.a[i], float(self.r[i]), self.s_next[i]) for i in self._order()]

    def gather(self, idx: np.ndarray) -> Batch:
        return Batch(self.s[idx], self.a[idx], self.r[idx], self.s_next[idx])

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise IndexError("cannot sample from an empty replay buffer")
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        return self.gather(self.sample_indices(batch_size, rng))
