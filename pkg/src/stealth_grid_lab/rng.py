"""Counter-based random streams.

A stream is addressed by a seed plus a path of small integers (for example
``(lambda_index, k)``); each trial inside it is addressed by its counter.
Draws for a given address never depend on how trials are batched or
scheduled across threads.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import _backend

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, *path: int) -> int:
    key = _mix64(seed & _MASK)
    for p in path:
        key = _mix64(key ^ (p & _MASK))
    return key


@dataclasses.dataclass(frozen=True)
class SampleStream:
    seed: int
    trial_counter: int = 0
    path: tuple[int, ...] = ()

    @property
    def key(self) -> int:
        return stream_key(self.seed, *self.path)

    def at(self, trial_counter: int) -> SampleStream:
        return dataclasses.replace(self, trial_counter=trial_counter)


def standard_normals(stream: SampleStream, m: int, n_trials: int = 1) -> np.ndarray:
    """``(n_trials, m)`` standard normals for trials ``trial_counter, ...``."""
    return _backend.kernels.standard_normals(stream.key, stream.trial_counter, n_trials, m)
