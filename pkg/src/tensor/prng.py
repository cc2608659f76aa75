"""Seeded pseudo-random source shared by initialisation, masking and augmentation."""

import copy
from typing import Any, Dict, Sequence

import numpy as np


class Prng:
    """Thin wrapper over numpy's PCG64 ``Generator``.

    PCG64 is numpy's documented default bit generator; its output stream for a
    given seed is stable across platforms and releases. The wrapper exposes
    only the draws this package needs and makes the state serialisable so a
    checkpoint can resume the exact stream.
    """

    ALGORITHM = "PCG64"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    @classmethod
    def from_key(cls, *key: int) -> "Prng":
        """Derive an independent stream from an integer key, e.g. (seed, epoch)."""
        rng = cls.__new__(cls)
        rng.seed = int(key[0]) if key else 0
        rng._generator = np.random.Generator(np.random.PCG64([int(k) for k in key]))
        return rng

    # -- draws -------------------------------------------------------------

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        return self._generator.uniform(low, high, size)

    def normal(self, size=None, mean: float = 0.0, std: float = 1.0):
        return self._generator.normal(mean, std, size)

    def integers(self, low: int, high: int, size=None):
        return self._generator.integers(low, high, size)

    def random(self) -> float:
        return float(self._generator.random())

    def permutation(self, n: int) -> np.ndarray:
        """Fisher–Yates shuffle of ``range(n)``."""
        return self._generator.permutation(n)

    def truncated_normal(self, shape: Sequence[int], std: float = 0.02, bound: float = 2.0):
        """Normal draws with ``|z| <= bound`` standard deviations, by resampling."""
        values = self._generator.standard_normal(tuple(shape))
        outside = np.abs(values) > bound
        while outside.any():
            values[outside] = self._generator.standard_normal(int(outside.sum()))
            outside = np.abs(values) > bound
        return values * std

    # -- state -------------------------------------------------------------

    def get_state(self) -> Dict[str, Any]:
        return copy.deepcopy(self._generator.bit_generator.state)

    def set_state(self, state: Dict[str, Any]) -> None:
        if state.get("bit_generator") != self.ALGORITHM:
            raise ValueError(f"Expected {self.ALGORITHM} state, got {state.get('bit_generator')}")
        self._generator.bit_generator.state = copy.deepcopy(state)
