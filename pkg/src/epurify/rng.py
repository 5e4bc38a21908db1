"""Haar-random pure states from a counter-based generator.

Uses the Philox counter-based bit generator keyed by ``(seed, stream)`` so
independent streams can be derived for parallel sweep points, and an explicit
Box-Muller transform for the Gaussian variates.  Reproducibility is asserted
at the distribution level; the seed is recorded alongside every result.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    key = ((int(stream) & _MASK64) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_gaussians(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normals via Box-Muller (unit-variance real and imag parts)."""
    u1 = gen.random(shape)
    u2 = gen.random(shape)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    return r * np.exp(2j * np.pi * u2)


class HaarSampler:
    """Draws Haar-distributed pure states of a fixed dimension ``d``."""

    def __init__(self, d: int, seed: int, stream: int = 0):
        if d < 2:
            raise ValueError("dimension must be at least 2")
        self.d = int(d)
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = philox_generator(seed, stream)

    def state_vectors(self, count: int) -> np.ndarray:
        """Return ``count`` normalized state vectors as rows of a (count, d) array."""
        z = complex_gaussians(self._gen, (count, self.d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        return z / norms

    def state_vector(self) -> np.ndarray:
        return self.state_vectors(1)[0]


def haar_random_state(d: int, seed: int, stream: int = 0) -> np.ndarray:
    """Rank-1 projector onto a Haar-random pure state; deterministic given seed."""
    v = HaarSampler(d, seed, stream).state_vector()
    return np.outer(v, v.conj())
