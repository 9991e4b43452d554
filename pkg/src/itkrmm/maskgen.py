"""Random erasure and burst-error masks.

Masks are boolean vectors (``True`` = observed). Batches are ``(d, n)``
boolean matrices with one mask per column, matching the signal layout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _first_half(d: int) -> int:
    # odd d: the first half gets the extra coordinate
    return (d + 1) // 2


@dataclass
class ErasureSpec:
    """Observation probabilities ``q * p1`` / ``q * p2`` on the two coordinate halves.

    ``q`` is drawn uniformly from ``{q1, q2}`` once per mask.
    """

    p1: float
    p2: float
    q1: float = 1.0
    q2: float = 1.0

    def validate(self) -> None:
        for name in ("p1", "p2", "q1", "q2"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name}={val} must lie in [0, 1]")

    def draw(self, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
        return draw_erasure_masks(self, d, n, rng)

    def expected_corruption(self) -> float:
        return expected_erasure_corruption(self)

    @classmethod
    def type22(cls, p1: float) -> "ErasureSpec":
        """``p2 = p1 + 0.2`` and ``q_i = p_i``; inhomogeneous across coordinates and signals."""
        p2 = p1 + 0.2
        return cls(p1, p2, p1, p2)


@dataclass
class BurstSpec:
    """Bursts of length ``T`` (prob ``p_T``) or ``2T`` (prob ``p_2T``).

    ``q`` is the probability that the burst starts in the first coordinate half.
    """

    T: int
    p_T: float
    p_2T: float
    q: float = 0.5

    def validate(self, d: int | None = None) -> None:
        if self.T < 0:
            raise ValueError("burst length T must be non-negative")
        if min(self.p_T, self.p_2T) < 0 or self.p_T + self.p_2T > 1.0 + 1e-12:
            raise ValueError("need p_T, p_2T >= 0 and p_T + p_2T <= 1")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if d is not None and self.T > d:
            raise ValueError(f"burst length T={self.T} exceeds d={d}")

    def draw(self, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
        return draw_burst_masks(self, d, n, rng)

    def expected_corruption(self, d: int) -> float:
        return expected_burst_corruption(self, d)


def draw_erasure_masks(spec: ErasureSpec, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    spec.validate()
    h = _first_half(d)
    q = np.where(rng.random(n) < 0.5, spec.q1, spec.q2)
    eta = np.empty((d, n))
    eta[:h] = q * spec.p1
    eta[h:] = q * spec.p2
    return rng.random((d, n)) < eta


def draw_erasure_mask(spec: ErasureSpec, d: int, rng: np.random.Generator) -> np.ndarray:
    return draw_erasure_masks(spec, d, 1, rng)[:, 0]


def burst_mask(d: int, start: int, length: int) -> np.ndarray:
    """Mask erasing ``length`` coordinates cyclically from 0-based ``start``."""
    mask = np.ones(d, dtype=bool)
    mask[(start + np.arange(min(length, d))) % d] = False
    return mask


def draw_burst_masks(spec: BurstSpec, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    spec.validate(d)
    h = _first_half(d)
    u = rng.random(n)
    tau = np.where(u < spec.p_T, spec.T, np.where(u < spec.p_T + spec.p_2T, 2 * spec.T, 0))
    tau = np.minimum(tau, d)
    first = rng.random(n) < spec.q
    start = np.where(first, rng.integers(0, h, size=n), rng.integers(h, max(d, h + 1), size=n))
    start = np.minimum(start, d - 1)
    offs = np.arange(d)[:, None]
    # coordinate j is erased iff its cyclic offset from the start is below tau
    return (offs - start[None, :]) % d >= tau[None, :]


def draw_burst_mask(spec: BurstSpec, d: int, rng: np.random.Generator) -> np.ndarray:
    return draw_burst_masks(spec, d, 1, rng)[:, 0]


def expected_erasure_corruption(spec: ErasureSpec) -> float:
    """Expected fraction of erased coordinates, ``1 - (p1+p2)(q1+q2)/4``."""
    return 1.0 - (spec.p1 + spec.p2) * (spec.q1 + spec.q2) / 4.0


def expected_burst_corruption(spec: BurstSpec, d: int) -> float:
    T = min(spec.T, d)
    T2 = min(2 * spec.T, d)
    return (spec.p_T * T + spec.p_2T * T2) / d


def random_pixel_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """iid pixel erasures with probability ``rate``; returns observed=True."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"erasure rate {rate} must lie in [0, 1]")
    return rng.random(shape) >= rate
