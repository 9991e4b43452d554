"""Representation pairs and synthetic training signals.

A representation pair is a low-rank component ``lowrank`` (d x L, orthonormal
columns) together with a dictionary ``dictionary`` (d x K, unit columns) whose
atoms are orthogonal to the low-rank component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linops import normalize_columns, polar_orthonormalize

# stream ids keep signal and mask randomness independent for a shared seed
SIGNAL_STREAM = 1
MASK_STREAM = 2
INIT_STREAM = 3
LOWRANK_STREAM = 4
REPLACE_STREAM = 5


def stream_rng(seed: int, stream: int, index: int = 0, phase: int = 0) -> np.random.Generator:
    """Generator for the ``index``-th batch of a named random stream."""
    return np.random.default_rng([int(seed), int(stream), int(phase), int(index)])


@dataclass
class RepresentationPair:
    lowrank: np.ndarray
    dictionary: np.ndarray

    def __post_init__(self):
        self.lowrank = np.asarray(self.lowrank, dtype=np.float64)
        self.dictionary = np.asarray(self.dictionary, dtype=np.float64)
        if self.lowrank.ndim != 2 or self.dictionary.ndim != 2:
            raise ValueError("lowrank and dictionary must be 2-d column sets")
        if self.lowrank.shape[0] != self.dictionary.shape[0]:
            raise ValueError("lowrank and dictionary have different signal dimension")

    @property
    def d(self) -> int:
        return self.dictionary.shape[0]

    @property
    def K(self) -> int:
        return self.dictionary.shape[1]

    @property
    def L(self) -> int:
        return self.lowrank.shape[1]


@dataclass
class SignalSpec:
    """Coefficient model parameters for synthetic signals.

    ``scale_min`` defaults to 0; setting ``scale_min == scale_max`` fixes the
    signal scale.
    """

    e_lr: float = 1 / 3
    b_lr: float = 0.15
    S: int = 6
    b_S: float = 0.1
    noise_sigma: float = 0.0
    scale_max: float = 4.0
    scale_min: float = 0.0

    def validate(self, pair: RepresentationPair | None = None) -> None:
        if not 0.0 <= self.e_lr <= 1.0:
            raise ValueError(f"e_lr={self.e_lr} must lie in [0, 1]")
        for name in ("b_lr", "b_S"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name}={b} must lie in [0, 1)")
        if self.S < 0:
            raise ValueError("S must be non-negative")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if not 0.0 <= self.scale_min <= self.scale_max or self.scale_max <= 0:
            raise ValueError("need 0 <= scale_min <= scale_max and scale_max > 0")
        if pair is not None and self.S > pair.K:
            raise ValueError(f"sparsity S={self.S} exceeds number of atoms K={pair.K}")


@dataclass
class Signal:
    y: np.ndarray
    support: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: float = 1.0
    noise: np.ndarray | None = None


def make_dct_pair(d: int, L: int) -> RepresentationPair:
    """Orthonormal DCT-II basis of R^d; the first ``L`` atoms form the low-rank part."""
    if d < 1 or L < 0 or L >= d:
        raise ValueError(f"need d >= L + 1 and L >= 0, got d={d}, L={L}")
    j = np.arange(d)[:, None]
    k = np.arange(d)[None, :]
    basis = np.cos(np.pi * (2 * j + 1) * k / (2 * d))
    basis[:, 0] *= np.sqrt(1.0 / d)
    basis[:, 1:] *= np.sqrt(2.0 / d)
    return RepresentationPair(basis[:, :L].copy(), basis[:, L:].copy())


def _unit_gaussian(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    return normalize_columns(rng.standard_normal((d, n)))


def make_random_pair(d: int, K: int, L: int, seed: int) -> RepresentationPair:
    """Random low-rank component plus random dictionary in its complement."""
    if L < 0 or L >= d or K < 0:
        raise ValueError(f"invalid dimensions d={d}, K={K}, L={L}")
    rng = np.random.default_rng(seed)
    lowrank = polar_orthonormalize(_unit_gaussian(rng, d, L)) if L else np.zeros((d, 0))
    dico = _unit_gaussian(rng, d, K)
    dico -= lowrank @ (lowrank.T @ dico)
    return RepresentationPair(lowrank, normalize_columns(dico))


def make_support_pair(d: int, m: int, L: int, seed: int) -> RepresentationPair:
    """Orthonormal pair whose atoms concentrate on random supports of size ``m``.

    Each of the ``d`` columns of a seed matrix is a random unit vector placed on
    a random ``m``-subset of coordinates; the pair is the nearest orthogonal
    matrix to it, split into ``L`` low-rank and ``d - L`` dictionary atoms.
    """
    if not 1 <= m <= d:
        raise ValueError(f"support size m={m} must lie in [1, d={d}]")
    if L < 0 or L >= d:
        raise ValueError(f"invalid L={L} for d={d}")
    rng = np.random.default_rng(seed)
    B = np.zeros((d, d))
    for k in range(d):
        idx = rng.choice(d, size=m, replace=False)
        B[idx, k] = _unit_gaussian(rng, m, 1)[:, 0]
    # small supports leave whole rows of B empty, so B is usually singular
    basis = polar_orthonormalize(B, allow_rank_deficient=True)
    return RepresentationPair(basis[:, :L].copy(), basis[:, L:].copy())


def _decaying(rng: np.random.Generator, n: int, b: float, norm: float, size: int) -> np.ndarray:
    """``size`` rows of sigma_i c^i (i = 1..n), renormalised to ``norm``."""
    if n == 0:
        return np.zeros((size, 0))
    c = rng.uniform(1.0 - b, 1.0, size=size)[:, None]
    signs = rng.choice([-1.0, 1.0], size=(size, n))
    coeffs = signs * c ** np.arange(1, n + 1)[None, :]
    return coeffs * (norm / np.linalg.norm(coeffs, axis=1, keepdims=True))


def draw_signal(pair: RepresentationPair, spec: SignalSpec, rng: np.random.Generator) -> Signal:
    """Draw a single signal ``y = s (G v + D_I x + r) / sqrt(1 + |r|^2)``."""
    spec.validate(pair)
    d = pair.d
    v = _decaying(rng, pair.L, spec.b_lr, spec.e_lr, 1)[0]
    x = _decaying(rng, spec.S, spec.b_S, 1.0 - spec.e_lr, 1)[0]
    support = rng.choice(pair.K, size=spec.S, replace=False) if spec.S else np.zeros(0, dtype=np.int64)
    scale = rng.uniform(spec.scale_min, spec.scale_max)
    if spec.noise_sigma > 0:
        r = spec.noise_sigma * rng.standard_normal(d)
    else:
        r = np.zeros(d)
    y = scale * (pair.lowrank @ v + pair.dictionary[:, support] @ x + r) / np.sqrt(1.0 + r @ r)
    return Signal(y=y, support=np.asarray(support), x=x, v=v, scale=float(scale), noise=r)


def draw_signals(pair: RepresentationPair, spec: SignalSpec, n: int, rng: np.random.Generator,
                 return_supports: bool = False):
    """Vectorised batch of ``n`` signals as the columns of a ``(d, n)`` matrix."""
    spec.validate(pair)
    d, K, S = pair.d, pair.K, spec.S
    V = _decaying(rng, pair.L, spec.b_lr, spec.e_lr, n)
    X = _decaying(rng, S, spec.b_S, 1.0 - spec.e_lr, n)
    # random S-subsets in random order: first S entries of a random permutation
    supports = np.argsort(rng.random((n, K)), axis=1)[:, :S]
    scale = rng.uniform(spec.scale_min, spec.scale_max, size=n)
    Y = pair.lowrank @ V.T
    for i in range(S):
        Y += pair.dictionary[:, supports[:, i]] * X[:, i]
    if spec.noise_sigma > 0:
        R = spec.noise_sigma * rng.standard_normal((d, n))
        Y = (Y + R) / np.sqrt(1.0 + np.sum(R * R, axis=0))
    Y *= scale
    if return_supports:
        return Y, supports
    return Y


class SignalSource:
    """Deterministic stream of masked signal batches.

    Batch ``b`` draws its signals from stream ``(seed, SIGNAL_STREAM, b)`` and
    its masks from ``(seed, MASK_STREAM, b)``, so any batch can be regenerated
    on its own. With ``refresh=False`` the same batch 0 is returned every time.
    Sources with different ``phase`` values draw disjoint signal sets.
    """

    def __init__(self, pair: RepresentationPair, spec: SignalSpec, mask_model, n: int,
                 seed: int, refresh: bool = True, phase: int = 0):
        spec.validate(pair)
        self.pair, self.spec, self.mask_model = pair, spec, mask_model
        self.n, self.seed, self.refresh, self.phase = n, seed, refresh, phase
        self._cache = None

    def batch(self, index: int):
        """Return ``(Y_masked, masks)`` for batch ``index``."""
        if not self.refresh:
            if self._cache is None:
                self._cache = self._draw(0)
            return self._cache
        return self._draw(index)

    def _draw(self, index: int):
        rng = stream_rng(self.seed, SIGNAL_STREAM, index, self.phase)
        Y = draw_signals(self.pair, self.spec, self.n, rng)
        if self.mask_model is None:
            masks = np.ones_like(Y, dtype=bool)
        else:
            rng = stream_rng(self.seed, MASK_STREAM, index, self.phase)
            masks = self.mask_model.draw(self.pair.d, self.n, rng)
        return Y * masks, masks
