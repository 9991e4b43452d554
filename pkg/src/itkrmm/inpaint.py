"""Patch-based image inpainting with a learned low-rank component and dictionary."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._reduce import chunk_bounds, default_workers
from .dictlearn import LearnConfig, LearnState, initial_state, learn
from .lowrank import recover_lowrank
from .sparse import omp_masked_batch
from .synthgen import LOWRANK_STREAM, stream_rng

@dataclass
class PatchSet:
    p: int
    shape: tuple
    patches: np.ndarray      # (p*p, n), erased pixels set to 0
    masks: np.ndarray        # (p*p, n) bool
    positions: np.ndarray    # (n, 2) top-left (row, col), row-major over the image

    def __len__(self) -> int:
        return self.patches.shape[1]


def _windows(a: np.ndarray, p: int) -> np.ndarray:
    """All p x p windows, vectorised column-major, as a (p*p, n) array."""
    w = sliding_window_view(a, (p, p))              # (H-p+1, W-p+1, p, p)
    n = w.shape[0] * w.shape[1]
    # column-major inside a patch: index = col * p + row
    return w.transpose(3, 2, 0, 1).reshape(p * p, n)


def extract_patches(img, mask, p: int) -> PatchSet:
    """Every stride-1 ``p x p`` patch of ``img`` with its mask.

    ``mask`` is True where a pixel is observed; ``None`` means fully observed.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("expected a 2-d grayscale image")
    H, W = img.shape
    if p < 1 or p > min(H, W):
        raise ValueError(f"patch size {p} does not fit a {H}x{W} image")
    mask = np.ones(img.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != img.shape:
        raise ValueError(f"mask shape {mask.shape} differs from image shape {img.shape}")
    rows, cols = np.meshgrid(np.arange(H - p + 1), np.arange(W - p + 1), indexing="ij")
    return PatchSet(
        p=p,
        shape=img.shape,
        patches=_windows(img * mask, p),
        masks=_windows(mask, p),
        positions=np.column_stack([rows.ravel(), cols.ravel()]),
    )


def reconstruct_image(patches: np.ndarray, positions: np.ndarray, shape, p: int) -> np.ndarray:
    """Average overlapping column-major patches back into an image."""
    acc = np.zeros(shape)
    cnt = np.zeros(shape)
    blocks = np.asarray(patches).reshape(p, p, -1, order="F")   # (row, col, n)
    for i, (r, c) in enumerate(positions):
        acc[r:r + p, c:c + p] += blocks[:, :, i]
        cnt[r:r + p, c:c + p] += 1.0
    return np.divide(acc, cnt, out=np.zeros(shape), where=cnt > 0)


def inpaint_image(img, mask, state: LearnState, S_omp: int, p: int, *,
                  restore_observed: bool = False, backend=None) -> np.ndarray:
    """Reconstruct every patch with masked OMP and average the overlaps.

    The low-rank atoms of ``state`` are always part of every patch support.
    """
    G = state.lowrank.atoms
    if state.d != p * p:
        raise ValueError(f"state dimension {state.d} does not match patch size {p}")
    ps = extract_patches(img, mask, p)
    full = np.column_stack([G, state.dictionary])
    L = G.shape[1]
    recon = np.empty_like(ps.patches)
    for lo, hi in chunk_bounds(len(ps), 4096):
        coef = omp_masked_batch(full, ps.patches[:, lo:hi], ps.masks[:, lo:hi], S_omp,
                                n_forced=L, backend=backend)
        recon[:, lo:hi] = full @ coef
    out = reconstruct_image(recon, ps.positions, ps.shape, p)
    if restore_observed and mask is not None:
        m = np.asarray(mask, dtype=bool)
        out[m] = np.asarray(img, dtype=np.float64)[m]
    return out


def inpainting_params(p: int, L: int):
    """``(d, K, S)`` for patch size ``p``: ``K = 2 p^2 - L`` atoms, learning sparsity ``p - L``."""
    d = p * p
    if not 0 <= L < p:
        raise ValueError(f"need 0 <= L < p, got p={p}, L={L}")
    return d, 2 * d - L, p - L


def learn_for_inpainting(img, mask, p: int, L: int, *, iterations: int = 40,
                         lowrank_iters: int = 10, seed: int = 0, workers: int | None = None,
                         reproducible: bool = True, backend=None, callback=None) -> LearnState:
    """Learn ``L`` low-rank atoms and ``2 p^2 - L`` dictionary atoms on the image's own patches."""
    d, K, S = inpainting_params(p, L)
    ps = extract_patches(img, mask, p)
    data = (ps.patches, ps.masks)
    workers = default_workers() if workers is None else workers
    lowrank = recover_lowrank(data, L, lowrank_iters, stream_rng(seed, LOWRANK_STREAM),
                              workers=workers, reproducible=reproducible, backend=backend)
    state = initial_state(d, K, lowrank, seed)
    config = LearnConfig(S=S, iterations=iterations, seed=seed, workers=workers,
                         reproducible_reduction=reproducible, backend=backend)
    return learn(config, state, data, callback)
