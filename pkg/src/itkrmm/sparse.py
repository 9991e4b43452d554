"""Sparse approximation of masked signals: thresholding and masked OMP.

Atoms are rescaled by ``1 / ||M phi_k||`` in every selection step; atoms whose
masked norm falls below ``VANISH_TOL`` cannot be selected. Ties go to the
lowest atom index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from ._reduce import chunk_bounds
from .linops import VANISH_TOL, least_squares


@dataclass
class SupportSelection:
    indices: np.ndarray
    scores: np.ndarray


@dataclass
class SparseCode:
    support: SupportSelection
    coefficients: np.ndarray
    residual_norms: np.ndarray | None = None


def _check(dico, y, mask, S):
    dico = np.asarray(dico, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if dico.ndim != 2 or y.shape != (dico.shape[0],) or mask.shape != y.shape:
        raise ValueError("dimension mismatch between dictionary, signal and mask")
    if S > dico.shape[1]:
        raise ValueError(f"sparsity S={S} exceeds number of atoms K={dico.shape[1]}")
    if S < 0:
        raise ValueError("sparsity must be non-negative")
    return dico, y, mask


def masked_scores(dico: np.ndarray, r: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """``|<M phi_k, r>| / ||M phi_k||``; ``-inf`` for vanished atoms."""
    mdico = dico * mask[:, None]
    norms = np.linalg.norm(mdico, axis=0)
    scores = np.full(dico.shape[1], -np.inf)
    live = norms >= VANISH_TOL
    scores[live] = np.abs(mdico[:, live].T @ r) / norms[live]
    return scores


def threshold_masked(dico, y_masked, mask, S: int) -> SupportSelection:
    """The ``S`` atoms with largest renormalised masked correlation.

    Returns fewer than ``S`` atoms when fewer survive the mask.
    """
    dico, y, mask = _check(dico, y_masked, mask, S)
    scores = masked_scores(dico, y * mask, mask)
    order = np.argsort(-scores, kind="stable")[:S]
    order = order[scores[order] > -np.inf]
    return SupportSelection(order, scores[order])


def omp_masked(dico, y_masked, mask, S: int, initial_support=()) -> SparseCode:
    """Orthogonal matching pursuit on the masked dictionary ``M dico``.

    ``initial_support`` atoms are fitted before the greedy loop and count
    towards ``S``. Stops early once the residual vanishes or no selectable
    atom is left.
    """
    dico, y, mask = _check(dico, y_masked, mask, S)
    y = y * mask
    mdico = dico * mask[:, None]
    support = [int(i) for i in initial_support][:S]
    x = least_squares(mdico[:, support], y)
    r = y - mdico[:, support] @ x
    res = [np.linalg.norm(r)]
    sel_scores = [np.nan] * len(support)
    while len(support) < S and res[-1] >= 1e-12:
        scores = masked_scores(dico, r, mask)
        scores[support] = -np.inf
        j = int(np.argmax(scores))
        if scores[j] == -np.inf:
            break
        support.append(j)
        sel_scores.append(scores[j])
        x = least_squares(mdico[:, support], y)
        r = y - mdico[:, support] @ x
        res.append(np.linalg.norm(r))
    sel = SupportSelection(np.asarray(support, dtype=np.int64), np.asarray(sel_scores))
    return SparseCode(sel, x, np.asarray(res))


def omp_masked_batch(dico, Y, masks, S: int, n_forced: int = 0, backend=None) -> np.ndarray:
    """Masked OMP on every column of ``Y``; returns the (K, n) coefficients."""
    kern = _backend.get(backend)
    dico = _backend.fortran(dico)
    Y = _backend.fortran(Y)
    masks = _backend.mask_bytes(masks)
    if S > dico.shape[1]:
        raise ValueError(f"sparsity S={S} exceeds number of atoms K={dico.shape[1]}")
    out = np.zeros((dico.shape[1], Y.shape[1]))
    for lo, hi in chunk_bounds(Y.shape[1]):
        out[:, lo:hi] = kern.omp_chunk(dico, _backend.fortran(Y[:, lo:hi]),
                                       _backend.mask_bytes(masks[:, lo:hi]), S, n_forced)
    return out


def threshold_masked_batch(dico, Y, masks, S: int, backend=None):
    """Thresholding supports for every column; ``-1`` marks unused slots."""
    kern = _backend.get(backend)
    return kern.threshold_chunk(_backend.fortran(dico), _backend.fortran(Y), _backend.mask_bytes(masks), S)
