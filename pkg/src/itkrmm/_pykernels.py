"""Pure numpy implementation of the per-signal hot loops.

Every function processes one chunk of signals and returns partial sums; the
caller merges chunks. Signals are the columns of ``Y`` (d x n) and masks the
columns of ``masks`` (d x n, nonzero = observed). Vectorised over the chunk.
"""

from __future__ import annotations

import numpy as np

from .linops import RCOND, VANISH_TOL

NAME = "python"


def _residual(A: np.ndarray, Yt: np.ndarray) -> np.ndarray:
    """Rows of ``Yt`` minus their projection onto span(A[i]); A is (n, d, m)."""
    if A.shape[2] == 0:
        return Yt.copy()
    # matmul's summation order depends on memory layout; fix it for reproducibility
    A = np.ascontiguousarray(A)
    Yt = np.ascontiguousarray(Yt)
    pinv = np.linalg.pinv(A, rcond=RCOND)
    coef = np.matmul(pinv, Yt[:, :, None])
    return Yt - np.matmul(A, coef)[:, :, 0]


def _sign(x):
    return np.where(x >= 0, 1.0, -1.0)


def _top_s(scores: np.ndarray, S: int):
    """Indices (S, n) of the S best scores per column, ties to the lowest index."""
    order = np.argsort(-scores, axis=0, kind="stable")[:S]
    valid = np.take_along_axis(scores, order, axis=0) > -np.inf
    return order, valid


def _scores(ip: np.ndarray, norms: np.ndarray) -> np.ndarray:
    live = norms >= VANISH_TOL
    out = np.full(ip.shape, -np.inf)
    np.divide(np.abs(ip), norms, out=out, where=np.broadcast_to(live, ip.shape))
    return out


def threshold_chunk(dico, Y, masks, S):
    Mf = np.asarray(masks, dtype=np.float64)
    ip = dico.T @ (Y * Mf)
    norms = np.sqrt(((dico[:, :, None] * Mf[:, None, :]) ** 2).sum(axis=0))
    scores = _scores(ip, norms)
    order, valid = _top_s(scores, S)
    return np.where(valid, order, -1).T, np.where(valid, np.take_along_axis(scores, order, 0), 0.0).T


def itkrmm_chunk(dico, lowrank, Y, masks, S):
    """Residual-means partial sums for the masked iteration.

    Returns ``(psi, W, counts, score_sum)`` with ``psi`` and ``W`` of shape
    (d, K).
    """
    d, K = dico.shape
    n = Y.shape[1]
    L = lowrank.shape[1]
    Mf = np.asarray(masks, dtype=np.float64)
    Yt = (Y * Mf).T
    if L:
        Yt = _residual(Mf.T[:, :, None] * lowrank[None], Yt)
    ip = dico.T @ Yt.T
    nk2 = ((dico[:, :, None] * Mf[:, None, :]) ** 2).sum(axis=0)
    scores = _scores(ip, np.sqrt(nk2))
    order, valid = _top_s(scores, S)
    vf = valid.astype(np.float64)

    sel = dico[:, order]                              # (d, S, n)
    msel = (sel * Mf[:, None, :] * vf[None]).transpose(2, 0, 1)   # (n, d, S)
    A = np.concatenate([np.broadcast_to(Mf.T[:, :, None] * lowrank[None], (n, d, L)), msel], axis=2)
    r = _residual(A, Yt)

    ip_sel = np.take_along_axis(ip, order, 0)
    nk2_sel = np.take_along_axis(nk2, order, 0)
    coef = np.divide(ip_sel, nk2_sel, out=np.zeros_like(ip_sel), where=valid)
    contrib = _sign(ip_sel).T[:, :, None] * (r[:, None, :] + coef.T[:, :, None] * msel.transpose(0, 2, 1))

    keep = valid.T.ravel()
    idx = order.T.ravel()[keep]
    psi = np.zeros((K, d))
    W = np.zeros((K, d))
    np.add.at(psi, idx, contrib.reshape(n * S, d)[keep])
    np.add.at(W, idx, np.repeat(Mf.T, S, axis=0)[keep])
    counts = np.bincount(idx, minlength=K).astype(np.int64)
    score_sum = float(np.where(valid, np.take_along_axis(scores, order, 0), 0.0).sum())
    return psi.T.copy(), W.T.copy(), counts, score_sum


def itkrm_chunk(dico, Y, S):
    """Residual-means partial sums for the unmasked iteration."""
    d, K = dico.shape
    n = Y.shape[1]
    ip = dico.T @ Y
    nk2 = (dico ** 2).sum(axis=0)
    scores = np.abs(ip) / np.sqrt(nk2)[:, None]
    order, _ = _top_s(scores, S)

    sel = np.ascontiguousarray(dico[:, order].transpose(2, 0, 1))    # (n, d, S)
    r = _residual(sel, np.ascontiguousarray(Y.T))
    ip_sel = np.take_along_axis(ip, order, 0)
    coef = ip_sel / nk2[order]
    contrib = _sign(ip_sel).T[:, :, None] * (r[:, None, :] + coef.T[:, :, None] * sel.transpose(0, 2, 1))

    idx = order.T.ravel()
    psi = np.zeros((K, d))
    np.add.at(psi, idx, contrib.reshape(n * S, d))
    counts = np.bincount(idx, minlength=K).astype(np.int64)
    score_sum = float(np.take_along_axis(scores, order, 0).sum())
    return psi.T.copy(), counts, score_sum


def lowrank_chunk(lowrank, atom, Y, masks):
    """Partial sums ``(gamma, W)`` for one low-rank atom update."""
    d, n = Y.shape
    Mf = np.asarray(masks, dtype=np.float64)
    Yt = (Y * Mf).T
    Mt = Mf.T[:, :, None] * lowrank[None]
    if lowrank.shape[1]:
        Yt = _residual(Mt, Yt)
    matom = Mf.T * atom[None, :]                      # (n, d)
    r = _residual(np.concatenate([Mt, matom[:, :, None]], axis=2), Yt)
    ip = Yt @ atom
    nk2 = (matom ** 2).sum(axis=1)
    live = np.sqrt(nk2) >= VANISH_TOL
    coef = np.divide(ip, nk2, out=np.zeros_like(ip), where=live)
    contrib = _sign(ip)[:, None] * (r + coef[:, None] * matom)
    return contrib.sum(axis=0), Mf.sum(axis=1)


def omp_chunk(dico, Y, masks, S, n_forced=0):
    """Masked OMP on every column; returns the (K, n) coefficient matrix.

    The first ``n_forced`` atoms are placed in every support before the
    greedy selection starts and count towards ``S``.
    """
    d, K = dico.shape
    n = Y.shape[1]
    out = np.zeros((K, n))
    for i in range(n):
        m = np.asarray(masks[:, i], dtype=np.float64)
        y = Y[:, i] * m
        mdico = dico * m[:, None]
        norms = np.sqrt((mdico ** 2).sum(axis=0))
        live = norms >= VANISH_TOL
        support = list(range(min(n_forced, K, S)))
        chosen = np.zeros(K, dtype=bool)
        chosen[support] = True
        x = np.zeros(0)
        r = y.copy()
        if support:
            x, *_ = np.linalg.lstsq(mdico[:, support], y, rcond=RCOND)
            r = y - mdico[:, support] @ x
        while len(support) < S and np.linalg.norm(r) >= 1e-12:
            scores = np.full(K, -np.inf)
            ok = live & ~chosen
            scores[ok] = np.abs(mdico[:, ok].T @ r) / norms[ok]
            j = int(np.argmax(scores))
            if scores[j] == -np.inf:
                break
            support.append(j)
            chosen[j] = True
            x, *_ = np.linalg.lstsq(mdico[:, support], y, rcond=RCOND)
            r = y - mdico[:, support] @ x
        out[support, i] = x
    return out
