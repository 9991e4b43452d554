"""Recovery metrics for dictionaries and low-rank components, and PSNR."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

PSNR_CAP = 1000.0
THRESHOLDS = (0.99, 0.90)


@dataclass
class RecoveryReport:
    d_inf: float
    d_1: float
    recovered_099: float
    recovered_090: float
    match_index: np.ndarray
    match_ip: np.ndarray

    FIELDS = ("d_inf", "d_1", "recovered_099", "recovered_090")

    def row(self) -> dict:
        return {f: getattr(self, f) for f in self.FIELDS}

    def detail_rows(self):
        for k, (j, ip) in enumerate(zip(self.match_index, self.match_ip)):
            yield {"atom": k, "match": int(j), "abs_ip": float(ip)}

    def detail_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["atom", "match", "abs_ip"], lineterminator="\n")
        w.writeheader()
        w.writerows(self.detail_rows())
        return buf.getvalue()


def atom_distances(generating: np.ndarray, learned: np.ndarray,
                   thresholds=THRESHOLDS) -> RecoveryReport:
    """Closest-match errors ``min_j ||phi_k +- psi_j||`` for every generating atom.

    Matches are chosen independently per generating atom, so two generating
    atoms may share the same learned atom. An atom counts as recovered at
    level ``t`` when its best ``|<phi_k, psi_j>|`` is at least ``t``; the
    two reported rates use ``thresholds = (high, low)``.
    """
    generating = np.asarray(generating, dtype=np.float64)
    learned = np.asarray(learned, dtype=np.float64)
    if generating.ndim != 2 or learned.ndim != 2 or 0 in generating.shape or 0 in learned.shape:
        raise ValueError("atom_distances needs non-empty column sets")
    if generating.shape[0] != learned.shape[0]:
        raise ValueError("dimension mismatch between generating and learned atoms")
    ip = generating.T @ learned
    gram = np.abs(ip)
    match = np.argmax(gram, axis=1)
    rows = np.arange(gram.shape[0])
    best = np.minimum(gram[rows, match], 1.0)
    # the explicit difference avoids cancellation in sqrt(2 - 2|ip|) near |ip| = 1
    flip = np.where(ip[rows, match] >= 0, 1.0, -1.0)
    dist = np.linalg.norm(generating - learned[:, match] * flip, axis=0)
    return RecoveryReport(
        d_inf=float(dist.max()),
        d_1=float(dist.mean()),
        recovered_099=float(np.mean(best >= thresholds[0])),
        recovered_090=float(np.mean(best >= thresholds[1])),
        match_index=match,
        match_ip=best,
    )


def lowrank_error(generating: np.ndarray, recovered: np.ndarray) -> float:
    """Operator norm of ``G - P(G~) G``."""
    generating = np.asarray(generating, dtype=np.float64)
    recovered = np.asarray(recovered, dtype=np.float64)
    if generating.shape[0] != recovered.shape[0]:
        raise ValueError("dimension mismatch")
    if generating.shape[1] == 0:
        return 0.0
    if recovered.shape[1] == 0:
        resid = generating
    else:
        Q, _ = np.linalg.qr(recovered)
        resid = generating - Q @ (Q.T @ generating)
    return float(np.linalg.norm(resid, 2))


def coherence(dico: np.ndarray) -> float:
    dico = np.asarray(dico, dtype=np.float64)
    if dico.ndim != 2 or dico.shape[1] < 2:
        raise ValueError("coherence needs at least two atoms")
    gram = np.abs(dico.T @ dico)
    np.fill_diagonal(gram, 0.0)
    return float(gram.max())


def spikiness(atoms: np.ndarray) -> float:
    """Largest sup-norm over all atoms."""
    return float(np.abs(atoms).max())


def psnr(original, reconstructed) -> float:
    """Peak SNR in dB with the peak taken as the dynamic range of ``original``.

    Identical images give ``PSNR_CAP``.
    """
    Y = np.asarray(original, dtype=np.float64)
    Z = np.asarray(reconstructed, dtype=np.float64)
    if Y.shape != Z.shape:
        raise ValueError(f"shape mismatch {Y.shape} vs {Z.shape}")
    mse = np.mean((Y - Z) ** 2)
    peak = Y.max() - Y.min()
    if mse == 0:
        return PSNR_CAP
    if peak == 0:
        return -PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(peak ** 2 / mse)))
