"""Atom-by-atom recovery of the low-rank component from masked signals."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._reduce import map_reduce
from .linops import VANISH_TOL, truncated_svd_lowrank

log = logging.getLogger(__name__)


class DegenerateBatchError(RuntimeError):
    """The batch carries no usable information for the requested update."""


@dataclass
class LowRankEstimate:
    atoms: np.ndarray
    energy_ratios: list = field(default_factory=list)

    @property
    def L(self) -> int:
        return self.atoms.shape[1]

    @classmethod
    def empty(cls, d: int) -> "LowRankEstimate":
        return cls(np.zeros((d, 0)))


def rescale_by_counts(acc: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """``W^+ acc`` up to a positive factor per column.

    Uses ``max(W) / W`` instead of ``1 / W`` so a column observed equally
    often on every coordinate is left untouched; the factor drops out after
    normalisation.
    """
    acc = np.asarray(acc, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    top = counts.max(axis=0, keepdims=True)
    factor = np.divide(top, counts, out=np.zeros_like(counts), where=counts > 0)
    return acc * factor, top


def lowrank_atom_iteration(prev, atom_est: np.ndarray, Y: np.ndarray, masks: np.ndarray,
                           workers: int | None = None, reproducible: bool = True,
                           backend=None) -> np.ndarray:
    """One update of the low-rank atom ``atom_est`` given earlier atoms ``prev``.

    ``Y`` holds the masked signals as columns and ``masks`` the matching 0/1
    masks. Returns the new unit-norm atom, orthogonal to ``prev``.
    """
    prev_atoms = prev.atoms if isinstance(prev, LowRankEstimate) else np.asarray(prev, dtype=np.float64)
    kern = _backend.get(backend)
    G = _backend.fortran(prev_atoms)
    a = np.ascontiguousarray(atom_est, dtype=np.float64)
    Yf = _backend.fortran(Y)
    Mb = _backend.mask_bytes(masks)

    def chunk(lo, hi):
        return kern.lowrank_chunk(G, a, Yf[:, lo:hi], Mb[:, lo:hi])

    acc, W = map_reduce(chunk, Yf.shape[1], workers, reproducible)
    new, top = rescale_by_counts(acc[:, None], W[:, None])
    new = new[:, 0]
    if G.shape[1]:
        new = new - G @ (G.T @ new)
    nrm = np.linalg.norm(new)
    if top[0, 0] == 0 or nrm / top[0, 0] < VANISH_TOL:
        raise DegenerateBatchError("low-rank update vanished; batch carries no signal energy")
    return new / nrm


def atom_energy_ratio(atom: np.ndarray, Y: np.ndarray, masks: np.ndarray, K: int) -> float:
    """Energy captured by ``atom`` relative to that expected for one of ``K`` atoms."""
    if K < 1:
        raise ValueError("K must be positive")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] == 0:
        raise ValueError("empty batch")
    Mf = np.asarray(masks, dtype=np.float64)
    MY = Y * Mf
    ip = atom @ MY
    nk2 = (atom[:, None] ** 2 * Mf).sum(axis=0)
    live = np.sqrt(nk2) >= VANISH_TOL
    captured = np.sum(ip[live] ** 2 / nk2[live])
    expected = np.sum(MY * MY) / K
    if expected == 0:
        return 0.0
    return float(captured / expected)


def random_sphere_complement(d: int, basis: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform unit vectors in the orthogonal complement of span(basis)."""
    Z = rng.standard_normal((d, n))
    if basis.shape[1]:
        Z -= basis @ (basis.T @ Z)
    return Z / np.linalg.norm(Z, axis=0)


def recover_lowrank(source, L: int, iters_per_atom: int = 10, rng=None, *,
                    adaptive_K: int | None = None, stop_ratio: float = 3.0,
                    workers: int | None = None, reproducible: bool = True,
                    backend=None) -> LowRankEstimate:
    """Learn up to ``L`` low-rank atoms one after the other.

    ``source`` is either a ``(Y, masks)`` pair (fixed corpus) or an object
    with a ``batch(index)`` method returning one. Each atom starts from a
    random unit vector orthogonal to the atoms found so far.

    With ``adaptive_K`` set, atoms are added only while their energy ratio
    against ``adaptive_K`` dictionary atoms stays at or above ``stop_ratio``.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    rng = np.random.default_rng(rng)
    fetch = _as_fetch(source)
    Y0, _ = fetch(0)
    d = Y0.shape[0]
    est = LowRankEstimate.empty(d)
    counter = 0
    for ell in range(L):
        atom = random_sphere_complement(d, est.atoms, 1, rng)[:, 0]
        for _ in range(iters_per_atom):
            Y, M = fetch(counter)
            counter += 1
            atom = lowrank_atom_iteration(est, atom, Y, M, workers, reproducible, backend)
        ratios = est.energy_ratios
        if adaptive_K is not None:
            Y, M = fetch(max(counter - 1, 0))
            ratio = atom_energy_ratio(atom, Y, M, adaptive_K)
            log.debug("low-rank atom %d: energy ratio %.3g", ell + 1, ratio)
            if ratio < stop_ratio:
                break
            ratios = ratios + [ratio]
        est = LowRankEstimate(np.column_stack([est.atoms, atom]), ratios)
    return est


def _as_fetch(source):
    if hasattr(source, "batch"):
        return source.batch
    Y, M = source
    return lambda _index: (Y, M)


def svd_lowrank_baseline(Y_masked: np.ndarray, L: int) -> np.ndarray:
    """Unadapted estimate: leading left singular vectors of the zero-filled data."""
    return truncated_svd_lowrank(Y_masked, L)
