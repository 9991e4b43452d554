"""ITKrM and its masked-data variant ITKrMM, plus the learning driver."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._reduce import map_reduce
from .linops import VANISH_TOL, normalize_columns
from .lowrank import LowRankEstimate, random_sphere_complement, rescale_by_counts
from .synthgen import INIT_STREAM, REPLACE_STREAM, RepresentationPair, stream_rng

log = logging.getLogger(__name__)


@dataclass
class LearnConfig:
    S: int
    iterations: int = 10
    signals_per_iteration: int | None = None   # None = whole batch
    refresh: bool = False                      # True: fresh batch per iteration
    reproducible_reduction: bool = True
    seed: int = 0
    workers: int | None = None
    backend: str | None = None

    def validate(self) -> None:
        if self.S < 1:
            raise ValueError("learning sparsity S must be at least 1")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")


@dataclass
class IterationStats:
    iteration: int
    atoms_replaced: int
    mean_score: float
    mean_masked_norm: float
    wallclock_ms: float


@dataclass
class LearnState:
    lowrank: LowRankEstimate
    dictionary: np.ndarray
    iteration: int = 0
    diagnostics: list = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.dictionary.shape[0]

    @property
    def K(self) -> int:
        return self.dictionary.shape[1]

    def check(self, tol: float = 1e-8) -> None:
        """Raise if columns are not unit norm or not orthogonal to the low-rank part."""
        norms = np.linalg.norm(self.dictionary, axis=0)
        if np.max(np.abs(norms - 1.0), initial=0.0) > 1e-10:
            raise AssertionError("dictionary columns are not unit norm")
        G = self.lowrank.atoms
        if G.shape[1] and np.max(np.abs(G.T @ self.dictionary)) > tol:
            raise AssertionError("dictionary is not orthogonal to the low-rank component")


def _replace_dead(dico: np.ndarray, dead: np.ndarray, lowrank: np.ndarray, rng) -> np.ndarray:
    if dead.any():
        dico[:, dead] = random_sphere_complement(dico.shape[0], lowrank, int(dead.sum()), rng)
    return dico


def itkrm_iteration(dico: np.ndarray, Y: np.ndarray, S: int, *, rng=None,
                    workers: int | None = None, reproducible: bool = True,
                    backend=None, return_stats: bool = False):
    """One ITKrM step on clean signals (columns of ``Y``).

    Atoms that are never selected are redrawn uniformly at random.
    """
    dico = np.asarray(dico, dtype=np.float64)
    if S > dico.shape[1]:
        raise ValueError(f"sparsity S={S} exceeds number of atoms K={dico.shape[1]}")
    kern = _backend.get(backend)
    D = _backend.fortran(dico)
    Yf = _backend.fortran(Y)

    def chunk(lo, hi):
        psi, counts, sc = kern.itkrm_chunk(D, Yf[:, lo:hi], S)
        return np.asarray(psi), np.asarray(counts), sc

    psi, counts, score_sum = map_reduce(chunk, Yf.shape[1], workers, reproducible)
    norms = np.linalg.norm(psi, axis=0)
    dead = (counts == 0) | (norms < VANISH_TOL)
    new = psi / np.where(dead, 1.0, norms)
    new = _replace_dead(new, dead, np.zeros((dico.shape[0], 0)), np.random.default_rng(rng))
    if return_stats:
        return new, int(dead.sum()), score_sum / max(1, counts.sum())
    return new


def itkrmm_iteration(state: LearnState, Y: np.ndarray, masks: np.ndarray, S: int, *,
                     rng=None, workers: int | None = None, reproducible: bool = True,
                     backend=None) -> LearnState:
    """One ITKrMM step on masked signals; returns the updated state.

    Atoms that are never selected, or vanish after the observation-count
    rescaling, are redrawn at random in the complement of the low-rank part.
    """
    t0 = time.perf_counter()
    dico = state.dictionary
    if S > dico.shape[1]:
        raise ValueError(f"sparsity S={S} exceeds number of atoms K={dico.shape[1]}")
    G = state.lowrank.atoms
    kern = _backend.get(backend)
    D = _backend.fortran(dico)
    Gf = _backend.fortran(G)
    Yf = _backend.fortran(Y)
    Mb = _backend.mask_bytes(masks)

    def chunk(lo, hi):
        psi, W, counts, sc = kern.itkrmm_chunk(D, Gf, Yf[:, lo:hi], Mb[:, lo:hi], S)
        return np.asarray(psi), np.asarray(W), np.asarray(counts), sc

    psi, W, counts, score_sum = map_reduce(chunk, Yf.shape[1], workers, reproducible)
    new, top = rescale_by_counts(psi, W)
    if G.shape[1]:
        new = new - G @ (G.T @ new)
    norms = np.linalg.norm(new, axis=0)
    dead = (counts == 0) | (norms < VANISH_TOL * np.maximum(top[0], 1.0))
    new = new / np.where(dead, 1.0, norms)
    new = _replace_dead(new, dead, G, np.random.default_rng(rng))
    if dead.any():
        log.info("iteration %d: replaced %d dead atoms", state.iteration + 1, int(dead.sum()))
    # masked atom norms on a prefix of the batch; small values flag destructive masks
    Mf = np.asarray(masks[:, :1024], dtype=np.float64)
    mean_mnorm = float(np.sqrt((dico ** 2).T @ Mf).mean())
    stats = IterationStats(state.iteration + 1, int(dead.sum()), score_sum / max(1, counts.sum()),
                           mean_mnorm, 1e3 * (time.perf_counter() - t0))
    return LearnState(state.lowrank, new, state.iteration + 1, state.diagnostics + [stats])


def init_random(d: int, K: int, lowrank=None, rng=None) -> np.ndarray:
    """K uniform unit atoms in the orthogonal complement of the low-rank part."""
    G = _atoms(lowrank, d)
    return random_sphere_complement(d, G, K, np.random.default_rng(rng))


def init_closeby(generating: RepresentationPair, rng=None, lowrank=None) -> np.ndarray:
    """1:1 mixes of each generating atom with a random unit vector orthogonal to it."""
    rng = np.random.default_rng(rng)
    Phi = generating.dictionary
    d, K = Phi.shape
    Z = rng.standard_normal((d, K))
    Z -= Phi * np.sum(Phi * Z, axis=0)
    Z = normalize_columns(Z)
    init = (Phi + Z) / np.sqrt(2.0)
    G = generating.lowrank if lowrank is None else _atoms(lowrank, d)
    if G.shape[1]:
        init -= G @ (G.T @ init)
    return normalize_columns(init)


def _atoms(lowrank, d):
    if lowrank is None:
        return np.zeros((d, 0))
    if isinstance(lowrank, LowRankEstimate):
        return lowrank.atoms
    return np.asarray(lowrank, dtype=np.float64)


def _fetch(source, index: int, n: int | None):
    if hasattr(source, "batch"):
        Y, M = source.batch(index)
    else:
        Y, M = source
    if n is not None and n < Y.shape[1]:
        Y, M = Y[:, :n], M[:, :n]
    return Y, M


def learn(config: LearnConfig, state: LearnState, source, callback=None) -> LearnState:
    """Run ``config.iterations`` ITKrMM steps.

    ``source`` is a ``(Y, masks)`` pair or an object with ``batch(index)``;
    with ``config.refresh`` the batch index advances every iteration.
    ``callback(state)`` is called after each iteration.
    """
    config.validate()
    for it in range(config.iterations):
        Y, M = _fetch(source, it if config.refresh else 0, config.signals_per_iteration)
        rng = stream_rng(config.seed, REPLACE_STREAM, state.iteration)
        state = itkrmm_iteration(state, Y, M, config.S, rng=rng, workers=config.workers,
                                 reproducible=config.reproducible_reduction,
                                 backend=config.backend)
        if callback is not None:
            callback(state)
    return state


def learn_unadapted(config: LearnConfig, dico: np.ndarray, lowrank: np.ndarray, source) -> np.ndarray:
    """ITKrM baseline: ignore the masks, project zero-filled signals off ``lowrank``."""
    config.validate()
    G = _atoms(lowrank, dico.shape[0])
    for it in range(config.iterations):
        Y, M = _fetch(source, it if config.refresh else 0, config.signals_per_iteration)
        Y = np.asarray(Y, dtype=np.float64) * M
        if G.shape[1]:
            Y = Y - G @ (G.T @ Y)
        rng = stream_rng(config.seed, REPLACE_STREAM, it)
        dico = itkrm_iteration(dico, Y, config.S, rng=rng, workers=config.workers,
                               reproducible=config.reproducible_reduction, backend=config.backend)
        if G.shape[1]:
            dico = normalize_columns(dico - G @ (G.T @ dico))
    return dico


def initial_state(d: int, K: int, lowrank=None, seed: int = 0) -> LearnState:
    """Random initial state for ``K`` atoms."""
    G = _atoms(lowrank, d)
    est = lowrank if isinstance(lowrank, LowRankEstimate) else LowRankEstimate(G)
    return LearnState(est, init_random(d, K, G, stream_rng(seed, INIT_STREAM)))

