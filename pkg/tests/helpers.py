import os

import numpy as np

DATA = os.path.join(os.path.dirname(__file__), "data")


def unit_columns(rng, d, n):
    A = rng.standard_normal((d, n))
    return A / np.linalg.norm(A, axis=0)


def incoherent_dictionary(rng, d, K, mu, batch=256, max_rounds=10_000):
    """Random unit atoms added one at a time while all pairwise |<a, b>| < mu."""
    atoms = np.zeros((d, 0))
    for _ in range(max_rounds):
        cand = unit_columns(rng, d, batch)
        cand = cand[:, np.all(np.abs(atoms.T @ cand) < mu, axis=0)]
        for c in cand.T:
            if np.all(np.abs(atoms.T @ c) < mu):
                atoms = np.column_stack([atoms, c])
                if atoms.shape[1] == K:
                    return atoms
    raise RuntimeError("coherence target too small for the requested size")


def recoverable_signals(pair, spec, n, rng, mask=None, batch=4096):
    """Model signals whose generating support thresholding recovers.

    With ``mask`` set, signals are masked and thresholding runs on the masked
    dictionary. Returns ``(Y, supports)`` with ``n`` columns.
    """
    from itkrmm.sparse import threshold_masked_batch
    from itkrmm.synthgen import draw_signals

    keep_y, keep_s, total = [], [], 0
    while total < n:
        Y, sup = draw_signals(pair, spec, batch, rng, return_supports=True)
        M = np.ones(Y.shape, bool) if mask is None else np.repeat(mask[:, None], batch, axis=1)
        idx, _ = threshold_masked_batch(pair.dictionary, Y * M, M, spec.S)
        ok = np.all(np.sort(np.asarray(idx), axis=1) == np.sort(sup, axis=1), axis=1)
        keep_y.append((Y * M)[:, ok])
        keep_s.append(sup[ok])
        total += int(ok.sum())
    return np.concatenate(keep_y, axis=1)[:, :n], np.concatenate(keep_s)[:n]


# criterion number -> (status, summary line); printed by conftest after the run
ACCEPTANCE = {}
