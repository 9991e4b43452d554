"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 4096] [--repeat 5]

Each kernel runs on one chunk of masked signals from a random pair with
d=64, K=96, L=2, S=4; the best of ``--repeat`` runs is reported.
"""

import argparse
import timeit

import numpy as np

from itkrmm import _backend
from itkrmm.maskgen import ErasureSpec
from itkrmm.synthgen import SignalSource, SignalSpec, make_random_pair


def cases(n):
    pair = make_random_pair(64, 96, 2, seed=0)
    Y, M = SignalSource(pair, SignalSpec(S=4), ErasureSpec.type22(0.7), n, seed=1).batch(0)
    D = _backend.fortran(pair.dictionary)
    G = _backend.fortran(pair.lowrank)
    Yf, Mb = _backend.fortran(Y), _backend.mask_bytes(M)
    full = _backend.fortran(np.column_stack([pair.lowrank, pair.dictionary]))
    atom = np.ascontiguousarray(pair.lowrank[:, 1])
    return {
        "threshold": lambda k: k.threshold_chunk(D, Yf, Mb, 4),
        "itkrm": lambda k: k.itkrm_chunk(D, Yf, 4),
        "itkrmm": lambda k: k.itkrmm_chunk(D, G, Yf, Mb, 4),
        "lowrank": lambda k: k.lowrank_chunk(G[:, :1], atom, Yf, Mb),
        "omp": lambda k: k.omp_chunk(full, Yf, Mb, 6, 2),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4096, help="signals per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = _backend.available()
    print(f"backends: {', '.join(names)}; n={args.n}")
    print(f"{'kernel':<10}" + "".join(f"{b + ' ms':>14}" for b in names) + f"{'speedup':>10}")
    for kernel, call in cases(args.n).items():
        ms = {}
        for b in names:
            mod = _backend.get(b)
            ms[b] = 1e3 * min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
        speedup = ms["python"] / ms["cython"] if "cython" in ms else float("nan")
        print(f"{kernel:<10}" + "".join(f"{ms[b]:>14.2f}" for b in names) + f"{speedup:>10.1f}")


if __name__ == "__main__":
    main()
