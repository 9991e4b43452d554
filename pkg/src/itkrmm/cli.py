"""Command-line driver: ``itkrmm {synth,inpaint,eval,gen-masks,gen-signals}``.

Exit codes: 0 success, 2 configuration error, 3 I/O or file-format error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import io as mdio
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .dictlearn import LearnConfig, LearnState, init_closeby, init_random, learn, learn_unadapted
from .inpaint import inpaint_image, learn_for_inpainting
from .lowrank import DegenerateBatchError, recover_lowrank, svd_lowrank_baseline
from .maskgen import random_pixel_mask
from .metrics import atom_distances, lowrank_error, psnr
from .synthgen import (INIT_STREAM, LOWRANK_STREAM, MASK_STREAM, SIGNAL_STREAM, RepresentationPair,
                       SignalSource, draw_signals, stream_rng)

log = logging.getLogger("itkrmm")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
CSV_VERSION = "mdcsv=1"
METRIC_FIELDS = ["method", "lowrank_error", "d_inf", "d_1", "recovered_099", "recovered_090"]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header: list, rows: list, seed: int, extra: str = "") -> None:
    """CSV with a versioned comment line carrying the master seed."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {CSV_VERSION} seed={seed}{' ' + extra if extra else ''}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])


def _settings(args, cfg: ExperimentConfig):
    seed = cfg.experiment.seed if args.seed is None else args.seed
    workers = cfg.experiment.workers if args.workers is None else args.workers
    reproducible = cfg.experiment.reproducible if args.reproducible is None else args.reproducible
    out = args.out or cfg.output.dir
    return seed, (workers or None), reproducible, out


def _load(args) -> ExperimentConfig:
    return load_config(args.config) if args.config else ExperimentConfig()


def _metric_row(method, pair, lowrank, dico, cfg):
    rep = atom_distances(pair.dictionary, dico, (cfg.metrics.t_high, cfg.metrics.t_low))
    row = {"method": method, "lowrank_error": lowrank_error(pair.lowrank, lowrank)}
    row.update(rep.row())
    return row


def cmd_synth(args) -> int:
    cfg = _load(args)
    seed, workers, reproducible, out = _settings(args, cfg)
    pair = cfg.make_pair()
    spec, model = cfg.signal_spec(), cfg.mask_model()
    mdio.ensure_dir(out)
    lc = cfg.learn
    lr_source = SignalSource(pair, spec, model, cfg.signal.n, seed, refresh=lc.refresh, phase=0)
    dl_source = SignalSource(pair, spec, model, cfg.signal.n, seed, refresh=lc.refresh, phase=1)

    adaptive_K = pair.K if lc.adaptive_lowrank else None
    lowrank = recover_lowrank(lr_source, pair.L, lc.lowrank_iters, stream_rng(seed, LOWRANK_STREAM),
                              adaptive_K=adaptive_K, workers=workers, reproducible=reproducible)
    svd = svd_lowrank_baseline(lr_source.batch(0)[0], pair.L)

    def start(G):
        rng = stream_rng(seed, INIT_STREAM)
        if lc.init == "closeby":
            return init_closeby(pair, rng, lowrank=G)
        return init_random(pair.d, pair.K, G, rng)

    config = LearnConfig(S=lc.S, iterations=lc.iterations, refresh=lc.refresh,
                         reproducible_reduction=reproducible, seed=seed, workers=workers)
    state = learn(config, LearnState(lowrank, start(lowrank.atoms)), dl_source)
    unadapted = learn_unadapted(config, start(svd), svd, dl_source)

    rows = [_metric_row("adapted", pair, lowrank.atoms, state.dictionary, cfg),
            _metric_row("unadapted", pair, svd, unadapted, cfg)]
    write_csv(os.path.join(out, "metrics.csv"), METRIC_FIELDS, rows, seed)
    diag = [vars(s) for s in state.diagnostics]
    write_csv(os.path.join(out, "diagnostics.csv"),
              ["iteration", "atoms_replaced", "mean_score", "mean_masked_norm", "wallclock_ms"],
              diag, seed)
    mdio.write_pair(os.path.join(out, "generating.mddc"), pair)
    mdio.write_pair(os.path.join(out, "adapted.mddc"), RepresentationPair(lowrank.atoms, state.dictionary))
    mdio.write_pair(os.path.join(out, "unadapted.mddc"), RepresentationPair(svd, unadapted))
    with open(os.path.join(out, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
    for row in rows:
        print(",".join(_fmt(row[h]) for h in METRIC_FIELDS))
    return EXIT_OK


def cmd_inpaint(args) -> int:
    cfg = _load(args)
    seed, workers, reproducible, out = _settings(args, cfg)
    ip = cfg.inpaint
    image = args.image or ip.image
    if not image:
        raise ConfigError("inpaint.image: no input image given")
    p = ip.p if args.p is None else args.p
    L = ip.L if args.L is None else args.L
    S_omp = ip.S_omp if args.S_omp is None else args.S_omp
    iterations = ip.iterations if args.iterations is None else args.iterations
    rate = ip.mask_rate if args.mask_rate is None else args.mask_rate
    mask_path = args.mask or ip.mask
    if not (0 <= L < p and 1 <= S_omp <= 2 * p * p and 0 <= rate <= 1 and iterations >= 1):
        raise ConfigError(f"inpaint: invalid parameters p={p}, L={L}, S_omp={S_omp}, rate={rate}")

    img = mdio.read_pgm(image).astype(np.float64)
    if mask_path:
        mask = mdio.read_pgm(mask_path) > 0
        if mask.shape != img.shape:
            raise ConfigError(f"inpaint.mask: mask shape {mask.shape} differs from image {img.shape}")
    else:
        mask = random_pixel_mask(img.shape, rate, stream_rng(seed, MASK_STREAM))
    if p > min(img.shape):
        raise ConfigError(f"inpaint.p: patch size {p} exceeds image size {img.shape}")
    mdio.ensure_dir(out)
    corrupted = img * mask
    state = learn_for_inpainting(img, mask, p, L, iterations=iterations, lowrank_iters=ip.lowrank_iters,
                                 seed=seed, workers=workers, reproducible=reproducible)
    recon = inpaint_image(img, mask, state, S_omp, p, restore_observed=ip.restore_observed)
    mdio.write_pgm(os.path.join(out, "corrupted.pgm"), corrupted)
    mdio.write_pgm(os.path.join(out, "reconstructed.pgm"), recon)
    row = {"image": os.path.basename(image), "corruption_pct": 100.0 * (1.0 - mask.mean()), "L": L,
           "psnr_noisy": psnr(img, corrupted), "psnr_recon": psnr(img, recon)}
    header = ["image", "corruption_pct", "L", "psnr_noisy", "psnr_recon"]
    write_csv(os.path.join(out, "inpaint.csv"), header, [row], seed)
    print(",".join(_fmt(row[h]) for h in header))
    return EXIT_OK


def cmd_eval(args) -> int:
    gen = mdio.read_pair(args.generating)
    header = ["file"] + METRIC_FIELDS[1:]
    rows = []
    for path in args.learned:
        pair = mdio.read_pair(path)
        if pair.d != gen.d:
            raise mdio.FormatError(f"{path}: dimension {pair.d} differs from generating {gen.d}")
        rep = atom_distances(gen.dictionary, pair.dictionary)
        row = {"file": path, "lowrank_error": lowrank_error(gen.lowrank, pair.lowrank)}
        row.update(rep.row())
        rows.append(row)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    return EXIT_OK


def cmd_gen_masks(args) -> int:
    cfg = _load(args)
    seed, _, _, out = _settings(args, cfg)
    model = cfg.mask_model()
    d, n = cfg.pair.d, cfg.signal.n
    masks = np.ones((d, n), dtype=bool) if model is None else model.draw(d, n, stream_rng(seed, MASK_STREAM))
    mdio.ensure_dir(out)
    mdio.write_masks(os.path.join(out, "masks.mdmk"), masks)
    print(f"{n} masks, d={d}, corruption {1.0 - masks.mean():.4f}")
    return EXIT_OK


def cmd_gen_signals(args) -> int:
    cfg = _load(args)
    seed, _, _, out = _settings(args, cfg)
    pair = cfg.make_pair()
    Y = draw_signals(pair, cfg.signal_spec(), cfg.signal.n, stream_rng(seed, SIGNAL_STREAM))
    mdio.ensure_dir(out)
    mdio.write_pair(os.path.join(out, "pair.mddc"), pair)
    mdio.write_signals(os.path.join(out, "signals.mdsg"), Y)
    print(f"{Y.shape[1]} signals, d={Y.shape[0]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--workers", type=int, help="worker threads (0 = all cores)")
    common.add_argument("--reproducible", action=argparse.BooleanOptionalAction, default=None,
                        help="bit-reproducible reductions")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="itkrmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", parents=[common], help="synthetic recovery experiment").set_defaults(func=cmd_synth)

    ip = sub.add_parser("inpaint", parents=[common], help="learn on a corrupted image and inpaint it")
    ip.add_argument("image", nargs="?", help="input PGM (P5)")
    ip.add_argument("--mask", help="mask PGM, 0 = erased")
    ip.add_argument("--mask-rate", type=float, help="iid erasure rate when no mask file is given")
    ip.add_argument("--p", type=int, help="patch size")
    ip.add_argument("--L", type=int, help="number of low-rank atoms")
    ip.add_argument("--S-omp", dest="S_omp", type=int, help="OMP sparsity")
    ip.add_argument("--iterations", type=int, help="learning iterations")
    ip.set_defaults(func=cmd_inpaint)

    ev = sub.add_parser("eval", parents=[common], help="compare learned pairs against a generating pair")
    ev.add_argument("generating")
    ev.add_argument("learned", nargs="+")
    ev.set_defaults(func=cmd_eval)

    sub.add_parser("gen-masks", parents=[common], help="write a mask batch").set_defaults(func=cmd_gen_masks)
    sub.add_parser("gen-signals", parents=[common],
                   help="write a generating pair and clean signals").set_defaults(func=cmd_gen_signals)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (mdio.FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, DegenerateBatchError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
