"""Experiment configuration: sectioned key-value files.

Example::

    [experiment]
    seed = 1
    [pair]
    kind = random      # dct | random | support
    d = 64
    K = 96
    L = 2

Missing keys take their defaults; unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .maskgen import BurstSpec, ErasureSpec
from .synthgen import (RepresentationPair, SignalSpec, make_dct_pair, make_random_pair,
                       make_support_pair)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class ExperimentSection:
    seed: int = 0
    reproducible: bool = True
    workers: int = 0          # 0 = available parallelism


@dataclass
class PairSection:
    kind: str = "random"
    d: int = 64
    K: int = 96
    L: int = 2
    m: int = 8
    seed: int = 0


@dataclass
class SignalSection:
    e_lr: float = 1 / 3
    b_lr: float = 0.15
    S: int = 4
    b_S: float = 0.1
    noise_sigma: float = 0.0
    scale_max: float = 4.0
    scale_min: float = 0.0
    n: int = 20000            # signals per batch


@dataclass
class MaskSection:
    kind: str = "erasure"     # erasure | type22 | burst | none
    p1: float = 0.7
    p2: float = 0.9
    q1: float = 0.7
    q2: float = 0.9
    T: int = 16
    p_T: float = 0.5
    p_2T: float = 0.5
    q: float = 0.5


@dataclass
class LearnSection:
    S: int = 4
    iterations: int = 10
    lowrank_iters: int = 10
    adaptive_lowrank: bool = False
    refresh: bool = True
    init: str = "closeby"     # closeby | random


@dataclass
class MetricsSection:
    t_high: float = 0.99
    t_low: float = 0.90


@dataclass
class InpaintSection:
    image: str = ""
    mask: str = ""            # PGM mask (0 = erased); empty = random erasures
    mask_rate: float = 0.3
    p: int = 8
    L: int = 1
    S_omp: int = 20
    iterations: int = 40
    lowrank_iters: int = 10
    restore_observed: bool = False


@dataclass
class OutputSection:
    dir: str = "out"


SECTIONS = {
    "experiment": ExperimentSection,
    "pair": PairSection,
    "signal": SignalSection,
    "mask": MaskSection,
    "learn": LearnSection,
    "metrics": MetricsSection,
    "inpaint": InpaintSection,
    "output": OutputSection,
}


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    pair: PairSection = field(default_factory=PairSection)
    signal: SignalSection = field(default_factory=SignalSection)
    mask: MaskSection = field(default_factory=MaskSection)
    learn: LearnSection = field(default_factory=LearnSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    inpaint: InpaintSection = field(default_factory=InpaintSection)
    output: OutputSection = field(default_factory=OutputSection)

    # construction helpers

    def make_pair(self) -> RepresentationPair:
        p = self.pair
        if p.kind == "dct":
            return make_dct_pair(p.d, p.L)
        if p.kind == "random":
            return make_random_pair(p.d, p.K, p.L, p.seed)
        if p.kind == "support":
            return make_support_pair(p.d, p.m, p.L, p.seed)
        raise ConfigError(f"pair.kind: unknown kind {p.kind!r}")

    def signal_spec(self) -> SignalSpec:
        s = self.signal
        return SignalSpec(s.e_lr, s.b_lr, s.S, s.b_S, s.noise_sigma, s.scale_max, s.scale_min)

    def mask_model(self):
        m = self.mask
        if m.kind == "none":
            return None
        if m.kind == "erasure":
            return ErasureSpec(m.p1, m.p2, m.q1, m.q2)
        if m.kind == "type22":
            return ErasureSpec.type22(m.p1)
        if m.kind == "burst":
            return BurstSpec(m.T, m.p_T, m.p_2T, m.q)
        raise ConfigError(f"mask.kind: unknown kind {m.kind!r}")

    def pair_dims(self):
        """``(d, K, L)`` implied by the pair section."""
        p = self.pair
        if p.kind in ("dct", "support"):
            return p.d, p.d - p.L, p.L
        return p.d, p.K, p.L

    def validate(self) -> None:
        p = self.pair
        if p.kind not in ("dct", "random", "support"):
            raise ConfigError(f"pair.kind: unknown kind {p.kind!r}")
        if p.d < 1:
            raise ConfigError("pair.d: must be positive")
        if not 0 <= p.L < p.d:
            raise ConfigError(f"pair.L: need 0 <= L < d, got L={p.L}, d={p.d}")
        if p.kind == "random" and p.K < 1:
            raise ConfigError("pair.K: must be positive")
        if p.kind == "support" and not 1 <= p.m <= p.d:
            raise ConfigError(f"pair.m: need 1 <= m <= d, got {p.m}")
        _, K, _ = self.pair_dims()
        if self.signal.S > K:
            raise ConfigError(f"signal.S: sparsity {self.signal.S} exceeds K={K}")
        if not 1 <= self.learn.S <= K:
            raise ConfigError(f"learn.S: need 1 <= S <= K={K}, got {self.learn.S}")
        if self.learn.iterations < 1:
            raise ConfigError("learn.iterations: must be at least 1")
        if self.learn.lowrank_iters < 1:
            raise ConfigError("learn.lowrank_iters: must be at least 1")
        if self.learn.init not in ("closeby", "random"):
            raise ConfigError(f"learn.init: unknown mode {self.learn.init!r}")
        if self.signal.n < 1:
            raise ConfigError("signal.n: must be positive")
        if self.experiment.workers < 0:
            raise ConfigError("experiment.workers: must be non-negative")
        if not 0 <= self.metrics.t_low <= self.metrics.t_high <= 1:
            raise ConfigError("metrics: need 0 <= t_low <= t_high <= 1")
        try:
            self.signal_spec().validate()
        except ValueError as exc:
            raise ConfigError(f"signal: {exc}") from None
        model = self.mask_model()
        try:
            if isinstance(model, BurstSpec):
                model.validate(p.d)
            elif model is not None:
                model.validate()
        except ValueError as exc:
            raise ConfigError(f"mask: {exc}") from None
        ip = self.inpaint
        if ip.p < 1 or not 0 <= ip.L < ip.p * ip.p or ip.p - ip.L < 1:
            raise ConfigError(f"inpaint: need p >= 1 and 0 <= L < p, got p={ip.p}, L={ip.L}")
        if not 0 <= ip.mask_rate <= 1:
            raise ConfigError("inpaint.mask_rate: must lie in [0, 1]")
        if ip.S_omp < 1 or ip.iterations < 1 or ip.lowrank_iters < 1:
            raise ConfigError("inpaint: S_omp, iterations and lowrank_iters must be positive")


def _convert(section: str, key: str, raw: str, typ):
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {typ.__name__}") from None


_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",),
                                   interpolation=None)
    cp.optionxform = str      # keys are case-sensitive (K vs k)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    cfg = ExperimentConfig()
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(f"{name}: unknown section")
        sec = getattr(cfg, name)
        known = {f.name: f for f in fields(sec)}
        for key, raw in cp.items(name):
            if key not in known:
                raise ConfigError(f"{name}.{key}: unknown key")
            setattr(sec, key, _convert(name, key, raw, _TYPES[known[key].type]))
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ExperimentConfig) -> str:
    out = io.StringIO()
    for name in SECTIONS:
        out.write(f"[{name}]\n")
        sec = getattr(cfg, name)
        for f in fields(sec):
            out.write(f"{f.name} = {_format(getattr(sec, f.name))}\n")
        out.write("\n")
    return out.getvalue()
