"""The dual-encoder diffusion model, its parameters and the model file format."""
from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import autograd as ag
from ..autograd import Tensor
from ..graphs import HeterogeneousHypergraph
from .global_encoder import encode_global
from .local_encoder import encode_sequence, pad_sequences
from .predictor import ScoredRanking, activation_mask, gate_fuse, pool_global, pool_local, score_users

MAGIC = b"CSDM"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    users: int
    dim: int = 64
    layers: int = 2
    max_len: int = 200
    heads: int = 4
    ffn_dim: int | None = None
    dropout: float = 0.1
    ln_eps: float = 1e-5
    local_pool: str = "last"

    def __post_init__(self):
        if self.dim % self.heads:
            raise ValueError("embedding size must be divisible by head count")
        if self.layers < 0 or self.max_len < 1 or self.users < 1:
            raise ValueError("invalid model dimensions")

    @property
    def d_ff(self) -> int:
        return self.ffn_dim if self.ffn_dim is not None else 4 * self.dim


def _normal(rng: np.random.Generator, shape, std: float) -> Tensor:
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, Tensor]:
    d, m = cfg.dim, cfg.users
    s = 1.0 / math.sqrt(d)
    return {
        "global.x0": _normal(rng, (m, d), s),
        "global.a": _normal(rng, (d, 1), s),
        "global.w_a": _normal(rng, (d, d), s),
        "local.x0": _normal(rng, (m, d), s),
        "local.pos": _normal(rng, (cfg.max_len, d), s),
        "local.wq": _normal(rng, (d, d), s),
        "local.wk": _normal(rng, (d, d), s),
        "local.wv": _normal(rng, (d, d), s),
        "local.w1": _normal(rng, (d, cfg.d_ff), s),
        "local.b1": Tensor(np.zeros(cfg.d_ff), requires_grad=True),
        "local.w2": _normal(rng, (cfg.d_ff, d), 1.0 / math.sqrt(cfg.d_ff)),
        "local.b2": Tensor(np.zeros(d), requires_grad=True),
        "fusion.w": _normal(rng, (2 * d, d), 1.0 / math.sqrt(2 * d)),
    }


def expected_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, m = cfg.dim, cfg.users
    return {
        "global.x0": (m, d), "global.a": (d, 1), "global.w_a": (d, d),
        "local.x0": (m, d), "local.pos": (cfg.max_len, d),
        "local.wq": (d, d), "local.wk": (d, d), "local.wv": (d, d),
        "local.w1": (d, cfg.d_ff), "local.b1": (cfg.d_ff,),
        "local.w2": (cfg.d_ff, d), "local.b2": (d,),
        "fusion.w": (2 * d, d),
    }


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict[str, Tensor]
    user_ids: list[str] = field(default_factory=list)
    global_cache: np.ndarray | None = None

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.config,
            {k: Tensor(v.data.copy(), requires_grad=v.requires_grad) for k, v in self.tensors.items()},
            list(self.user_ids),
            None if self.global_cache is None else self.global_cache.copy(),
        )

    def parameters(self) -> list[Tensor]:
        return [self.tensors[k] for k in sorted(self.tensors)]


class DiffusionModel:
    """Scores every user as the next participant of a partially observed cascade."""

    def __init__(self, params: ModelParams, graph: HeterogeneousHypergraph | None = None):
        self.params = params
        self.graph = graph

    @property
    def config(self) -> ModelConfig:
        return self.params.config

    def t(self, name: str) -> Tensor:
        return self.params.tensors[name]

    def global_embeddings(self) -> Tensor:
        if self.graph is None:
            if self.params.global_cache is None:
                raise ValueError("model has neither a hypergraph nor cached global embeddings")
            return Tensor(self.params.global_cache)
        return encode_global(self.graph, self.t("global.x0"), self.t("global.a"),
                             self.t("global.w_a"), self.config.layers)

    def refresh_cache(self) -> None:
        if self.graph is not None:
            self.params.global_cache = self.global_embeddings().data.copy()

    def encode_local(self, index: np.ndarray, valid: np.ndarray) -> Tensor:
        return encode_sequence(
            index, valid, self.t("local.x0"), self.t("local.pos"),
            self.t("local.wq"), self.t("local.wk"), self.t("local.wv"),
            self.t("local.w1"), self.t("local.b1"), self.t("local.w2"), self.t("local.b2"),
            self.config.heads,
        )

    def cascade_repr(
        self,
        seqs: list[list[int]],
        training: bool = False,
        rng: np.random.Generator | None = None,
        global_x: Tensor | None = None,
    ) -> Tensor:
        """Fused representation Z (B x d) for each prefix sequence."""
        index, valid = pad_sequences(seqs, self.config.max_len)
        gx = self.global_embeddings() if global_x is None else global_x
        z_g = pool_global(gx, index, valid)
        z_l = pool_local(self.encode_local(index, valid), valid, self.config.local_pool)
        z = gate_fuse(z_g, z_l, self.t("fusion.w"), self.config.ln_eps)
        return ag.dropout(z, self.config.dropout, rng, training)

    def logits(self, seqs: list[list[int]], **kw) -> Tensor:
        z = self.cascade_repr(seqs, **kw)
        return ag.matmul(z, ag.transpose(self.t("local.x0")))

    def loss(
        self,
        seqs: list[list[int]],
        targets: list[int],
        masks: list[list[int]] | None = None,
        training: bool = False,
        rng: np.random.Generator | None = None,
        global_x: Tensor | None = None,
    ) -> Tensor:
        logits = self.logits(seqs, training=training, rng=rng, global_x=global_x)
        mask = activation_mask(masks if masks is not None else seqs, self.config.users)
        return ag.cross_entropy(logits, np.asarray(targets), mask=mask)

    def rank(self, seq: list[int], exclude: set[int] | None = None) -> ScoredRanking:
        z = self.cascade_repr([seq]).data[0]
        activated = set(seq) | (exclude or set())
        return score_users(z, self.t("local.x0").data, activated)


def new_model(cfg: ModelConfig, graph: HeterogeneousHypergraph, user_ids: list[str],
              rng: np.random.Generator) -> DiffusionModel:
    return DiffusionModel(ModelParams(cfg, init_params(cfg, rng), list(user_ids)), graph)


# --- model file ---------------------------------------------------------------
# layout: magic, u16 version, u32 d, M, L, n, heads, u32 meta length + JSON meta,
# u32 section count, then per section: u16 name length, name, u8 ndim,
# u32 dims, raw little-endian float64 values.

def save_model(params: ModelParams, path: str | Path) -> None:
    cfg = params.config
    meta = {k: v for k, v in asdict(cfg).items() if k not in ("users", "dim", "layers", "max_len", "heads")}
    meta["user_ids"] = params.user_ids
    meta_raw = json.dumps(meta, sort_keys=True).encode("utf-8")
    sections = {k: params.tensors[k].data for k in sorted(params.tensors)}
    if params.global_cache is not None:
        sections["cache.global_x"] = params.global_cache
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", FORMAT_VERSION)
    out += struct.pack("<5I", cfg.dim, cfg.users, cfg.layers, cfg.max_len, cfg.heads)
    out += struct.pack("<I", len(meta_raw)) + meta_raw
    out += struct.pack("<I", len(sections))
    for name, arr in sections.items():
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(bytes(out))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ModelFormatError("model file is truncated or corrupt")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_model(path: str | Path, expect: dict | None = None) -> ModelParams:
    """Read a model file; ``expect`` may pin header fields such as ``{"dim": 64}``."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    (version,) = r.unpack("<H")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    dim, users, layers, max_len, heads = r.unpack("<5I")
    (meta_len,) = r.unpack("<I")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except ValueError:
        raise ModelFormatError("model file is truncated or corrupt") from None
    user_ids = meta.pop("user_ids")
    cfg = ModelConfig(users=users, dim=dim, layers=layers, max_len=max_len, heads=heads, **meta)
    for key, want in (expect or {}).items():
        got = getattr(cfg, key)
        if got != want:
            raise ModelFormatError(f"model {key}={got} does not match expected {want}")
    (count,) = r.unpack("<I")
    tensors: dict[str, Tensor] = {}
    cache = None
    shapes = expected_shapes(cfg)
    for _ in range(count):
        (nlen,) = r.unpack("<H")
        name = r.take(nlen).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = tuple(r.unpack(f"<{ndim}I"))
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(r.take(8 * size), dtype="<f8").reshape(shape).astype(np.float64)
        if name == "cache.global_x":
            if shape != (users, dim):
                raise ModelFormatError(f"section {name} has shape {shape}")
            cache = arr
            continue
        if shapes.get(name) != shape:
            raise ModelFormatError(f"section {name} has shape {shape}, expected {shapes.get(name)}")
        tensors[name] = Tensor(arr, requires_grad=True)
    if r.pos != len(r.buf):
        raise ModelFormatError("trailing bytes after last section")
    missing = set(shapes) - set(tensors)
    if missing:
        raise ModelFormatError(f"model file lacks sections {sorted(missing)}")
    return ModelParams(cfg, tensors, user_ids, cache)
