"""Teacher-forced next-user training with Adam and early stopping."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, DatasetSplit
from .diffusion.model import DiffusionModel, ModelConfig, ModelParams, new_model
from .graphs import UserIndex, build_hypergraph, train_members
from .optim import Adam

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    lr: float = 1e-3
    dim: int = 64
    epochs: int = 100
    patience: int = 10
    seed: int = 0
    layers: int = 2
    max_len: int = 200
    heads: int = 4
    dropout: float = 0.1
    local_pool: str = "last"

    def validate(self) -> None:
        if min(self.batch_size, self.dim, self.epochs, self.patience, self.max_len, self.heads) < 1:
            raise ValueError("training sizes must be positive")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.dim % self.heads:
            raise ValueError("embedding size must be divisible by head count")
        if self.layers < 1:
            raise ValueError("need at least one propagation layer")


@dataclass(frozen=True)
class TrainingExample:
    cascade_id: str
    prefix: tuple[int, ...]
    target: int


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_loss: float


def expand_cascades(ds: Dataset, cascade_ids, index: UserIndex) -> list[TrainingExample]:
    """One example per activated user: the publisher plus earlier activators predict it."""
    out = []
    for pid in cascade_ids:
        seq = [index[ds.posts[pid].publisher_id]] + [index[u] for u in ds.responders(pid)]
        for t in range(1, len(seq)):
            out.append(TrainingExample(pid, tuple(seq[:t]), seq[t]))
    return out


def _batches(examples: list[TrainingExample], size: int):
    for i in range(0, len(examples), size):
        yield examples[i:i + size]


def batch_loss(model: DiffusionModel, batch: list[TrainingExample], training: bool = False, rng=None):
    seqs = [list(e.prefix) for e in batch]
    return model.loss(seqs, [e.target for e in batch], training=training, rng=rng)


def evaluate_loss(model: DiffusionModel, examples: list[TrainingExample], batch_size: int) -> float:
    if not examples:
        return math.nan
    total = 0.0
    gx = model.global_embeddings()
    for batch in _batches(examples, batch_size):
        seqs = [list(e.prefix) for e in batch]
        loss = model.loss(seqs, [e.target for e in batch], global_x=gx)
        total += loss.item() * len(batch)
    return total / len(examples)


def train(ds: Dataset, split: DatasetSplit, cfg: TrainConfig) -> tuple[ModelParams, list[EpochRecord]]:
    """Fit the diffusion model on the training cascades.

    Hypergraphs come from training cascades only; validation loss picks
    the returned checkpoint.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    index = UserIndex(ds.user_ids())
    graph = build_hypergraph(train_members(ds, split.train), index)
    mcfg = ModelConfig(users=len(index), dim=cfg.dim, layers=cfg.layers, max_len=cfg.max_len,
                       heads=cfg.heads, dropout=cfg.dropout, local_pool=cfg.local_pool)
    model = new_model(mcfg, graph, index.ids, rng)
    opt = Adam(model.params.parameters(), lr=cfg.lr)

    train_ex = expand_cascades(ds, split.train, index)
    valid_ex = expand_cascades(ds, split.valid, index)
    if not train_ex:
        raise ValueError("no training examples")

    history: list[EpochRecord] = []
    best: ModelParams | None = None
    best_score = math.inf
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train_ex))
        shuffled = [train_ex[i] for i in order]
        total = 0.0
        for batch in _batches(shuffled, cfg.batch_size):
            loss = batch_loss(model, batch, training=True, rng=rng)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDiverged(f"loss became {value} at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += value * len(batch)
        train_loss = total / len(train_ex)
        valid_loss = evaluate_loss(model, valid_ex, cfg.batch_size)
        history.append(EpochRecord(epoch, train_loss, valid_loss))
        log.info("epoch %d train %.4f valid %.4f", epoch, train_loss, valid_loss)
        score = valid_loss if math.isfinite(valid_loss) else train_loss
        if score < best_score:
            best_score, stale = score, 0
            best = model.params.copy()
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    assert best is not None
    DiffusionModel(best, graph).refresh_cache()
    return best, history


def write_history(history: list[EpochRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "valid_loss"])
        for rec in history:
            w.writerow([rec.epoch, repr(rec.train_loss), repr(rec.valid_loss)])
