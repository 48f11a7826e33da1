"""Per-post hybrid simulation: core agents seed the cascade, the diffusion model extends it."""
from __future__ import annotations

import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents.backends import AgentDecision
from .agents.description import DescriptionBuilder
from .agents.runner import run_core_agents
from .data import Dataset, DatasetSplit
from .diffusion.model import DiffusionModel
from .diffusion.predictor import top_k
from .graphs import UserIndex

log = logging.getLogger(__name__)

SEED_SOURCES = ("llm", "first-hour")
ACTIVITY_RANK = {"high": 0, "medium": 1, "low": 2}


class PostSkipped(Exception):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    core_users: int = 100
    k: int = 10
    seed_source: str = "llm"
    seed: int = 0
    seed_order: str = "activity"
    first_hour: int = 3600

    def __post_init__(self):
        if self.seed_source not in SEED_SOURCES:
            raise ValueError(f"seed source must be one of {SEED_SOURCES}")
        if self.seed_order not in ("activity", "index"):
            raise ValueError("seed order must be 'activity' or 'index'")
        if self.core_users < 0 or self.k < 0:
            raise ValueError("core user count and k must be non-negative")


@dataclass
class SeedCascade:
    post_id: str
    users: list[str]
    source: str


@dataclass
class PredictionRecord:
    post_id: str
    predicted_users: list[str]
    seed_users: list[str]
    tail: list[tuple[str, float]]
    k: int
    seed_source: str

    def to_json(self) -> dict:
        return {
            "post_id": self.post_id,
            "predicted_users": self.predicted_users,
            "seed_users": self.seed_users,
            "tail": [{"user_id": u, "score": s} for u, s in self.tail],
            "k": self.k,
            "seed_source": self.seed_source,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PredictionRecord":
        return cls(obj["post_id"], list(obj["predicted_users"]), list(obj["seed_users"]),
                   [(t["user_id"], float(t["score"])) for t in obj["tail"]], int(obj["k"]), obj["seed_source"])


@dataclass
class SimulationResult:
    records: list[PredictionRecord] = field(default_factory=list)
    skips: list[dict] = field(default_factory=list)
    decisions: list[AgentDecision] = field(default_factory=list)


def post_rng(seed: int, post_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(post_id.encode("utf-8"))])


def select_core_users(
    post_id: str,
    truth: list[str],
    all_users: list[str],
    count: int,
    seed: int,
    publisher: str | None = None,
) -> list[str]:
    """All true activators plus uniformly sampled negatives, in index order.

    Raises :class:`PostSkipped` when the activators alone exceed ``count``.
    """
    if len(truth) > count:
        raise PostSkipped(f"{len(truth)} ground-truth users exceed {count} core users")
    positives = set(truth)
    pool = [u for u in all_users if u not in positives and u != publisher]
    need = min(count - len(positives), len(pool))
    picked = post_rng(seed, post_id).choice(len(pool), size=need, replace=False) if need else []
    chosen = positives | {pool[i] for i in picked}
    return [u for u in all_users if u in chosen]


def build_seed(
    post_id: str,
    publisher: str,
    decisions: list[AgentDecision],
    activity: dict[str, str],
    index: UserIndex,
    order: str = "activity",
) -> SeedCascade:
    """Publisher first, then the users whose agents said yes."""
    yes = [d.user_id for d in decisions if d.engaged and d.user_id != publisher]
    if order == "activity":
        yes.sort(key=lambda u: (ACTIVITY_RANK.get(activity.get(u, "low"), 2), index[u]))
    else:
        yes.sort(key=lambda u: index[u])
    return SeedCascade(post_id, [publisher, *dict.fromkeys(yes)], "llm")


def first_hour_seed(ds: Dataset, post_id: str, window: int = 3600) -> SeedCascade:
    post = ds.posts[post_id]
    cutoff = post.publish_time + window
    early = [a.user_id for a in ds.cascades[post_id].activations
             if a.time <= cutoff and a.user_id != post.publisher_id]
    return SeedCascade(post_id, [post.publisher_id, *early], "first-hour")


class Simulator:
    def __init__(self, ds: Dataset, split: DatasetSplit, model: DiffusionModel, backend,
                 config: SimulationConfig, builder: DescriptionBuilder | None = None):
        if list(model.params.user_ids) != ds.user_ids():
            raise ValueError("model was trained on a different user table")
        self.ds = ds
        self.split = split
        self.model = model
        self.backend = backend
        self.config = config
        self.index = UserIndex(ds.user_ids())
        self._builder = builder

    @property
    def builder(self) -> DescriptionBuilder:
        if self._builder is None:
            self._builder = DescriptionBuilder(self.ds, self.split)
        return self._builder

    def seed_for(self, post_id: str) -> tuple[SeedCascade, list[AgentDecision]]:
        cfg = self.config
        post = self.ds.posts[post_id]
        if cfg.seed_source == "first-hour":
            return first_hour_seed(self.ds, post_id, cfg.first_hour), []
        if cfg.core_users == 0:
            return SeedCascade(post_id, [post.publisher_id], "llm"), []
        core = select_core_users(post_id, self.ds.responders(post_id), self.ds.user_ids(),
                                 cfg.core_users, cfg.seed, post.publisher_id)
        decisions = run_core_agents(core, post, self.builder, self.backend)
        activity = {d.user_id: self.builder.activity_level(d.user_id) for d in decisions if d.engaged}
        return build_seed(post_id, post.publisher_id, decisions, activity, self.index, cfg.seed_order), decisions

    def simulate_post(self, post_id: str) -> tuple[PredictionRecord, list[AgentDecision]]:
        seed, decisions = self.seed_for(post_id)
        publisher = self.ds.posts[post_id].publisher_id
        ranking = self.model.rank([self.index[u] for u in seed.users], exclude={self.index[publisher]})
        tail = [(self.index.user(u), float(ranking.scores[u])) for u in top_k(ranking, self.config.k)]
        seeded = [u for u in seed.users if u != publisher]
        record = PredictionRecord(
            post_id, seeded + [u for u, _ in tail], list(seed.users), tail, self.config.k, seed.source,
        )
        return record, decisions

    def simulate_posts(self, post_ids) -> SimulationResult:
        out = SimulationResult()
        for pid in sorted(post_ids):
            try:
                record, decisions = self.simulate_post(pid)
            except PostSkipped as exc:
                out.skips.append({"post_id": pid, "reason": str(exc)})
                continue
            except Exception as exc:  # isolate per-post failures
                log.warning("post %s failed: %s", pid, exc)
                out.skips.append({"post_id": pid, "reason": f"error: {type(exc).__name__}: {exc}"})
                continue
            out.records.append(record)
            out.decisions.extend(decisions)
        return out

    def simulate_testset(self) -> SimulationResult:
        return self.simulate_posts(self.split.test)


def write_jsonl(rows, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def write_predictions(records: list[PredictionRecord], path: str | Path) -> None:
    write_jsonl((r.to_json() for r in records), path)


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [PredictionRecord.from_json(json.loads(line)) for line in fh if line.strip()]
