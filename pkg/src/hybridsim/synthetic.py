"""Seeded synthetic corpora with planted community structure."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import (
    MIN_CASCADE_LEN,
    Activation,
    Cascade,
    Dataset,
    DatasetSplit,
    Focus,
    Post,
    Profile,
    UserRecord,
    activity_levels,
    split_dataset,
    write_dataset,
)
from .topics import TRAIT_PHRASES, topic_table

TONES = ["outspoken", "energetic", "curious", "balanced", "reserved", "cautious"]
TREND_TAG = "#trending"
NOVEL_TAG = "#new"
EPOCH = 1_600_000_000


@dataclass(frozen=True)
class SyntheticConfig:
    users: int = 500
    posts: int = 300
    communities: int = 5
    p_in: float = 0.12
    p_out: float = 0.004
    seed: int = 0
    mean_delay: float = 7200.0
    flag_rate: float = 0.1

    def validate(self) -> None:
        if not self.users >= self.communities >= 1:
            raise ValueError("need users >= communities >= 1")
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out < p_in <= 1")
        if self.posts < 1:
            raise ValueError("need at least one post")


@dataclass
class SyntheticCorpus:
    dataset: Dataset
    split: DatasetSplit
    user_community: dict[str, int]
    post_community: dict[str, int]
    raw_lengths: list[int]


def generate(cfg: SyntheticConfig) -> SyntheticCorpus:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    topics = topic_table(cfg.communities)
    user_ids = [f"u{i:04d}" for i in range(cfg.users)]
    comm = np.arange(cfg.users) % cfg.communities
    comm = comm[rng.permutation(cfg.users)]
    members = [np.flatnonzero(comm == c) for c in range(cfg.communities)]

    posts: dict[str, Post] = {}
    cascades: dict[str, Cascade] = {}
    post_comm: dict[str, int] = {}
    raw_lengths = []
    for j in range(cfg.posts):
        pid = f"p{j:04d}"
        c = int(rng.integers(cfg.communities))
        publisher = int(rng.choice(members[c]))
        t0 = EPOCH + j * 1800 + int(rng.integers(900))
        posts[pid] = Post(pid, _content(rng, topics, c, cfg.flag_rate), user_ids[publisher], t0)
        post_comm[pid] = c

        prob = np.where(comm == c, cfg.p_in, cfg.p_out)
        hit = rng.random(cfg.users) < prob
        hit[publisher] = False
        who = np.flatnonzero(hit)
        delays = np.sort(np.floor(rng.exponential(cfg.mean_delay, size=who.size)).astype(np.int64))
        who = who[rng.permutation(who.size)]
        acts = []
        for u, dt in zip(who, delays):
            action = "repost" if rng.random() < 0.5 else "comment"
            text = None
            if action == "comment":
                text = f"{rng.choice(topics[c][1])} matters"
            acts.append(Activation(user_ids[u], action, int(t0 + dt), text))
        raw_lengths.append(len(acts))
        cascades[pid] = Cascade(pid, acts)

    kept = [pid for pid, cas in cascades.items() if len(cas) >= MIN_CASCADE_LEN]
    split = split_dataset(kept, cfg.seed)

    # profiles only see training cascades
    position = {uid: i for i, uid in enumerate(user_ids)}
    counts: Counter[str] = Counter()
    on_topic: Counter[str] = Counter()
    for pid in split.train:
        for a in cascades[pid].activations:
            counts[a.user_id] += 1
            if post_comm[pid] == int(comm[position[a.user_id]]):
                on_topic[a.user_id] += 1
    levels = activity_levels({u: counts.get(u, 0) for u in user_ids})
    users = {}
    for i, uid in enumerate(user_ids):
        n = counts.get(uid, 0)
        share = on_topic.get(uid, 0) / n if n else 0.0
        level = levels[uid]
        users[uid] = UserRecord(uid, Profile(
            community=int(comm[i]),
            traits=TRAIT_PHRASES[level],
            focus=[Focus(topics[int(comm[i])][0], round(share, 4))],
            activity_level=level,
        ))
    ds = Dataset(users, posts, cascades)
    return SyntheticCorpus(
        ds, split,
        {uid: int(comm[i]) for i, uid in enumerate(user_ids)},
        post_comm, raw_lengths,
    )


def _content(rng: np.random.Generator, topics, c: int, flag_rate: float) -> str:
    name, words = topics[c]
    picked = list(rng.choice(words, size=2, replace=False))
    parts = [f"News on {name}:", *picked]
    if len(topics) > 1 and rng.random() < flag_rate:
        other = int(rng.integers(len(topics) - 1))
        other += other >= c
        parts.append(str(rng.choice(topics[other][1])))
    parts.append(f"({rng.choice(TONES)} take)")
    if rng.random() < flag_rate:
        parts.append(NOVEL_TAG)
    if rng.random() < flag_rate:
        parts.append(TREND_TAG)
    return " ".join(parts)


def generate_to_disk(cfg: SyntheticConfig, directory: str | Path) -> SyntheticCorpus:
    corpus = generate(cfg)
    write_dataset(corpus.dataset, directory, corpus.split)
    return corpus
