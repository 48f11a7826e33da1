"""Dataset model and the on-disk JSONL format.

A dataset directory holds ``users.jsonl``, ``posts.jsonl``,
``cascades.jsonl`` and optionally ``splits.json``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

ACTIONS = ("repost", "comment", "answer")
ACTIVITY_LEVELS = ("low", "medium", "high")
MIN_CASCADE_LEN = 3


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Focus:
    topic: str
    confidence: float


@dataclass
class Profile:
    community: int | None = None
    traits: str | None = None
    focus: list[Focus] = field(default_factory=list)
    activity_level: str | None = None


@dataclass(frozen=True)
class Interaction:
    post_id: str
    action: str
    time: int
    text: str | None = None


@dataclass
class UserRecord:
    user_id: str
    profile: Profile = field(default_factory=Profile)
    publish_history: list[str] = field(default_factory=list)
    interaction_history: list[Interaction] = field(default_factory=list)


@dataclass(frozen=True)
class Post:
    post_id: str
    content: str
    publisher_id: str
    publish_time: int


@dataclass(frozen=True)
class Activation:
    user_id: str
    action: str
    time: int
    text: str | None = None


@dataclass
class Cascade:
    post_id: str
    activations: list[Activation]

    def user_ids(self) -> list[str]:
        return [a.user_id for a in self.activations]

    def __len__(self) -> int:
        return len(self.activations)


@dataclass
class DatasetSplit:
    train: list[str]
    valid: list[str]
    test: list[str]

    def to_json(self) -> dict:
        return {"train": list(self.train), "valid": list(self.valid), "test": list(self.test)}


@dataclass
class Dataset:
    users: dict[str, UserRecord]
    posts: dict[str, Post]
    cascades: dict[str, Cascade]

    def user_ids(self) -> list[str]:
        return list(self.users)

    def responders(self, post_id: str) -> list[str]:
        """Activated users of a post in time order, publisher excluded."""
        publisher = self.posts[post_id].publisher_id
        return [u for u in self.cascades[post_id].user_ids() if u != publisher]


@dataclass(frozen=True)
class DatasetStats:
    n_info: int
    n_users: int
    n_interactions: int
    avg_len: float
    sparsity: float

    def row(self) -> str:
        return (f"#Info {self.n_info} | #User {self.n_users} | #Inter {self.n_interactions} | "
                f"Avg.Len {self.avg_len:.2f} | Spar {100 * self.sparsity:.2f}%")


# --- reading ----------------------------------------------------------------

def _read_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    if not path.exists():
        raise DatasetError(f"missing {path.name}")
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("not an object")
            except ValueError as exc:
                raise DatasetError(f"{path.name}:{lineno}: malformed line ({exc})") from None
            yield lineno, obj


def _field(obj: dict, key: str, path: str, lineno: int):
    try:
        return obj[key]
    except KeyError:
        raise DatasetError(f"{path}:{lineno}: missing field {key!r}") from None


def _parse_profile(raw: dict | None) -> Profile:
    raw = raw or {}
    focus = [Focus(str(f["topic"]), float(f["confidence"])) for f in raw.get("focus") or []]
    for f in focus:
        if not 0.0 <= f.confidence <= 1.0:
            raise DatasetError(f"focus confidence out of range: {f}")
    return Profile(
        community=raw.get("community"),
        traits=raw.get("traits"),
        focus=focus,
        activity_level=raw.get("activity_level"),
    )


def load_dataset(directory: str | Path) -> Dataset:
    """Load and cross-reference a dataset directory.

    Repeated interactions of one user with one post collapse to the
    earliest; cascades left with fewer than three activations are dropped.
    """
    directory = Path(directory)
    users: dict[str, UserRecord] = {}
    for lineno, obj in _read_jsonl(directory / "users.jsonl"):
        uid = str(_field(obj, "user_id", "users.jsonl", lineno))
        if uid in users:
            raise DatasetError(f"users.jsonl:{lineno}: duplicate user {uid}")
        try:
            users[uid] = UserRecord(uid, _parse_profile(obj.get("profile")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"users.jsonl:{lineno}: bad profile ({exc})") from None

    posts: dict[str, Post] = {}
    for lineno, obj in _read_jsonl(directory / "posts.jsonl"):
        post = Post(
            str(_field(obj, "post_id", "posts.jsonl", lineno)),
            str(_field(obj, "content", "posts.jsonl", lineno)),
            str(_field(obj, "publisher_id", "posts.jsonl", lineno)),
            int(_field(obj, "publish_time", "posts.jsonl", lineno)),
        )
        if post.publisher_id not in users:
            raise DatasetError(f"posts.jsonl:{lineno}: unknown publisher {post.publisher_id}")
        posts[post.post_id] = post

    cascades: dict[str, Cascade] = {}
    for lineno, obj in _read_jsonl(directory / "cascades.jsonl"):
        pid = str(_field(obj, "post_id", "cascades.jsonl", lineno))
        if pid not in posts:
            raise DatasetError(f"cascades.jsonl:{lineno}: unknown post {pid}")
        acts = []
        for raw in _field(obj, "activations", "cascades.jsonl", lineno):
            try:
                act = Activation(str(raw["user_id"]), str(raw["action"]), int(raw["time"]), raw.get("text"))
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"cascades.jsonl:{lineno}: bad activation ({exc})") from None
            if act.user_id not in users:
                raise DatasetError(f"cascades.jsonl:{lineno}: unknown user {act.user_id}")
            if act.action not in ACTIONS:
                raise DatasetError(f"cascades.jsonl:{lineno}: unknown action {act.action!r}")
            if act.time < posts[pid].publish_time:
                raise DatasetError(f"cascades.jsonl:{lineno}: activation of {act.user_id} precedes post {pid}")
            acts.append(act)
        acts.sort(key=lambda a: a.time)
        seen: set[str] = set()
        deduped = []
        for a in acts:
            if a.user_id not in seen:
                seen.add(a.user_id)
                deduped.append(a)
        if len(deduped) >= MIN_CASCADE_LEN:
            cascades[pid] = Cascade(pid, deduped)

    ds = Dataset(users, posts, cascades)
    _attach_histories(ds)
    return ds


def _attach_histories(ds: Dataset) -> None:
    for rec in ds.users.values():
        rec.publish_history = []
        rec.interaction_history = []
    for post in sorted(ds.posts.values(), key=lambda p: (p.publish_time, p.post_id)):
        ds.users[post.publisher_id].publish_history.append(post.post_id)
    for cas in ds.cascades.values():
        for a in cas.activations:
            ds.users[a.user_id].interaction_history.append(Interaction(cas.post_id, a.action, a.time, a.text))
    for rec in ds.users.values():
        rec.interaction_history.sort(key=lambda i: (i.time, i.post_id))


def load_split(directory: str | Path) -> DatasetSplit:
    path = Path(directory) / "splits.json"
    if not path.exists():
        raise DatasetError("missing splits.json")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        return DatasetSplit(list(raw["train"]), list(raw["valid"]), list(raw["test"]))
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetError(f"splits.json: malformed ({exc})") from None


# --- writing ----------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def profile_to_json(p: Profile) -> dict:
    return {
        "community": p.community,
        "traits": p.traits,
        "focus": [{"topic": f.topic, "confidence": f.confidence} for f in p.focus],
        "activity_level": p.activity_level,
    }


def write_dataset(ds: Dataset, directory: str | Path, split: DatasetSplit | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with (directory / "users.jsonl").open("w", encoding="utf-8") as fh:
        for rec in ds.users.values():
            fh.write(_dump({"user_id": rec.user_id, "profile": profile_to_json(rec.profile)}) + "\n")
    with (directory / "posts.jsonl").open("w", encoding="utf-8") as fh:
        for p in ds.posts.values():
            fh.write(_dump({"post_id": p.post_id, "content": p.content,
                            "publisher_id": p.publisher_id, "publish_time": p.publish_time}) + "\n")
    with (directory / "cascades.jsonl").open("w", encoding="utf-8") as fh:
        for c in ds.cascades.values():
            acts = [{"user_id": a.user_id, "action": a.action, "time": a.time, "text": a.text}
                    for a in c.activations]
            fh.write(_dump({"post_id": c.post_id, "activations": acts}) + "\n")
    if split is not None:
        write_split(split, directory)


def write_split(split: DatasetSplit, directory: str | Path) -> None:
    (Path(directory) / "splits.json").write_text(_dump(split.to_json()) + "\n", encoding="utf-8")


# --- splitting and statistics -----------------------------------------------

def split_dataset(cascade_ids, seed: int) -> DatasetSplit:
    """Random 8:1:1 partition by cascade; the rounding remainder goes to test."""
    ids = sorted(cascade_ids)
    if len(ids) < 10:
        raise DatasetError(f"need at least 10 cascades to split, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    n_train = math.floor(0.8 * len(ids))
    n_valid = math.floor(0.1 * len(ids))
    return DatasetSplit(shuffled[:n_train], shuffled[n_train:n_train + n_valid], shuffled[n_train + n_valid:])


def stats_from_counts(n_info: int, n_users: int, n_interactions: int) -> DatasetStats:
    avg = n_interactions / n_info if n_info else 0.0
    denom = n_users * n_info
    sparsity = 1.0 - n_interactions / denom if denom else 0.0
    return DatasetStats(n_info, n_users, n_interactions, avg, sparsity)


def dataset_stats(ds: Dataset) -> DatasetStats:
    n_inter = sum(len(c) for c in ds.cascades.values())
    return stats_from_counts(len(ds.cascades), len(ds.users), n_inter)


def activity_levels(counts: dict[str, int]) -> dict[str, str]:
    """Bucket interaction counts into low/medium/high by terciles."""
    if not counts:
        return {}
    values = np.array(list(counts.values()), dtype=np.float64)
    q1, q2 = np.quantile(values, [1 / 3, 2 / 3])
    out = {}
    for uid, c in counts.items():
        out[uid] = "low" if c <= q1 else ("medium" if c <= q2 else "high")
    return out
