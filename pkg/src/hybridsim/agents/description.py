"""User descriptions built from training-split history only."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..data import Dataset, DatasetSplit, Focus, activity_levels
from ..graphs import UserIndex, projection_graph, train_members
from ..louvain import CommunityAssignment, louvain
from ..topics import TRAIT_PHRASES, Topic, detect_topics, topic_table

HISTORY_CAP = 20
FOCUS_TOPICS = 3


@dataclass(frozen=True)
class CommentRecord:
    post_id: str
    post_content: str
    post_time: int
    comment: str | None
    comment_time: int


@dataclass(frozen=True)
class PostRecord:
    post_id: str
    content: str
    time: int


@dataclass
class UserDescription:
    user_id: str
    community: int | None
    community_users: list[str]
    traits: str
    focus: list[Focus]
    activity_level: str
    comment_history: list[CommentRecord] = field(default_factory=list)
    post_history: list[PostRecord] = field(default_factory=list)


def summarize_focus(contents: list[str], topics: list[Topic], limit: int = FOCUS_TOPICS) -> list[Focus]:
    """Topics of the posts a user engaged with, scored by relative frequency."""
    if not contents:
        return []
    hits: Counter[str] = Counter()
    for text in contents:
        hits.update(detect_topics(text, topics))
    ranked = sorted(hits.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]
    return [Focus(t, round(n / len(contents), 4)) for t, n in ranked]


class DescriptionBuilder:
    """Builds agent descriptions for any user from the training cascades.

    Communities come from Louvain on the co-interaction projection of the
    training cascades. Profile fields present in the user table win; absent
    ones are filled by a deterministic summarizer.
    """

    def __init__(
        self,
        ds: Dataset,
        split: DatasetSplit,
        topics: list[Topic] | None = None,
        history_cap: int = HISTORY_CAP,
        communities: CommunityAssignment | None = None,
    ):
        self.ds = ds
        self.train = set(split.train)
        self.topics = topics if topics is not None else topic_table(8)
        self.history_cap = history_cap
        self.index = UserIndex(ds.user_ids())
        if communities is None:
            members = train_members(ds, sorted(self.train))
            communities = louvain(len(self.index), projection_graph(members, self.index))
        self.communities = communities
        self._members = communities.members()
        counts = {u: 0 for u in ds.users}
        for pid in self.train:
            for a in ds.cascades[pid].activations:
                counts[a.user_id] += 1
        self.train_counts = counts
        self.levels = activity_levels(counts)

    def activity_level(self, user_id: str) -> str:
        if self.train_counts[user_id] == 0:
            return "low"
        return self.ds.users[user_id].profile.activity_level or self.levels[user_id]

    def community_of(self, user_id: str) -> int:
        return self.communities.labels[self.index[user_id]]

    def build(self, user_id: str) -> UserDescription:
        if user_id not in self.ds.users:
            raise KeyError(f"unknown user {user_id}")
        rec = self.ds.users[user_id]
        ds = self.ds
        comments = []
        for it in rec.interaction_history:
            if it.post_id not in self.train:
                continue
            post = ds.posts[it.post_id]
            comments.append(CommentRecord(it.post_id, post.content, post.publish_time, it.text, it.time))
        posts = [
            PostRecord(pid, ds.posts[pid].content, ds.posts[pid].publish_time)
            for pid in rec.publish_history if pid in self.train
        ]
        comments = comments[-self.history_cap:]
        posts = posts[-self.history_cap:]

        level = self.activity_level(user_id)
        focus = rec.profile.focus or summarize_focus([c.post_content for c in comments], self.topics)
        traits = rec.profile.traits or TRAIT_PHRASES[level]
        community = self.community_of(user_id)
        peers = [self.index.user(i) for i in self._members[community] if self.index.user(i) != user_id]
        return UserDescription(user_id, community, peers, traits, list(focus), level, comments, posts)
