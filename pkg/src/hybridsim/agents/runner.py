"""Fan one post out to a set of core-user agents."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ..data import Post
from .backends import AgentDecision, failed_decision
from .description import DescriptionBuilder

log = logging.getLogger(__name__)


def _decide_one(builder: DescriptionBuilder, backend, user_id: str, post: Post) -> AgentDecision:
    try:
        return backend.decide(builder.build(user_id), post)
    except Exception as exc:  # one agent must never sink the batch
        log.warning("agent %s failed on %s: %s", user_id, post.post_id, exc)
        return failed_decision(user_id, post.post_id, f"{type(exc).__name__}: {exc}")


def run_core_agents(core_users: list[str], post: Post, builder: DescriptionBuilder, backend) -> list[AgentDecision]:
    """One decision per core user, ordered by user index."""
    users = sorted(set(core_users), key=lambda u: builder.index[u])
    workers = getattr(backend, "max_concurrency", 1)
    if workers <= 1 or len(users) <= 1:
        return [_decide_one(builder, backend, u, post) for u in users]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda u: _decide_one(builder, backend, u, post), users))


def write_decisions(decisions: list[AgentDecision], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in decisions:
            fh.write(json.dumps(d.to_json(), ensure_ascii=False) + "\n")
