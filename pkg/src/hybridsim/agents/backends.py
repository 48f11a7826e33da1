"""Decision backends: a deterministic rubric mock and a chat-completion HTTP client."""
from __future__ import annotations

import ast
import json
import logging
import os
import time
from dataclasses import dataclass, field

import httpx

from ..data import Post
from ..topics import Topic, detect_topics, mentions, topic_table
from .description import UserDescription
from .prompt import render_prompt

log = logging.getLogger(__name__)

NOVEL_TAG = "#new"
TREND_TAG = "#trending"


@dataclass(frozen=True)
class AgentDecision:
    user_id: str
    post_id: str
    decision: str
    reasoning: str
    raw: str
    parse_status: str

    def __post_init__(self):
        if self.parse_status == "failed" and self.decision != "no":
            raise ValueError("failed parses must decide no")

    @property
    def engaged(self) -> bool:
        return self.decision == "yes"

    def to_json(self) -> dict:
        return {"post_id": self.post_id, "user_id": self.user_id, "decision": self.decision,
                "parse_status": self.parse_status, "reasoning": self.reasoning}


def failed_decision(user_id: str, post_id: str, reason: str, raw: str = "") -> AgentDecision:
    return AgentDecision(user_id, post_id, "no", reason, raw, "failed")


# --- response parsing ----------------------------------------------------------

def _first_object(text: str) -> str | None:
    start = text.find("{")
    while start != -1:
        depth = 0
        for i in range(start, len(text)):
            if text[i] == "{":
                depth += 1
            elif text[i] == "}":
                depth -= 1
                if depth == 0:
                    return text[start:i + 1]
        start = text.find("{", start + 1)
    return None


def _load_object(text: str):
    try:
        return json.loads(text)
    except ValueError:
        pass
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return None


def parse_response(raw: str) -> tuple[str, str, str]:
    """Return ``(decision, reasoning, parse_status)`` for a model reply.

    A reply that is not a bare JSON object gets one repair attempt: the
    first ``{...}`` block is extracted and parsed. Anything else fails
    closed to ``no``.
    """
    obj = _load_object(raw.strip())
    status = "ok"
    if not isinstance(obj, dict):
        block = _first_object(raw)
        obj = _load_object(block) if block else None
        status = "repaired"
    if not isinstance(obj, dict):
        return "no", "", "failed"
    decision = str(obj.get("decision", "")).strip().lower()
    if decision not in ("yes", "no"):
        return "no", str(obj.get("reasoning", "")), "failed"
    return decision, str(obj.get("reasoning", "")), status


# --- mock -------------------------------------------------------------------------

@dataclass(frozen=True)
class RubricConfig:
    community: int = 2
    activity: int = 1
    gratification: int = 2
    topic_fit: int = 2
    focus: int = 2
    appeal: int = 1
    personality: int = 1
    history: int = 2
    novelty: int = 1
    cross_domain: int = 1
    trend: int = 1
    strong: int = 8
    moderate: int = 5
    weak: int = 3
    inactive_penalty: int = 2
    topic_confidence: float = 0.5
    min_content_length: int = 40
    topics: list[Topic] = field(default_factory=lambda: topic_table(8))


def rubric_points(desc: UserDescription, post: Post, cfg: RubricConfig) -> dict[str, int]:
    """Stage-2 factor points the mock awards to one (user, post) pair."""
    text = post.content
    post_topics = set(detect_topics(text, cfg.topics))
    terms = {t[0]: [t[0], *t[1]] for t in cfg.topics}
    focus = [f for f in desc.focus if f.confidence > 0]
    points = {}
    if post.publisher_id in desc.community_users:
        points["community"] = cfg.community
    if desc.activity_level in ("medium", "high"):
        points["activity"] = cfg.activity
    if any(mentions(text, terms.get(f.topic, [f.topic])) for f in focus):
        points["gratification"] = cfg.gratification
    if any(f.topic in post_topics and f.confidence >= cfg.topic_confidence for f in focus):
        points["topic_fit"] = cfg.topic_fit
    if focus and max(focus, key=lambda f: f.confidence).topic in post_topics:
        points["focus"] = cfg.focus
    if len(text) >= cfg.min_content_length:
        points["appeal"] = cfg.appeal
    traits = [w.strip() for w in (desc.traits or "").split(",") if w.strip()]
    if traits and mentions(text, traits):
        points["personality"] = cfg.personality
    seen = set()
    for rec in desc.comment_history:
        seen.update(detect_topics(rec.post_content, cfg.topics))
    for rec in desc.post_history:
        seen.update(detect_topics(rec.content, cfg.topics))
    if post_topics & seen:
        points["history"] = cfg.history
    if NOVEL_TAG in text:
        points["novelty"] = cfg.novelty
    if len(post_topics) >= 2:
        points["cross_domain"] = cfg.cross_domain
    if TREND_TAG in text:
        points["trend"] = cfg.trend
    return points


def rubric_decision(score: int, activity_level: str, cfg: RubricConfig) -> str:
    effective = score - (cfg.inactive_penalty if activity_level == "low" else 0)
    if effective >= cfg.moderate:
        return "yes"
    if effective >= cfg.weak and activity_level != "low":
        return "yes"
    return "no"


class MockBackend:
    """Offline stand-in that scores the Stage-2 rubric deterministically."""

    kind = "mock"

    def __init__(self, rubric: RubricConfig | None = None):
        self.rubric = rubric or RubricConfig()

    def decide(self, desc: UserDescription, post: Post) -> AgentDecision:
        points = rubric_points(desc, post, self.rubric)
        score = sum(points.values())
        decision = rubric_decision(score, desc.activity_level, self.rubric)
        detail = ", ".join(f"{k}+{v}" for k, v in points.items()) or "nothing"
        reasoning = f"score {score} ({detail}), activity {desc.activity_level}"
        raw = json.dumps({"decision": decision, "reasoning": reasoning})
        return AgentDecision(desc.user_id, post.post_id, decision, reasoning, raw, "ok")


# --- http -------------------------------------------------------------------------

@dataclass(frozen=True)
class HttpConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    max_concurrency: int = 8
    backoff: float = 1.0

    def __post_init__(self):
        if self.max_retries < 0 or self.max_concurrency < 1:
            raise ValueError("need max_retries >= 0 and max_concurrency >= 1")


class BackendError(RuntimeError):
    pass


class HttpBackend:
    kind = "http"

    def __init__(self, config: HttpConfig | None = None, transport: httpx.BaseTransport | None = None):
        self.config = config or HttpConfig()
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self.client = httpx.Client(timeout=self.config.timeout, headers=headers, transport=transport)

    @property
    def max_concurrency(self) -> int:
        return self.config.max_concurrency

    def request_body(self, prompt: str) -> dict:
        return {"model": self.config.model, "messages": [{"role": "user", "content": prompt}], "temperature": 0}

    def complete(self, prompt: str) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        last: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt and self.config.backoff:
                time.sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                resp = self.client.post(url, json=self.request_body(prompt))
                if resp.status_code == 429 or resp.status_code >= 500:
                    last = BackendError(f"HTTP {resp.status_code}")
                    continue
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                last = exc
                log.debug("attempt %d failed: %s", attempt + 1, exc)
        raise BackendError(f"request failed after {self.config.max_retries + 1} attempts: {last}")

    def decide(self, desc: UserDescription, post: Post) -> AgentDecision:
        try:
            raw = self.complete(render_prompt(desc, post))
        except BackendError as exc:
            return failed_decision(desc.user_id, post.post_id, str(exc))
        decision, reasoning, status = parse_response(raw)
        return AgentDecision(desc.user_id, post.post_id, decision, reasoning, raw, status)
