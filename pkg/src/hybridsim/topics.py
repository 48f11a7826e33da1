"""Topic vocabulary shared by the synthetic generator and the mock agent."""
from __future__ import annotations

import re

Topic = tuple[str, list[str]]

BASE_TOPICS: list[Topic] = [
    ("conflict", ["ceasefire", "border", "military", "refugees"]),
    ("food safety", ["starch", "additive", "inspection", "recall"]),
    ("technology", ["smartphone", "chip", "software", "robotics"]),
    ("sports", ["match", "league", "coach", "stadium"]),
    ("entertainment", ["film", "concert", "celebrity", "drama"]),
    ("economy", ["market", "inflation", "stocks", "salary"]),
    ("health", ["vaccine", "hospital", "diet", "clinic"]),
    ("education", ["exam", "university", "teacher", "campus"]),
]

TRAIT_PHRASES = {
    "high": "outspoken, energetic, opinionated",
    "medium": "curious, balanced, sociable",
    "low": "reserved, observant, cautious",
}


def topic_table(n: int) -> list[Topic]:
    """The first ``n`` topics; extra topics get generated names."""
    out = list(BASE_TOPICS[:n])
    for c in range(len(out), n):
        out.append((f"topic{c}", [f"t{c}k{j}" for j in range(4)]))
    return out


def _words(text: str) -> set[str]:
    return set(re.findall(r"[\w#]+", text.lower()))


def topic_terms(topic: Topic) -> list[str]:
    return [topic[0].lower(), *[k.lower() for k in topic[1]]]


def mentions(text: str, terms) -> bool:
    words = _words(text)
    low = text.lower()
    for term in terms:
        term = term.lower()
        if (" " in term and term in low) or term in words:
            return True
    return False


def detect_topics(text: str, topics: list[Topic]) -> list[str]:
    """Names of topics whose name or keywords occur in ``text``, in table order."""
    return [t[0] for t in topics if mentions(text, topic_terms(t))]
