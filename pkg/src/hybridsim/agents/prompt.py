"""Agent prompt rendering."""
from __future__ import annotations

from datetime import datetime, timezone

from ..data import Post
from .description import UserDescription

TEMPLATE = """Act as a social media user agent. Based on the provided user profile and post content, determine whether to repost the post using a balanced decision framework.

=== OUTPUT REQUIREMENTS ===
Return JSON format ONLY with exactly two fields:
{{
    'decision': 'yes' or 'no',
    "reasoning": "xxxx"
}}
The JSON response should conclude your decision and reasoning. And Do not include any other text or comments.

=== DECISION STRATEGY ===
- Consider edge cases: Even if a post doesn't perfectly match, consider if it could be interesting
- Balance quality and quantity: Aim for meaningful recommendations while avoiding empty results
- Use relative scoring: Compare posts within the user's context rather than absolute standards

=== MULTI-STAGE DECISION FRAMEWORK ===
STAGE 1: INITIAL ASSESSMENT (Quick Filter)
- If the post is clearly irrelevant or inappropriate: "no"
- If the post has any potential relevance: proceed to Stage 2

STAGE 2: COMPREHENSIVE EVALUATION
Evaluate using these weighted factors:
1. ENGAGEMENT POTENTIAL (Weight: 25%):
- Social relevance: Posts from same community users (+2 points)
- Activity alignment: Active users more likely to repost (+1 point)
- Gratification match: Posts satisfying user needs (+2 points)
2. CONTENT ALIGNMENT (Weight: 35%):
- Topic fit: Alignment with user interests (+2 points)
- Focus congruence: Match with opinion focus (+2 points)
- Content appeal: Interesting and engaging (+1 point)
3. PERSONALIZATION FACTORS (Weight: 25%):
- Personality match: Style fits user traits (+1 points)
- Historical patterns: Similar posts were reposted (+2 points)
4. DIVERSITY & DISCOVERY (Weight: 15%):
- Novel content: Something new but relevant (+1 point)
- Cross-domain appeal: Broader interest potential (+1 point)
- Trend relevance: Current or trending topics (+1 point)

STAGE 3: DECISION LOGIC
- Score 8+ points: Strong "yes"
- Score 5-7 points: Moderate "yes" (lean towards yes for diversity)
- Score 3-4 points: Weak "yes" (consider user context)
- Score 0-2 points: "no"

ADAPTIVE THRESHOLDS:
- Active users: Standard threshold
- Inactive users: Higher threshold, more selective

Start your analysis now:

=== USER PROFILE ===
{user_profile}

=== USER HISTORY ===
{user_history}

=== POST CONTENT ===
{current_post}

Begin analysis:
"""

MAX_COMMUNITY_USERS = 10


def format_time(ts: int) -> str:
    return datetime.fromtimestamp(int(ts), tz=timezone.utc).strftime("%Y-%m-%d %H:%M:%S")


def render_profile(desc: UserDescription) -> str:
    peers = desc.community_users[:MAX_COMMUNITY_USERS]
    focus = ", ".join(f"{f.topic} ({f.confidence:.2f})" for f in desc.focus)
    return "\n".join([
        f"- Social connections: {', '.join(peers) if peers else 'none'}",
        f"- Personality traits: {desc.traits or 'unknown'}",
        f"- Opinion focus category: {focus or 'none'}",
        f"- Activity level: {desc.activity_level}",
    ])


def render_history(desc: UserDescription) -> str:
    lines = ["Comment history:"]
    for k, rec in enumerate(desc.comment_history, start=1):
        lines += [
            f"Record {k}:",
            f"- Original post content: {rec.post_content}",
            f"- Original post time: {format_time(rec.post_time)}",
            f"- Comment content: {rec.comment or '(no text)'}",
            f"- Comment time: {format_time(rec.comment_time)}",
        ]
    lines.append("Post history:")
    for k, rec in enumerate(desc.post_history, start=1):
        lines += [
            f"Record {k}:",
            f"- Post content: {rec.content}",
            f"- Post time: {format_time(rec.time)}",
        ]
    return "\n".join(lines)


def render_prompt(desc: UserDescription, post: Post) -> str:
    return TEMPLATE.format(
        user_profile=render_profile(desc),
        user_history=render_history(desc),
        current_post=post.content,
    )
