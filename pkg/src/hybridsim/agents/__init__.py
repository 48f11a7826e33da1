from .backends import (
    AgentDecision,
    HttpBackend,
    HttpConfig,
    MockBackend,
    RubricConfig,
    parse_response,
    rubric_decision,
    rubric_points,
)
from .description import DescriptionBuilder, UserDescription
from .prompt import TEMPLATE, render_prompt
from .runner import run_core_agents, write_decisions

__all__ = [
    "AgentDecision",
    "DescriptionBuilder",
    "HttpBackend",
    "HttpConfig",
    "MockBackend",
    "RubricConfig",
    "TEMPLATE",
    "UserDescription",
    "parse_response",
    "render_prompt",
    "rubric_decision",
    "rubric_points",
    "run_core_agents",
    "write_decisions",
]
