"""Hybrid LLM-agent and diffusion-model simulator for information cascades."""

__version__ = "0.1.0"
