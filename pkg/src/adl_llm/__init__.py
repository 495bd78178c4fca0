"""LLM-based recognition of activities of daily living from smart-home sensor logs."""

__version__ = "0.1.0"
