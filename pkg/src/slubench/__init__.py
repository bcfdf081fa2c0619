"""Evaluation engine and leaderboard for spoken-language-understanding benchmarks."""

__version__ = "0.1.0"
