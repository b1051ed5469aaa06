"""Dual-index conversational memory engine.

Long multi-session dialogues are segmented into per-character scenes
(coherent in time, place, and topic) that back an episodic index, while
an OpenIE phrase graph with personalized-PageRank ranking and a dense
fallback backs a semantic index. Query-time results from both paths are
fused by a stable promotion rerank and can drive answer generation.
"""

from .config import EngineConfig
from .engine import Engine
from .errors import SceneMemError

__version__ = "0.1.0"

__all__ = ["Engine", "EngineConfig", "SceneMemError", "__version__"]
