"""Disk cache for the build-time provider capabilities.

Build annotation (participants, topics, summaries, triples) is cached by
content hash so a failed build resumes where it stopped and an unchanged
rebuild makes no provider calls. Answer generation and judging are
deliberately not cached: evaluation repeats are meant to re-sample them.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ..errors import PersistenceError
from .base import AnnotationProvider, Triple


class CachedAnnotationProvider:
    """Wraps a provider with a per-capability content-addressed cache."""

    def __init__(self, inner: AnnotationProvider, cache_dir: str | Path):
        self._inner = inner
        self._dir = Path(cache_dir)

    def _path(self, capability: str, payload: str) -> Path:
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        return self._dir / capability / f"{digest}.json"

    def _get(self, capability: str, payload: str) -> object | None:
        path = self._path(capability, payload)
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise PersistenceError(f"corrupt cache entry {path}: {exc}") from exc

    def _put(self, capability: str, payload: str, value: object) -> None:
        path = self._path(capability, payload)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(value, sort_keys=True), encoding="utf-8")

    def extract_participants(self, text: str) -> set[str]:
        cached = self._get("participants", text)
        if cached is not None:
            return set(cached)
        result = self._inner.extract_participants(text)
        self._put("participants", text, sorted(result))
        return result

    def extract_topic(self, text: str) -> str:
        cached = self._get("topic", text)
        if cached is not None:
            return str(cached)
        result = self._inner.extract_topic(text)
        self._put("topic", text, result)
        return result

    def summarize_scene(self, texts: list[str]) -> str:
        payload = json.dumps(list(texts))
        cached = self._get("summary", payload)
        if cached is not None:
            return str(cached)
        result = self._inner.summarize_scene(texts)
        self._put("summary", payload, result)
        return result

    def extract_triples(self, passage: str) -> list[Triple]:
        cached = self._get("triples", passage)
        if cached is not None:
            return [Triple(*row) for row in cached]
        result = self._inner.extract_triples(passage)
        self._put("triples", passage, [list(t) for t in result])
        return result

    def generate_answer(self, prompt: str) -> str:
        return self._inner.generate_answer(prompt)

    def judge(self, prompt: str) -> str:
        return self._inner.judge(prompt)
