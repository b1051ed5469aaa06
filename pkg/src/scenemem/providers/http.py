"""HTTP-backed provider speaking the chat-completions wire format.

Each capability sends one user message and reads back
choices[0].message.content. Transport failures and 429/5xx responses are
retried with exponential backoff; other HTTP errors and malformed
response bodies fail immediately with a typed error. A semaphore bounds
the number of in-flight requests. Requests and response sizes are logged
at debug level; payload contents are never logged above debug.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass

import httpx

from ..errors import ProviderError, ProviderParseError
from .base import Triple

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})

PARTICIPANTS_INSTRUCTION = (
    "List the person names mentioned in the following text. "
    'Reply with a JSON array of name strings and nothing else, e.g. ["Ada", "Grace"].'
    "\n\nText:\n{text}"
)
TOPIC_INSTRUCTION = (
    "Give a topic phrase of at most five words for the following text. "
    "Reply with the phrase only.\n\nText:\n{text}"
)
SUMMARY_INSTRUCTION = (
    "Summarize the following conversation excerpts as one short paragraph "
    "covering who did what, when, and where. Reply with the summary only."
    "\n\nExcerpts:\n{text}"
)
TRIPLES_INSTRUCTION = (
    "Extract (subject, predicate, object) fact triples from the following passage. "
    "Reply with a JSON array of three-element string arrays and nothing else, "
    'e.g. [["gina", "won", "first place"]].\n\nPassage:\n{text}'
)


@dataclass(frozen=True)
class HttpProviderConfig:
    endpoint: str
    model: str
    api_key_env: str = "SCENEMEM_API_KEY"
    timeout: float = 30.0
    max_in_flight: int = 4
    retries: int = 3
    backoff: float = 0.5


class HttpProvider:
    """AnnotationProvider implementation over a chat-completions endpoint."""

    def __init__(self, config: HttpProviderConfig, client: httpx.Client | None = None):
        if not config.endpoint:
            raise ProviderError("http provider needs an endpoint")
        self.config = config
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = client or httpx.Client(timeout=config.timeout, headers=headers)
        self._semaphore = threading.Semaphore(config.max_in_flight)

    def _complete(self, prompt: str) -> str:
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                time.sleep(self.config.backoff * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    log.debug("POST %s (%d prompt chars)", self.config.endpoint, len(prompt))
                    response = self._client.post(self.config.endpoint, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                log.debug("transport error (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code in RETRYABLE_STATUS:
                last_error = ProviderError(
                    f"provider returned {response.status_code}", retryable=True
                )
                log.debug("retryable status %d (attempt %d)", response.status_code, attempt + 1)
                continue
            if response.status_code != 200:
                raise ProviderError(
                    f"provider returned {response.status_code}: {response.text[:200]}"
                )
            try:
                body = response.json()
                content = body["choices"][0]["message"]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise ProviderParseError(f"malformed provider response: {exc}") from exc
            if not isinstance(content, str):
                raise ProviderParseError("provider response content is not text")
            log.debug("response %d chars", len(content))
            return content
        raise ProviderError(
            f"provider unreachable after {self.config.retries + 1} attempts: {last_error}",
            retryable=True,
        )

    @staticmethod
    def _parse_json_block(content: str) -> object:
        try:
            return json.loads(content)
        except json.JSONDecodeError:
            pass
        m = re.search(r"\[.*\]", content, re.DOTALL)
        if m:
            try:
                return json.loads(m.group(0))
            except json.JSONDecodeError:
                pass
        raise ProviderParseError(f"expected a JSON array in provider reply: {content[:200]!r}")

    def extract_participants(self, text: str) -> set[str]:
        if not text.strip():
            raise ProviderError("cannot extract participants from empty text")
        data = self._parse_json_block(self._complete(PARTICIPANTS_INSTRUCTION.format(text=text)))
        if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
            raise ProviderParseError("participants reply is not an array of strings")
        return {x for x in data if x.strip()}

    def extract_topic(self, text: str) -> str:
        if not text.strip():
            raise ProviderError("cannot extract a topic from empty text")
        return self._complete(TOPIC_INSTRUCTION.format(text=text)).strip()

    def summarize_scene(self, texts: list[str]) -> str:
        if not texts:
            raise ProviderError("cannot summarize an empty scene")
        joined = "\n---\n".join(texts)
        return self._complete(SUMMARY_INSTRUCTION.format(text=joined)).strip()

    def extract_triples(self, passage: str) -> list[Triple]:
        if not passage.strip():
            raise ProviderError("cannot extract triples from empty text")
        data = self._parse_json_block(self._complete(TRIPLES_INSTRUCTION.format(text=passage)))
        if not isinstance(data, list):
            raise ProviderParseError("triples reply is not an array")
        triples: list[Triple] = []
        for row in data:
            if (
                not isinstance(row, list)
                or len(row) != 3
                or not all(isinstance(x, str) for x in row)
            ):
                raise ProviderParseError(f"triple is not a [subject, predicate, object] row: {row!r}")
            triples.append(Triple(*row))
        return triples

    def generate_answer(self, prompt: str) -> str:
        if not prompt.strip():
            raise ProviderError("cannot answer an empty prompt")
        return self._complete(prompt).strip()

    def judge(self, prompt: str) -> str:
        if not prompt.strip():
            raise ProviderError("cannot judge an empty prompt")
        return self._complete(prompt).strip()
