"""Deterministic reference providers.

These stand-ins make the whole pipeline runnable and byte-reproducible with
no network access:

* participants - word-boundary matches against an explicit per-corpus name
  lexicon;
* topic - the most frequent content-word bigram of the text;
* scene summary - the first sentence of each member view text, concatenated;
* triples - "<lexicon name> <verb> <rest>" pattern matches;
* embeddings - L2-normalized hashed bag-of-words of fixed dimension;
* answers - echo of the evidence sentence with the highest token overlap
  against the question in the prompt;
* judge - CORRECT iff every gold-answer token occurs in the generated answer.

Everything is a pure function of the input plus the static lexicon.
"""

from __future__ import annotations

import hashlib
import math
import re

from ..errors import ProviderError
from .base import Triple

STOPWORDS = frozenset(
    """a an the and or but if then than so nor as at by for from in into of on onto to
    with without is are was were be been being am do does did have has had having it its
    this that these those there here he she they them his her their i me my we us our you
    your yours what which who whom when where why how not no yes will would can could
    should shall may might must about over under again very too just also up down out
    off all any both each few more most other some such only own same s t don now""".split()
)

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_WORD = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    """Case-folded word tokens, punctuation dropped."""
    return _WORD.findall(text.casefold())


def split_sentences(text: str) -> list[str]:
    """Naive sentence split on terminal punctuation and newlines."""
    parts: list[str] = []
    for line in text.splitlines():
        parts.extend(p.strip() for p in _SENTENCE_SPLIT.split(line) if p.strip())
    return parts


def first_sentence(text: str) -> str:
    sentences = split_sentences(text)
    return sentences[0] if sentences else text.strip()


def _content_tokens(text: str) -> list[str]:
    return [t for t in tokenize(text) if t not in STOPWORDS]


def token_f1(a: list[str], b: list[str]) -> float:
    """Multiset token F1 between two token lists; 0 when either is empty."""
    if not a or not b:
        return 0.0
    counts: dict[str, int] = {}
    for t in a:
        counts[t] = counts.get(t, 0) + 1
    overlap = 0
    for t in b:
        if counts.get(t, 0) > 0:
            counts[t] -= 1
            overlap += 1
    if overlap == 0:
        return 0.0
    precision = overlap / len(a)
    recall = overlap / len(b)
    return 2 * precision * recall / (precision + recall)


class ReferenceEmbedder:
    """Hashed bag-of-words embedder with unit L2 norm."""

    def __init__(self, dimension: int = 256):
        if dimension <= 0:
            raise ValueError("embedding dimension must be positive")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    @staticmethod
    def bucket(token: str, dimension: int) -> int:
        """Stable hash bucket for a token (md5-based, salt-free)."""
        digest = hashlib.md5(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % dimension

    def embed(self, text: str) -> tuple[float, ...]:
        if not text.strip():
            raise ProviderError("cannot embed empty text")
        tokens = tokenize(text)
        if not tokens:
            raise ProviderError(f"text has no word tokens to embed: {text!r}")
        vec = [0.0] * self._dimension
        for token in tokens:
            vec[self.bucket(token, self._dimension)] += 1.0
        norm = math.sqrt(sum(v * v for v in vec))
        return tuple(v / norm for v in vec)


class ReferenceProvider:
    """Lexicon-driven deterministic annotation provider."""

    def __init__(self, lexicon: list[str] | tuple[str, ...] = ()):
        # keep display casing; match case-insensitively on word boundaries
        self.lexicon: tuple[str, ...] = tuple(dict.fromkeys(n.strip() for n in lexicon if n.strip()))
        self._patterns = [
            (name, re.compile(rf"\b{re.escape(name)}\b", re.IGNORECASE)) for name in self.lexicon
        ]

    def extract_participants(self, text: str) -> set[str]:
        if not text.strip():
            raise ProviderError("cannot extract participants from empty text")
        return {name for name, pattern in self._patterns if pattern.search(text)}

    def extract_topic(self, text: str) -> str:
        """Most frequent content-word bigram; falls back to the top unigram."""
        if not text.strip():
            raise ProviderError("cannot extract a topic from empty text")
        content = _content_tokens(text)
        if len(content) >= 2:
            counts: dict[tuple[str, str], int] = {}
            order: list[tuple[str, str]] = []
            for pair in zip(content, content[1:]):
                if pair not in counts:
                    order.append(pair)
                counts[pair] = counts.get(pair, 0) + 1
            best = max(order, key=lambda p: counts[p])  # ties -> first seen
            return " ".join(best)
        if content:
            return content[0]
        tokens = tokenize(text)
        return tokens[0] if tokens else text.strip()

    def summarize_scene(self, texts: list[str]) -> str:
        if not texts:
            raise ProviderError("cannot summarize an empty scene")
        return " ".join(first_sentence(t) for t in texts)

    def extract_triples(self, passage: str) -> list[Triple]:
        """Match "<name> <verb> <rest>" per sentence, subject from the lexicon."""
        if not passage.strip():
            raise ProviderError("cannot extract triples from empty text")
        triples: list[Triple] = []
        seen: set[Triple] = set()
        for sentence in split_sentences(passage):
            for name, pattern in self._patterns:
                m = pattern.search(sentence)
                if not m:
                    continue
                tail = tokenize(sentence[m.end() :])
                if len(tail) < 2:
                    continue
                triple = Triple(name.casefold(), tail[0], " ".join(tail[1:]))
                if triple not in seen:
                    seen.add(triple)
                    triples.append(triple)
        return triples

    def generate_answer(self, prompt: str) -> str:
        """Echo the evidence sentence with the highest token-F1 to the question."""
        if not prompt.strip():
            raise ProviderError("cannot answer an empty prompt")
        question = self._last_field(prompt, "Question:") or prompt
        candidates = self._memory_sentences(prompt)
        if not candidates:
            candidates = split_sentences(prompt)
        if not candidates:
            return question.strip()
        q_tokens = tokenize(question)
        best = max(candidates, key=lambda s: token_f1(tokenize(s), q_tokens))
        return best

    def judge(self, prompt: str) -> str:
        """CORRECT iff every gold token also occurs in the generated answer."""
        if not prompt.strip():
            raise ProviderError("cannot judge an empty prompt")
        section = prompt
        marker = prompt.rfind("real question:")
        if marker != -1:
            section = prompt[marker:]
        gold = self._last_field(section, "Gold answer:")
        generated = self._last_field(section, "Generated answer:")
        if gold is None or generated is None:
            raise ProviderError("judge prompt is missing Gold answer / Generated answer fields")
        gold_tokens = set(tokenize(gold))
        generated_tokens = set(tokenize(generated))
        return "CORRECT" if gold_tokens and gold_tokens <= generated_tokens else "WRONG"

    @staticmethod
    def _last_field(prompt: str, marker: str) -> str | None:
        """Value of the last '<marker> value' line in the prompt."""
        value: str | None = None
        for line in prompt.splitlines():
            stripped = line.strip()
            if stripped.startswith(marker):
                value = stripped[len(marker) :].strip()
        return value

    @staticmethod
    def _memory_sentences(prompt: str) -> list[str]:
        """Sentences of the memory blocks, speaker/metadata prefixes stripped."""
        lines: list[str] = []
        collecting = False
        for line in prompt.splitlines():
            stripped = line.strip()
            if stripped.startswith("Memories for user"):
                collecting = True
                continue
            if stripped.startswith("Question:"):
                break
            if collecting and stripped:
                lines.append(stripped)
        sentences: list[str] = []
        for line in lines:
            # drop "- [2023-05-08 | place]" style metadata prefixes
            line = re.sub(r"^-?\s*\[[^\]]*\]\s*", "", line)
            for sentence in split_sentences(line):
                sentences.append(re.sub(r"^[A-Za-z][\w .'-]{0,40}:\s+", "", sentence))
        return sentences
