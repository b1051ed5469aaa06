"""Prompt templates for answer generation and answer judging.

The templates live as package data so they stay byte-stable; placeholders
use str.format field names. fill() validates that every placeholder is
supplied instead of silently leaving braces behind.
"""

from __future__ import annotations

from importlib import resources

from ..errors import SceneMemError


def _load(name: str) -> str:
    return resources.files("scenemem.providers").joinpath("templates", name).read_text(encoding="utf-8")


GENERATION_TEMPLATE = _load("generation.txt")
JUDGE_TEMPLATE = _load("judge.txt")


def fill(template: str, **values: str) -> str:
    try:
        return template.format(**values)
    except (KeyError, IndexError) as exc:
        raise SceneMemError(f"prompt template placeholder missing: {exc}") from exc


def generation_prompt(
    speaker_1: str,
    speaker_1_memories: str,
    speaker_2: str,
    speaker_2_memories: str,
    question: str,
) -> str:
    return fill(
        GENERATION_TEMPLATE,
        speaker_1_user_id=speaker_1,
        speaker_1_memories=speaker_1_memories,
        speaker_2_user_id=speaker_2,
        speaker_2_memories=speaker_2_memories,
        question=question,
    )


def judge_prompt(question: str, gold_answer: str, generated_answer: str) -> str:
    return fill(
        JUDGE_TEMPLATE,
        question=question,
        gold_answer=gold_answer,
        generated_answer=generated_answer,
    )
