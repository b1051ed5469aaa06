"""Metrics and benchmark runner.

Two scores: token-overlap F1 against the gold answer, and a binary
LLM-judged CORRECT/WRONG. The runner drives a question-answering pipeline
(a callable supplied by the engine) over a question set, optionally
repeating the full generate-and-judge loop, sweeping one parameter over a
grid, or applying ablation switches. Judge responses that stay
unparseable after one re-ask are recorded as per-item scoring errors,
never silently counted as 0.
"""

from __future__ import annotations

import json
import logging
import re
import string
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConfigError, ProviderParseError, SceneMemError
from .providers.base import JUDGE_LABELS, AnnotationProvider
from .providers.prompts import judge_prompt

log = logging.getLogger(__name__)

CATEGORY_NAMES = ("single", "multi", "time", "open")
# Question-set files may tag categories with the LOCOMO numeric codes.
# Code 5 marks adversarial (unanswerable) questions, which are excluded.
LOCOMO_CATEGORIES = {1: "multi", 2: "time", 3: "open", 4: "single"}
SWEEP_PARAMS = ("w", "delta_t", "delta_tau", "k")
ABLATIONS: dict[str, dict[str, object]] = {
    "no-window": {"w": 0},
    "speaker_only": {"participant_mode": "speakers"},
    "slot3": {"fusion": "slot3"},
}

Pipeline = Callable[[str], tuple[str, tuple[str, ...]]]
PipelineFactory = Callable[[Mapping[str, object]], Pipeline]


@dataclass(frozen=True)
class QAItem:
    question: str
    gold_answer: str
    category: str = "open"
    dialogue_id: str = ""

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise SceneMemError("question must be non-empty")
        if not self.gold_answer.strip():
            raise SceneMemError("gold answer must be non-empty")
        if self.category not in CATEGORY_NAMES:
            raise SceneMemError(
                f"unknown category {self.category!r}; expected one of {CATEGORY_NAMES}"
            )


def load_questions(records: Iterable[Mapping[str, object]]) -> tuple[list[QAItem], int]:
    """Parse question records, skipping unanswerable ones with a warning.

    Returns the parsed items and the skipped count. A record is skipped
    when it has no gold answer or carries the adversarial category code.
    """
    items: list[QAItem] = []
    skipped = 0
    for i, record in enumerate(records):
        question = str(record.get("question", "")).strip()
        gold = str(record.get("gold_answer", record.get("answer", "")) or "").strip()
        raw_category = record.get("category", "open")
        if isinstance(raw_category, int) or (isinstance(raw_category, str) and raw_category.isdigit()):
            category = LOCOMO_CATEGORIES.get(int(raw_category))
        else:
            category = str(raw_category)
        if not question:
            raise SceneMemError(f"question record {i} has no question text")
        if not gold or category is None:
            log.warning("skipping unanswerable question %d: %s", i, question[:60])
            skipped += 1
            continue
        items.append(
            QAItem(
                question=question,
                gold_answer=gold,
                category=category,
                dialogue_id=str(record.get("dialogue_id", "")),
            )
        )
    return items, skipped


_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def _metric_tokens(text: str) -> list[str]:
    return text.lower().translate(_PUNCT_TABLE).split()


def f1_score(pred: str, gold: str) -> float:
    """Token-multiset F1 after lowercasing and punctuation stripping."""
    gold_tokens = _metric_tokens(gold)
    if not gold_tokens:
        raise SceneMemError("gold answer has no tokens")
    pred_tokens = _metric_tokens(pred)
    if not pred_tokens:
        return 0.0
    counts: dict[str, int] = {}
    for t in gold_tokens:
        counts[t] = counts.get(t, 0) + 1
    overlap = 0
    for t in pred_tokens:
        if counts.get(t, 0) > 0:
            counts[t] -= 1
            overlap += 1
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


_LABEL_JSON = re.compile(r'"label"\s*:\s*"\s*(CORRECT|WRONG)\s*"', re.IGNORECASE)


def parse_judge_label(response: str) -> str:
    """Extract CORRECT/WRONG from a judge response.

    Accepts a JSON object with a "label" key (possibly embedded in prose)
    or a bare label. A response naming both labels, or neither, fails.
    """
    try:
        data = json.loads(response)
    except (json.JSONDecodeError, TypeError):
        data = None
    if isinstance(data, dict) and isinstance(data.get("label"), str):
        label = data["label"].strip().upper()
        if label in JUDGE_LABELS:
            return label
    m = _LABEL_JSON.search(response)
    if m:
        return m.group(1).upper()
    found = {label for label in JUDGE_LABELS if re.search(rf"\b{label}\b", response)}
    if len(found) == 1:
        return found.pop()
    raise ProviderParseError(f"judge response has no single CORRECT/WRONG label: {response!r}")


def judge_score(question: str, gold: str, generated: str, provider: AnnotationProvider) -> int:
    """1 for CORRECT, 0 for WRONG; one re-ask before giving up."""
    prompt = judge_prompt(question=question, gold_answer=gold, generated_answer=generated)
    last_error: ProviderParseError | None = None
    for _ in range(2):
        response = provider.judge(prompt)
        try:
            return 1 if parse_judge_label(response) == "CORRECT" else 0
        except ProviderParseError as exc:
            last_error = exc
    assert last_error is not None
    raise last_error


@dataclass(frozen=True)
class ItemResult:
    question: str
    category: str
    gold_answer: str
    evidence_ids: tuple[str, ...]
    answers: tuple[str, ...]
    f1_scores: tuple[float, ...]
    judge_scores: tuple[float | None, ...]
    errors: tuple[str, ...] = ()

    @property
    def mean_f1(self) -> float:
        return sum(self.f1_scores) / len(self.f1_scores)

    @property
    def mean_judge(self) -> float | None:
        scored = [s for s in self.judge_scores if s is not None]
        return sum(scored) / len(scored) if scored else None


def _mean(values: Sequence[float]) -> float | None:
    return sum(values) / len(values) if values else None


@dataclass(frozen=True)
class RunReport:
    label: str
    config: dict
    repeats: int
    items: tuple[ItemResult, ...]
    skipped: int = 0

    def category_f1(self, category: str) -> float | None:
        return _mean([i.mean_f1 for i in self.items if i.category == category])

    def category_judge(self, category: str) -> float | None:
        scored = [
            i.mean_judge for i in self.items if i.category == category and i.mean_judge is not None
        ]
        return _mean(scored)

    @property
    def overall_f1(self) -> float | None:
        return _mean([i.mean_f1 for i in self.items])

    @property
    def overall_judge(self) -> float | None:
        return _mean([i.mean_judge for i in self.items if i.mean_judge is not None])

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "config": self.config,
            "repeats": self.repeats,
            "skipped": self.skipped,
            "overall": {"f1": self.overall_f1, "judge": self.overall_judge},
            "categories": {
                c: {"f1": self.category_f1(c), "judge": self.category_judge(c)}
                for c in CATEGORY_NAMES
            },
            "items": [
                {
                    "question": i.question,
                    "category": i.category,
                    "gold_answer": i.gold_answer,
                    "evidence_ids": list(i.evidence_ids),
                    "answers": list(i.answers),
                    "f1_scores": list(i.f1_scores),
                    "judge_scores": list(i.judge_scores),
                    "errors": list(i.errors),
                }
                for i in self.items
            ],
        }


def evaluate_items(
    pipeline: Pipeline,
    items: Sequence[QAItem],
    judge_provider: AnnotationProvider | None,
    repeats: int,
    config_snapshot: Mapping[str, object],
    label: str = "run",
    skipped: int = 0,
) -> RunReport:
    """One benchmark pass: answer and score every item `repeats` times."""
    if repeats < 1:
        raise SceneMemError(f"repeats must be >= 1, got {repeats}")
    results: list[ItemResult] = []
    for item in items:
        answers: list[str] = []
        f1s: list[float] = []
        judges: list[float | None] = []
        errors: list[str] = []
        evidence_ids: tuple[str, ...] = ()
        for _ in range(repeats):
            answer, evidence_ids = pipeline(item.question)
            answers.append(answer)
            f1s.append(f1_score(answer, item.gold_answer))
            if judge_provider is None:
                judges.append(None)
                continue
            try:
                judges.append(float(judge_score(item.question, item.gold_answer, answer, judge_provider)))
            except ProviderParseError as exc:
                judges.append(None)
                errors.append(str(exc))
        results.append(
            ItemResult(
                question=item.question,
                category=item.category,
                gold_answer=item.gold_answer,
                evidence_ids=evidence_ids,
                answers=tuple(answers),
                f1_scores=tuple(f1s),
                judge_scores=tuple(judges),
                errors=tuple(errors),
            )
        )
    return RunReport(
        label=label,
        config=dict(config_snapshot),
        repeats=repeats,
        items=tuple(results),
        skipped=skipped,
    )


def run_benchmark(
    factory: PipelineFactory,
    base_config: Mapping[str, object],
    items: Sequence[QAItem],
    judge_provider: AnnotationProvider | None = None,
    repeats: int = 1,
    sweep: tuple[str, Sequence[object]] | None = None,
    ablations: Sequence[str] = (),
    skipped: int = 0,
) -> list[RunReport]:
    """Run the benchmark, one report per configuration point.

    Without a sweep this produces a single report. A sweep varies exactly
    one of w / delta_t / delta_tau / k over its grid. Ablation switches
    apply to every point and are recorded in the config snapshot.
    """
    overrides: dict[str, object] = {}
    for name in ablations:
        if name not in ABLATIONS:
            raise ConfigError(f"unknown ablation {name!r}; expected one of {sorted(ABLATIONS)}")
        overrides.update(ABLATIONS[name])
    if sweep is not None:
        param, values = sweep
        if param not in SWEEP_PARAMS:
            raise ConfigError(f"can only sweep one of {SWEEP_PARAMS}, not {param!r}")
        if not values:
            raise ConfigError("sweep grid is empty")
        points = [(f"{param}={value}", {param: value}) for value in values]
    else:
        points = [("run", {})]
    reports: list[RunReport] = []
    for label, point in points:
        snapshot = dict(base_config)
        snapshot.update(overrides)
        snapshot.update(point)
        snapshot["ablations"] = sorted(ablations)
        pipeline = factory(snapshot)
        reports.append(
            evaluate_items(pipeline, items, judge_provider, repeats, snapshot, label, skipped)
        )
    return reports


def _cell(value: float | None, scale: float = 1.0) -> str:
    return f"{value * scale:.2f}" if value is not None else "-"


def format_table(reports: Sequence[RunReport]) -> str:
    """Aligned text table: category columns, F1 and J (x100) per report."""
    columns = list(CATEGORY_NAMES) + ["overall"]
    header_1 = ["run"] + [c for col in columns for c in (col, "")]
    header_2 = [""] + ["F1", "J"] * len(columns)
    rows = [header_1, header_2]
    for report in reports:
        row = [report.label]
        for col in columns:
            if col == "overall":
                f1, judge = report.overall_f1, report.overall_judge
            else:
                f1, judge = report.category_f1(col), report.category_judge(col)
            row.extend([_cell(f1, 100.0), _cell(judge, 100.0)])
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows)
