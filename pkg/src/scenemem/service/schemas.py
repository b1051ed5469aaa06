"""Request/response models shared by the HTTP service and the CLI client."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str
    index_built: bool


class IngestRequest(BaseModel):
    corpus_path: str
    format: str = "auto"
    sample: int = 0


class IngestResponse(BaseModel):
    sessions: int
    messages: int
    path: str


class BuildRequest(BaseModel):
    pass


class BuildResponse(BaseModel):
    views: int
    scenes: int
    characters: int
    phrases: int
    triples: int
    path: str


class EvidenceModel(BaseModel):
    id: str
    origin: str
    score: float
    text: str


class PassageScoreModel(BaseModel):
    id: str
    score: float
    dense_score: float


class SemanticTraceModel(BaseModel):
    passages: list[PassageScoreModel]
    seeds: list[str]
    fallback: bool


class SceneScoreModel(BaseModel):
    id: str
    similarity: float


class EpisodicTraceModel(BaseModel):
    scenes: list[SceneScoreModel]
    applied_cues: dict[str, list[str]]
    fallback: bool


class QueryRequest(BaseModel):
    question: str
    mode: str = "fused"
    k: Optional[int] = None
    answer: bool = False


class QueryResponse(BaseModel):
    question: str
    mode: str
    k: int
    evidence: list[EvidenceModel]
    answer: Optional[str] = None
    semantic: Optional[SemanticTraceModel] = None
    episodic: Optional[EpisodicTraceModel] = None


class EvalRequest(BaseModel):
    questions: list[dict[str, Any]] = Field(default_factory=list)
    repeats: int = 1
    sweep_param: Optional[str] = None
    sweep_values: list[Any] = Field(default_factory=list)
    ablations: list[str] = Field(default_factory=list)
    judge: bool = True


class EvalResponse(BaseModel):
    reports: list[dict[str, Any]]
    table: str


class ErrorResponse(BaseModel):
    error: str
    kind: str
