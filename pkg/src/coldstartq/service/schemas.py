"""Request/response bodies for the HTTP API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

LIKERT_LEVELS = (
    "A-great",
    "A-moderate",
    "A-slight",
    "none",
    "B-slight",
    "B-moderate",
    "B-great",
)

LikertLevel = Literal[
    "A-great", "A-moderate", "A-slight", "none", "B-slight", "B-moderate", "B-great"
]

ListChoice = Literal["list_1", "list_2"]


class SessionCreated(BaseModel):
    token: str
    n_questions: int


class ResponseIn(BaseModel):
    question_index: int = Field(ge=0)
    level: LikertLevel


class ResponseAck(BaseModel):
    token: str
    question_index: int
    level: LikertLevel
    n_answered: int
    superseded: bool


class CompleteAck(BaseModel):
    token: str
    completed: bool
    n_answered: int
    n_filled: int  # unanswered questions auto-filled with "none", if allowed


class ArticleOut(BaseModel):
    article_id: str
    title: str
    score: float


class RecommendationsOut(BaseModel):
    token: str
    articles: list[ArticleOut]
    method: str
    fallback: bool  # true when every response was "none" and popularity took over


class ComparisonOut(BaseModel):
    token: str
    list_1: list[ArticleOut]
    list_2: list[ArticleOut]
    prompts: list[str]


class FeedbackIn(BaseModel):
    reading: ListChoice
    editing: ListChoice
    neither: ListChoice


class FeedbackAck(BaseModel):
    token: str
    recorded: bool


class Health(BaseModel):
    status: str
    bundle_loaded: bool
