"""FastAPI application: questionnaire delivery, session collection, and
recommendation serving on top of a loaded artifact bundle.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response

from ..artifacts import ArtifactBundle
from ..questionnaire import Likert, likert_to_score
from ..recommender import diversify, top_k
from .schemas import (
    LIKERT_LEVELS,
    CompleteAck,
    FeedbackIn,
    Health,
    ResponseIn,
    SessionCreated,
)
from .store import SessionLimitExceeded, SessionStore, UnknownSession

POOL_SIZE = 50
COMPARISON_LIST_SIZE = 5

FEEDBACK_PROMPTS = (
    "Among the two lists, which list has more articles that you would be "
    "interested in reading?",
    "Among the two lists, which list has more articles that you would be "
    "interested in editing?",
    "Among the two lists, which list has more articles that you would not be "
    "interested in at all, neither for reading nor for editing?",
)


@dataclass(frozen=True)
class ServiceConfig:
    seed: int = 0
    comparison_enabled: bool = False
    allow_partial: bool = False
    default_k: int = 5


def _json_response(payload: dict, status_code: int = 200) -> Response:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return Response(content=body, status_code=status_code, media_type="application/json")


def create_app(
    bundle: ArtifactBundle | None, store: SessionStore, config: ServiceConfig
) -> FastAPI:
    app = FastAPI(title="coldstartq", docs_url=None, redoc_url=None)

    questionnaire_bytes: bytes | None = None
    if bundle is not None:
        qn = bundle.questionnaire
        payload = {
            "format": "coldstartq-questionnaire/1",
            "method": qn.method,
            "n_per_list": qn.n_per_list,
            "questions": [asdict(q) for q in qn.questions],
        }
        questionnaire_bytes = json.dumps(
            payload, sort_keys=True, separators=(",", ":")
        ).encode()

    def require_bundle() -> ArtifactBundle:
        if bundle is None:
            raise HTTPException(503, "no artifact bundle loaded")
        return bundle

    def get_session(token: str):
        try:
            return store.get(token)
        except UnknownSession:
            raise HTTPException(404, "unknown session") from None

    def interest_scores(session) -> tuple[np.ndarray, bool]:
        b = require_bundle()
        qn = b.questionnaire
        weights = np.zeros(qn.n_questions)
        for q_index, level in session.responses.items():
            weights[q_index] = likert_to_score(Likert(level))
        cols = [q.topic_index for q in qn.questions]
        scores = b.topics[:, cols] @ weights
        return scores, bool(np.all(weights == 0.0))

    def ranked_list(scores: np.ndarray, k: int, diversified: bool, method: str):
        b = require_bundle()
        pool_size = min(POOL_SIZE, b.n_articles)
        if k > pool_size:
            raise HTTPException(400, f"k={k} exceeds the candidate pool ({pool_size})")
        if k == 0:
            return []
        pool = top_k(scores, pool_size, method=method)
        if diversified and k < len(pool):
            pool = diversify(pool, b.latents, k, seed=config.seed)
        chosen = pool.article_indices[:k]
        chosen_scores = pool.scores[:k]
        return [
            {
                "article_id": b.article_ids[int(i)],
                "title": b.titles[int(i)],
                "score": float(s),
            }
            for i, s in zip(chosen, chosen_scores)
        ]

    @app.get("/healthz")
    def healthz() -> Health:
        return Health(status="ok", bundle_loaded=bundle is not None)

    @app.get("/api/v1/questionnaire")
    def get_questionnaire() -> Response:
        require_bundle()
        return Response(content=questionnaire_bytes, media_type="application/json")

    @app.post("/api/v1/sessions", status_code=201)
    def create_session(request: Request) -> SessionCreated:
        b = require_bundle()
        ip = request.client.host if request.client else "unknown"
        try:
            session = store.create(ip)
        except SessionLimitExceeded as exc:
            raise HTTPException(429, str(exc)) from None
        return SessionCreated(
            token=session.token, n_questions=b.questionnaire.n_questions
        )

    @app.post("/api/v1/sessions/{token}/responses")
    def submit_response(token: str, body: ResponseIn):
        b = require_bundle()
        session = get_session(token)
        n_questions = b.questionnaire.n_questions
        if not (0 <= body.question_index < n_questions):
            raise HTTPException(
                400, f"question_index must be in [0, {n_questions})"
            )
        if session.completed:
            raise HTTPException(409, "session already completed")
        superseded = store.record_response(token, body.question_index, body.level)
        return {
            "token": token,
            "question_index": body.question_index,
            "level": body.level,
            "n_answered": len(session.responses),
            "superseded": superseded,
        }

    @app.post("/api/v1/sessions/{token}/complete")
    def complete_session(token: str, body: dict | None = None) -> CompleteAck:
        b = require_bundle()
        session = get_session(token)
        n_questions = b.questionnaire.n_questions
        if session.completed:
            return CompleteAck(
                token=token,
                completed=True,
                n_answered=len(session.responses),
                n_filled=0,
            )
        missing = [q for q in range(n_questions) if q not in session.responses]
        fill: dict[int, str] = {}
        if missing:
            wants_fill = bool(body and body.get("fill_unanswered"))
            if not (config.allow_partial and wants_fill):
                raise HTTPException(
                    409,
                    f"{len(missing)} of {n_questions} questions unanswered",
                )
            fill = {q: Likert.NONE.value for q in missing}
        store.complete(token, fill)
        return CompleteAck(
            token=token,
            completed=True,
            n_answered=len(session.responses),
            n_filled=len(fill),
        )

    @app.get("/api/v1/sessions/{token}/recommendations")
    def get_recommendations(
        token: str, k: int | None = None, diversified: bool = True
    ) -> Response:
        b = require_bundle()
        session = get_session(token)
        if not session.completed:
            raise HTTPException(409, "session not completed")
        if k is None:
            k = config.default_k
        if k < 0:
            raise HTTPException(400, "k must be >= 0")
        scores, no_signal = interest_scores(session)
        fallback = False
        method = "interest"
        if no_signal:
            if b.view_totals is None:
                raise HTTPException(
                    503, "session has no preference signal and no view data is loaded"
                )
            scores = b.view_totals
            method = "view-pop"
            fallback = True
        articles = ranked_list(scores, k, diversified, method)
        return _json_response(
            {
                "token": token,
                "articles": articles,
                "method": method,
                "fallback": fallback,
            }
        )

    def baseline_choice(session) -> str:
        b = require_bundle()
        if b.view_totals is None:
            return "edit-pop"
        levels = json.dumps(
            {str(q): lvl for q, lvl in sorted(session.responses.items())},
            sort_keys=True,
        )
        mix = zlib.crc32(levels.encode())
        rng = np.random.default_rng([config.seed, mix])
        return "view-pop" if rng.integers(0, 2) else "edit-pop"

    @app.get("/api/v1/sessions/{token}/comparison")
    def get_comparison(token: str) -> Response:
        b = require_bundle()
        if not config.comparison_enabled:
            raise HTTPException(404, "comparison mode disabled")
        session = get_session(token)
        if not session.completed:
            raise HTTPException(409, "session not completed")
        scores, no_signal = interest_scores(session)
        if no_signal:
            if b.view_totals is None:
                raise HTTPException(503, "no preference signal and no view data")
            scores = b.view_totals
        ours = ranked_list(scores, COMPARISON_LIST_SIZE, diversified=True, method="interest")
        baseline = baseline_choice(session)
        pop = b.view_totals if baseline == "view-pop" else b.edit_totals
        base_list = ranked_list(pop, COMPARISON_LIST_SIZE, diversified=False, method=baseline)
        payload = {
            "token": token,
            "list_1": ours,
            "list_2": base_list,
            "prompts": list(FEEDBACK_PROMPTS),
        }
        if session.feedback is not None:
            payload["feedback"] = dict(session.feedback)
        return _json_response(payload)

    @app.post("/api/v1/sessions/{token}/comparison")
    def submit_feedback(token: str, body: FeedbackIn):
        require_bundle()
        if not config.comparison_enabled:
            raise HTTPException(404, "comparison mode disabled")
        session = get_session(token)
        if not session.completed:
            raise HTTPException(409, "session not completed")
        store.record_feedback(token, body.model_dump())
        return {"token": token, "recorded": True}

    return app
