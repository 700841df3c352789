"""Questionnaire construction: per-topic A/B article lists, word clouds, and
the 7-level response scale.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

FORMAT_TAG = "coldstartq-questionnaire/1"

PROMPT = (
    "Between lists A and B, which one contains more articles that you "
    "would be interested in editing?"
)


class Likert(enum.Enum):
    """Seven response levels: how strongly list A is preferred over list B."""

    A_GREAT = "A-great"
    A_MODERATE = "A-moderate"
    A_SLIGHT = "A-slight"
    NONE = "none"
    B_SLIGHT = "B-slight"
    B_MODERATE = "B-moderate"
    B_GREAT = "B-great"

    def mirror(self) -> "Likert":
        """The same strength of preference with A and B swapped."""
        return _MIRROR[self]


_MIRROR = {
    Likert.A_GREAT: Likert.B_GREAT,
    Likert.A_MODERATE: Likert.B_MODERATE,
    Likert.A_SLIGHT: Likert.B_SLIGHT,
    Likert.NONE: Likert.NONE,
    Likert.B_SLIGHT: Likert.A_SLIGHT,
    Likert.B_MODERATE: Likert.A_MODERATE,
    Likert.B_GREAT: Likert.A_GREAT,
}

LIKERT_SCORES = {
    Likert.A_GREAT: 1.0,
    Likert.A_MODERATE: 2.0 / 3.0,
    Likert.A_SLIGHT: 1.0 / 3.0,
    Likert.NONE: 0.0,
    Likert.B_SLIGHT: -1.0 / 3.0,
    Likert.B_MODERATE: -2.0 / 3.0,
    Likert.B_GREAT: -1.0,
}


def likert_to_score(level: Likert) -> float:
    return LIKERT_SCORES[level]


@dataclass(frozen=True)
class ArticleRef:
    index: int  # position in the corpus article axis
    article_id: str
    title: str
    score: float  # the article's value on the question's topic vector


@dataclass(frozen=True)
class Question:
    topic_index: int
    list_a: tuple[ArticleRef, ...]  # strongest positive topic scores
    list_b: tuple[ArticleRef, ...]  # strongest negative topic scores
    cloud_a: tuple[str, ...]
    cloud_b: tuple[str, ...]
    prompt: str = PROMPT


@dataclass(frozen=True)
class Questionnaire:
    questions: tuple[Question, ...]
    method: str
    n_per_list: int

    @property
    def n_questions(self) -> int:
        return len(self.questions)


def wordcloud_terms(
    article_indices,
    tfidf_matrix: sp.csr_matrix,
    vocabulary,
    m: int = 15,
) -> tuple[str, ...]:
    """Top-m vocabulary terms for a set of articles, ranked by summed TF-IDF
    weight (ties broken by vocabulary position)."""
    article_indices = np.asarray(article_indices, dtype=np.int64)
    if article_indices.size == 0:
        raise ValueError("no articles given")
    csc = tfidf_matrix.tocsc()
    weights = np.asarray(csc[:, article_indices].sum(axis=1)).ravel()
    order = np.lexsort((np.arange(weights.size), -weights))
    return tuple(vocabulary[int(t)] for t in order[:m])


def generate_questions(
    topics,
    article_ids,
    titles,
    n_per_list: int = 20,
    k: int = 20,
    tfidf_matrix: sp.csr_matrix | None = None,
    vocabulary=None,
    cloud_size: int = 15,
) -> Questionnaire:
    """One question per topic column: list A holds the n_per_list articles with
    the largest topic scores, list B the n_per_list most negative.

    Ties break toward the lower article index. Topics whose column has fewer
    than 2 * n_per_list distinct values, or where the two lists would overlap
    (list B reaching into nonnegative scores and colliding with A), are
    rejected with ValueError — such a column does not split articles into two
    contrasting groups.
    """
    mat = topics.topics if hasattr(topics, "topics") else np.asarray(topics)
    method = getattr(topics, "method", "unknown")
    n_articles = mat.shape[0]
    if len(article_ids) != n_articles or len(titles) != n_articles:
        raise ValueError("article_ids/titles length must match the topic rows")
    if k > mat.shape[1]:
        raise ValueError(f"asked for {k} questions, only {mat.shape[1]} topics")
    if n_per_list < 1:
        raise ValueError("n_per_list must be >= 1")
    if (tfidf_matrix is None) != (vocabulary is None):
        raise ValueError("tfidf_matrix and vocabulary must be given together")

    questions = []
    idx = np.arange(n_articles)
    for t in range(k):
        col = mat[:, t]
        if np.unique(col).size < 2 * n_per_list:
            raise ValueError(
                f"topic {t}: fewer than {2 * n_per_list} distinct scores; "
                "cannot form two disjoint contrast lists"
            )
        order_a = np.lexsort((idx, -col))[:n_per_list]
        order_b = np.lexsort((idx, col))[:n_per_list]
        if set(order_a.tolist()) & set(order_b.tolist()):
            raise ValueError(f"topic {t}: A and B lists overlap")

        def refs(selected):
            return tuple(
                ArticleRef(int(i), article_ids[int(i)], titles[int(i)], float(col[int(i)]))
                for i in selected
            )

        cloud_a: tuple[str, ...] = ()
        cloud_b: tuple[str, ...] = ()
        if tfidf_matrix is not None:
            cloud_a = wordcloud_terms(order_a, tfidf_matrix, vocabulary, cloud_size)
            cloud_b = wordcloud_terms(order_b, tfidf_matrix, vocabulary, cloud_size)
        questions.append(
            Question(
                topic_index=t,
                list_a=refs(order_a),
                list_b=refs(order_b),
                cloud_a=cloud_a,
                cloud_b=cloud_b,
            )
        )
    return Questionnaire(tuple(questions), method=method, n_per_list=n_per_list)


def save_questionnaire(q: Questionnaire, path) -> None:
    payload = {
        "format": FORMAT_TAG,
        "method": q.method,
        "n_per_list": q.n_per_list,
        "questions": [asdict(question) for question in q.questions],
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=1), encoding="utf-8"
    )


def load_questionnaire(path) -> Questionnaire:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != FORMAT_TAG:
        raise ValueError(f"unrecognized questionnaire format: {payload.get('format')!r}")
    questions = tuple(
        Question(
            topic_index=item["topic_index"],
            list_a=tuple(ArticleRef(**ref) for ref in item["list_a"]),
            list_b=tuple(ArticleRef(**ref) for ref in item["list_b"]),
            cloud_a=tuple(item["cloud_a"]),
            cloud_b=tuple(item["cloud_b"]),
            prompt=item["prompt"],
        )
        for item in payload["questions"]
    )
    return Questionnaire(questions, payload["method"], payload["n_per_list"])
