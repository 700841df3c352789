import json

import numpy as np
import pytest

from coldstartq.artifacts import ArtifactBundle
from coldstartq.questionnaire import generate_questions
from coldstartq.topics import TopicMatrix


@pytest.fixture
def tiny_bundle():
    """A 12-article, 3-question bundle small enough for per-test services."""
    rng = np.random.default_rng(7)
    topics = rng.normal(size=(12, 3))
    ids = [f"a{i}" for i in range(12)]
    titles = [f"Article {i}" for i in range(12)]
    qn = generate_questions(
        TopicMatrix(topics, "content"), ids, titles, n_per_list=2, k=3
    )
    return ArtifactBundle(
        questionnaire=qn,
        topics=topics,
        latents=topics.copy(),
        article_ids=tuple(ids),
        titles=tuple(titles),
        edit_totals=np.arange(12, dtype=np.float64),
        view_totals=np.arange(12, 0, -1, dtype=np.float64),
    )


@pytest.fixture
def corpus_files(tmp_path):
    """Writer for ingestable article/edit files; returns (articles, edits) paths."""

    def write(articles, edits):
        apath = tmp_path / "articles.jsonl"
        with open(apath, "w", encoding="utf-8") as fh:
            for rec in articles:
                fh.write(json.dumps(rec) + "\n")
        epath = tmp_path / "edits.tsv"
        with open(epath, "w", encoding="utf-8") as fh:
            for u, a, c in edits:
                fh.write(f"{u}\t{a}\t{c}\n")
        return apath, epath

    return write
