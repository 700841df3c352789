"""Serving bundle: everything the recommendation service needs on disk.

Layout of a bundle directory:
    questionnaire.json   question lists and word clouds
    topics.bin           article x topic matrix (dense binary)
    latents.bin          article latents used for diversification
    articles.idx         one article id per line
    titles.tsv           article id <TAB> title
    edit_totals.bin      per-article edit totals (1 x n dense)
    view_totals.bin      optional per-article view totals
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import load_dense, save_dense
from .questionnaire import Questionnaire, load_questionnaire, save_questionnaire


@dataclass(frozen=True)
class ArtifactBundle:
    questionnaire: Questionnaire
    topics: np.ndarray  # n_articles x n_topics
    latents: np.ndarray  # n_articles x d, for diversification clustering
    article_ids: tuple[str, ...]
    titles: tuple[str, ...]
    edit_totals: np.ndarray
    view_totals: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.article_ids)
        if not (
            self.topics.shape[0] == n
            and self.latents.shape[0] == n
            and len(self.titles) == n
            and self.edit_totals.size == n
            and (self.view_totals is None or self.view_totals.size == n)
        ):
            raise ValueError("bundle arrays disagree on article count")

    @property
    def n_articles(self) -> int:
        return len(self.article_ids)


def save_bundle(bundle: ArtifactBundle, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_questionnaire(bundle.questionnaire, d / "questionnaire.json")
    save_dense(d / "topics.bin", bundle.topics)
    save_dense(d / "latents.bin", bundle.latents)
    (d / "articles.idx").write_text(
        "\n".join(bundle.article_ids) + "\n", encoding="utf-8"
    )
    (d / "titles.tsv").write_text(
        "".join(f"{a}\t{t}\n" for a, t in zip(bundle.article_ids, bundle.titles)),
        encoding="utf-8",
    )
    save_dense(d / "edit_totals.bin", bundle.edit_totals.reshape(1, -1))
    if bundle.view_totals is not None:
        save_dense(d / "view_totals.bin", bundle.view_totals.reshape(1, -1))


def load_bundle(directory) -> ArtifactBundle:
    d = Path(directory)
    questionnaire = load_questionnaire(d / "questionnaire.json")
    topics = load_dense(d / "topics.bin")
    latents = load_dense(d / "latents.bin")
    article_ids = tuple((d / "articles.idx").read_text(encoding="utf-8").splitlines())
    titles_by_id = {}
    for line in (d / "titles.tsv").read_text(encoding="utf-8").splitlines():
        aid, _, title = line.partition("\t")
        titles_by_id[aid] = title
    titles = tuple(titles_by_id[a] for a in article_ids)
    edit_totals = load_dense(d / "edit_totals.bin").ravel()
    view_path = d / "view_totals.bin"
    view_totals = load_dense(view_path).ravel() if view_path.exists() else None
    return ArtifactBundle(
        questionnaire=questionnaire,
        topics=topics,
        latents=latents,
        article_ids=article_ids,
        titles=titles,
        edit_totals=edit_totals,
        view_totals=view_totals,
    )
