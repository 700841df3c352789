"""Corpus ingestion and preprocessing filters.

Raw inputs are line-delimited JSON article records and a TSV edit log. The
filters (document-frequency bounds, minimum edit counts, stub and list
removal) are applied iteratively until a fixpoint, producing an index-stable
FilteredCorpus.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .numerics import as_csr, load_sparse, save_sparse

logger = logging.getLogger(__name__)

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")

DEFAULT_LIST_PREFIXES = ("list of", "index of", "timeline of", "glossary of")


class CorpusError(Exception):
    """Raised when ingestion or filtering cannot produce a usable corpus."""


@dataclass(frozen=True)
class ArticleRecord:
    article_id: str
    title: str
    tokens: tuple[str, ...]
    token_count: int
    is_list_like: bool


@dataclass(frozen=True)
class EditTriple:
    user_id: str
    article_id: str
    edit_count: int


@dataclass(frozen=True)
class IngestError:
    line_number: int
    reason: str


@dataclass(frozen=True)
class ArticleIngest:
    records: tuple[ArticleRecord, ...]
    errors: tuple[IngestError, ...]


@dataclass(frozen=True)
class EditIngest:
    triples: tuple[EditTriple, ...]
    errors: tuple[IngestError, ...]


@dataclass(frozen=True)
class FilterConfig:
    """Preprocessing thresholds; defaults follow the production pipeline."""

    min_df: int = 50
    max_df_fraction: float = 0.10
    min_edits: int = 20
    min_tokens: int = 100
    drop_list_like: bool = True
    list_prefixes: tuple[str, ...] = DEFAULT_LIST_PREFIXES


@dataclass(frozen=True)
class FilteredCorpus:
    articles: tuple[ArticleRecord, ...]
    users: tuple[str, ...]
    article_index: dict[str, int]
    user_index: dict[str, int]
    vocabulary: tuple[str, ...]
    edits: tuple[EditTriple, ...] = field(repr=False, default=())

    @property
    def n_articles(self) -> int:
        return len(self.articles)

    @property
    def n_users(self) -> int:
        return len(self.users)

    def article_ids(self) -> list[str]:
        return [a.article_id for a in self.articles]

    def titles(self) -> list[str]:
        return [a.title for a in self.articles]


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on non-alphanumeric runs, drop pure-digit tokens."""
    parts = _TOKEN_SPLIT.split(text.lower())
    return tuple(p for p in parts if p and not p.isdigit())


def is_list_like_title(title: str, prefixes=DEFAULT_LIST_PREFIXES) -> bool:
    low = title.strip().lower()
    return any(low.startswith(p) for p in prefixes)


def ingest_articles(path, list_prefixes=DEFAULT_LIST_PREFIXES) -> ArticleIngest:
    """Parse line-delimited records with fields id, title, text.

    Malformed lines are recorded with their line number; more than 10%
    malformed (of non-blank lines) is a hard failure.
    """
    records: list[ArticleRecord] = []
    errors: list[IngestError] = []
    n_lines = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            n_lines += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(IngestError(line_no, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(obj, dict):
                errors.append(IngestError(line_no, "record is not an object"))
                continue
            missing = [k for k in ("id", "title", "text") if k not in obj]
            if missing:
                errors.append(IngestError(line_no, f"missing fields: {', '.join(missing)}"))
                continue
            if not all(isinstance(obj[k], str) for k in ("id", "title", "text")):
                errors.append(IngestError(line_no, "id/title/text must be strings"))
                continue
            tokens = tokenize(obj["text"])
            records.append(
                ArticleRecord(
                    article_id=obj["id"],
                    title=obj["title"],
                    tokens=tokens,
                    token_count=len(tokens),
                    is_list_like=is_list_like_title(obj["title"], list_prefixes),
                )
            )
    if n_lines and len(errors) > 0.10 * n_lines:
        raise CorpusError(
            f"{path}: {len(errors)} of {n_lines} lines malformed (>10%); first: "
            f"line {errors[0].line_number}: {errors[0].reason}"
        )
    return ArticleIngest(tuple(records), tuple(errors))


def ingest_edits(path) -> EditIngest:
    """Parse TSV (user_id, article_id, count) lines, aggregating duplicates."""
    counts: dict[tuple[str, str], int] = {}
    errors: list[IngestError] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                errors.append(IngestError(line_no, f"expected 3 fields, got {len(parts)}"))
                continue
            user_id, article_id, raw = parts
            try:
                count = int(raw)
            except ValueError:
                errors.append(IngestError(line_no, f"non-numeric count {raw!r}"))
                continue
            if count < 1:
                errors.append(IngestError(line_no, f"non-positive count {count}"))
                continue
            key = (user_id, article_id)
            counts[key] = counts.get(key, 0) + count
    triples = tuple(
        EditTriple(u, a, c) for (u, a), c in sorted(counts.items())
    )
    return EditIngest(triples, tuple(errors))


def filter_corpus(articles, edits, config: FilterConfig = FilterConfig()) -> FilteredCorpus:
    """Apply all preprocessing filters, iterating edit-count removal to a fixpoint.

    Removing an article can push a user below the edit threshold and vice
    versa, so user/article removal repeats until stable. Output indices are
    sorted by id. Raises CorpusError if the fixpoint empties either side.
    """
    seen: set[str] = set()
    for a in articles:
        if a.article_id in seen:
            raise CorpusError(f"duplicate article id {a.article_id!r}")
        seen.add(a.article_id)

    by_id = {a.article_id: a for a in articles}
    kept_articles = {
        a.article_id
        for a in articles
        if a.token_count >= config.min_tokens
        and not (config.drop_list_like and a.is_list_like)
    }

    # Aggregate edits onto currently kept articles.
    agg: dict[tuple[str, str], int] = {}
    for t in edits:
        if t.article_id in by_id:
            key = (t.user_id, t.article_id)
            agg[key] = agg.get(key, 0) + t.edit_count

    kept_users = {u for (u, _a) in agg}
    while True:
        user_totals: dict[str, int] = {}
        article_totals: dict[str, int] = {}
        for (u, a), c in agg.items():
            if u in kept_users and a in kept_articles:
                user_totals[u] = user_totals.get(u, 0) + c
                article_totals[a] = article_totals.get(a, 0) + c
        next_users = {u for u in kept_users if user_totals.get(u, 0) >= config.min_edits}
        next_articles = {
            a for a in kept_articles if article_totals.get(a, 0) >= config.min_edits
        }
        if next_users == kept_users and next_articles == kept_articles:
            break
        kept_users, kept_articles = next_users, next_articles

    if not kept_articles or not kept_users:
        raise CorpusError("corpus too sparse for thresholds")

    article_list = tuple(by_id[a] for a in sorted(kept_articles))
    user_list = tuple(sorted(kept_users))
    article_index = {a.article_id: i for i, a in enumerate(article_list)}
    user_index = {u: i for i, u in enumerate(user_list)}
    kept_edits = tuple(
        EditTriple(u, a, c)
        for (u, a), c in sorted(agg.items())
        if u in user_index and a in article_index
    )

    # Vocabulary document frequencies over the retained article set.
    df: dict[str, int] = {}
    for a in article_list:
        for term in set(a.tokens):
            df[term] = df.get(term, 0) + 1
    n_arts = len(article_list)
    vocabulary = tuple(
        sorted(
            t
            for t, d in df.items()
            if d >= config.min_df and d <= config.max_df_fraction * n_arts
        )
    )

    logger.info(
        "filter_corpus: kept %d/%d articles, %d users, %d vocabulary terms",
        len(article_list),
        len(articles),
        len(user_list),
        len(vocabulary),
    )
    return FilteredCorpus(
        articles=article_list,
        users=user_list,
        article_index=article_index,
        user_index=user_index,
        vocabulary=vocabulary,
        edits=kept_edits,
    )


def build_edit_matrix(corpus: FilteredCorpus) -> sp.csr_matrix:
    """User x article matrix of edit counts (the implicit-feedback matrix)."""
    rows = [corpus.user_index[t.user_id] for t in corpus.edits]
    cols = [corpus.article_index[t.article_id] for t in corpus.edits]
    vals = [float(t.edit_count) for t in corpus.edits]
    return as_csr(
        sp.coo_matrix((vals, (rows, cols)), shape=(corpus.n_users, corpus.n_articles))
    )


def build_count_matrix(corpus: FilteredCorpus) -> sp.csr_matrix:
    """Term x article matrix of raw term frequencies over the vocabulary."""
    term_index = {t: i for i, t in enumerate(corpus.vocabulary)}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for col, article in enumerate(corpus.articles):
        local: dict[int, int] = {}
        for tok in article.tokens:
            ti = term_index.get(tok)
            if ti is not None:
                local[ti] = local.get(ti, 0) + 1
        rows.extend(local.keys())
        cols.extend([col] * len(local))
        vals.extend(float(v) for v in local.values())
    return as_csr(
        sp.coo_matrix(
            (vals, (rows, cols)), shape=(len(corpus.vocabulary), corpus.n_articles)
        )
    )


@dataclass(frozen=True)
class CorpusIndex:
    """On-disk view of a FilteredCorpus: ids, vocabulary, titles, edit triples."""

    article_ids: tuple[str, ...]
    user_ids: tuple[str, ...]
    vocabulary: tuple[str, ...]
    titles: tuple[str, ...]
    edits: np.ndarray  # (n, 3) int array: user index, article index, count

    @property
    def n_articles(self) -> int:
        return len(self.article_ids)

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    def edit_matrix(self) -> sp.csr_matrix:
        return as_csr(
            sp.coo_matrix(
                (
                    self.edits[:, 2].astype(np.float64),
                    (self.edits[:, 0], self.edits[:, 1]),
                ),
                shape=(self.n_users, self.n_articles),
            )
        )


def save_corpus(corpus: FilteredCorpus, out_dir) -> None:
    """Persist as a directory: *.idx index files, re-keyed edits.tsv, titles.tsv
    and the term-count matrix (counts.bin) for downstream TF-IDF."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "articles.idx").write_text(
        "".join(a.article_id + "\n" for a in corpus.articles), encoding="utf-8"
    )
    (out / "users.idx").write_text(
        "".join(u + "\n" for u in corpus.users), encoding="utf-8"
    )
    (out / "vocab.idx").write_text(
        "".join(t + "\n" for t in corpus.vocabulary), encoding="utf-8"
    )
    (out / "titles.tsv").write_text(
        "".join(f"{a.article_id}\t{a.title}\n" for a in corpus.articles),
        encoding="utf-8",
    )
    with open(out / "edits.tsv", "w", encoding="utf-8") as fh:
        for t in corpus.edits:
            fh.write(
                f"{corpus.user_index[t.user_id]}\t"
                f"{corpus.article_index[t.article_id]}\t{t.edit_count}\n"
            )
    save_sparse(out / "counts.bin", build_count_matrix(corpus))


def load_corpus_index(in_dir) -> CorpusIndex:
    src = Path(in_dir)

    def read_idx(name: str) -> tuple[str, ...]:
        return tuple((src / name).read_text(encoding="utf-8").splitlines())

    article_ids = read_idx("articles.idx")
    titles_map: dict[str, str] = {}
    titles_path = src / "titles.tsv"
    if titles_path.exists():
        for line in titles_path.read_text(encoding="utf-8").splitlines():
            aid, _, title = line.partition("\t")
            titles_map[aid] = title
    titles = tuple(titles_map.get(a, a) for a in article_ids)

    edits_rows = []
    for line in (src / "edits.tsv").read_text(encoding="utf-8").splitlines():
        u, a, c = line.split("\t")
        edits_rows.append((int(u), int(a), int(c)))
    edits = np.array(edits_rows, dtype=np.int64).reshape(-1, 3)
    return CorpusIndex(
        article_ids=article_ids,
        user_ids=read_idx("users.idx"),
        vocabulary=read_idx("vocab.idx"),
        titles=titles,
        edits=edits,
    )


def load_count_matrix(in_dir) -> sp.csr_matrix:
    return load_sparse(Path(in_dir) / "counts.bin")
