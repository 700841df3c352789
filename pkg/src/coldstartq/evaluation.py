"""Offline evaluation: topic cohesion with bootstrap intervals, simulated
questionnaire sessions against held-out edits, and recall@k reports.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .numerics import as_csr
from .recommender import RecommendationList, cf_recommend, edit_pop, top_k, train_cf, view_pop

logger = logging.getLogger(__name__)

RECALL_PERCENTILES = (50.0, 75.0, 90.0, 95.0, 99.0, 99.9)


def cohesion(topic_column, latents: np.ndarray, n: int = 20) -> float:
    """How tightly a topic's two poles cluster in latent space.

    Take the n articles with the largest column values and the n with the
    smallest; within each pole, average the pairwise cosine similarities of
    the article latents, then average the two pole means. Articles with a
    zero-norm latent are skipped (and logged) rather than treated as
    orthogonal to everything.
    """
    col = np.asarray(topic_column, dtype=np.float64).ravel()
    if col.size != latents.shape[0]:
        raise ValueError("topic column length must match latent rows")
    if 2 * n > col.size:
        raise ValueError(f"need at least {2 * n} articles, have {col.size}")
    idx = np.arange(col.size)
    pos = np.lexsort((idx, -col))[:n]
    neg = np.lexsort((idx, col))[:n]

    def pole_mean(members: np.ndarray) -> float:
        X = latents[members]
        norms = np.linalg.norm(X, axis=1)
        ok = norms > 0
        if np.count_nonzero(~ok):
            logger.info("cohesion: skipping %d zero-norm latents", np.count_nonzero(~ok))
        X = X[ok] / norms[ok][:, None]
        m = X.shape[0]
        if m < 2:
            return math.nan
        gram = X @ X.T
        iu = np.triu_indices(m, k=1)
        return float(gram[iu].mean())

    vals = [pole_mean(pos), pole_mean(neg)]
    vals = [v for v in vals if not math.isnan(v)]
    if not vals:
        raise ValueError("no pole had two articles with nonzero latents")
    return float(np.mean(vals))


@dataclass(frozen=True)
class CohesionReport:
    method: str
    per_topic: tuple[float, ...]
    mean: float
    ci_low: float
    ci_high: float


def cohesion_summary(
    topics,
    latents: np.ndarray,
    n: int = 20,
    n_questions: int | None = None,
    n_boot: int = 10000,
    seed: int = 0,
    ci: float = 0.95,
) -> CohesionReport:
    """Mean cohesion over the leading topic columns with a bootstrap percentile
    interval over topics (resampling topic scores with replacement)."""
    mat = topics.topics if hasattr(topics, "topics") else np.asarray(topics)
    method = getattr(topics, "method", "unknown")
    k = mat.shape[1] if n_questions is None else min(n_questions, mat.shape[1])
    if k < 2:
        raise ValueError("need at least 2 topics for an interval")
    per_topic = np.array([cohesion(mat[:, t], latents, n) for t in range(k)])
    rng = np.random.default_rng(seed)
    resamples = rng.choice(per_topic, size=(n_boot, k), replace=True).mean(axis=1)
    lo, hi = np.percentile(resamples, [(1 - ci) / 2 * 100, (1 + ci) / 2 * 100])
    return CohesionReport(
        method=method,
        per_topic=tuple(float(v) for v in per_topic),
        mean=float(per_topic.mean()),
        ci_low=float(lo),
        ci_high=float(hi),
    )


@dataclass(frozen=True)
class HoldoutSplit:
    users: np.ndarray  # eligible user rows
    holdouts: tuple[np.ndarray, ...]  # per-user held-out article indices
    train: sp.csr_matrix  # edit matrix with held-out cells zeroed
    n_excluded: int  # users without enough distinct edited articles


def holdout_users(
    edit_matrix: sp.csr_matrix, holdout_size: int = 20, seed: int = 0
) -> HoldoutSplit:
    """Per-user holdout: each user with strictly more than `holdout_size`
    distinct edited articles contributes a seeded sample of that many, zeroed
    out of the returned training matrix."""
    E = as_csr(edit_matrix)
    rng = np.random.default_rng(seed)
    row_nnz = np.diff(E.indptr)
    eligible = np.flatnonzero(row_nnz > holdout_size)
    if eligible.size == 0:
        raise ValueError(
            f"no user has more than {holdout_size} distinct edited articles"
        )
    train = E.copy()
    holdouts = []
    for u in eligible:
        start, end = train.indptr[u], train.indptr[u + 1]
        picks = rng.choice(end - start, size=holdout_size, replace=False)
        held = np.sort(train.indices[start + picks])
        holdouts.append(held)
        train.data[start + picks] = 0.0
    train.eliminate_zeros()
    return HoldoutSplit(
        users=eligible,
        holdouts=tuple(holdouts),
        train=train,
        n_excluded=int(E.shape[0] - eligible.size),
    )


def compute_septiles(values) -> np.ndarray:
    """Six interior cut points splitting `values` into seven bins."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 7:
        raise ValueError("need at least 7 values for septiles")
    return np.quantile(v, [i / 7 for i in range(1, 7)], method="linear")


def septile_weights(values, septiles: np.ndarray) -> np.ndarray:
    """Map raw affinities onto the 7-level response weights {-1, ..., 1}.

    A value equal to a cut point falls in the lower bin.
    """
    bins = np.searchsorted(septiles, np.asarray(values, dtype=np.float64), side="left")
    return bins / 3.0 - 1.0


def question_affinities(
    rated_rows: sp.csr_matrix, topic_matrix: np.ndarray, n_questions: int
) -> np.ndarray:
    """Per-(user, question) affinity: the binary rating row dotted with each
    topic column."""
    pattern = rated_rows.copy()
    pattern.data = np.ones_like(pattern.data)
    return np.asarray(pattern @ topic_matrix[:, :n_questions])


def simulate_responses(
    affinities: np.ndarray, stratified: bool = True, per_question: bool = False
) -> np.ndarray:
    """Turn a (users x questions) affinity table into response weights.

    Stratified mode bins affinities by septiles pooled over the whole table
    (or per question column when per_question is set); unstratified passes the
    raw affinities through as weights.
    """
    aff = np.atleast_2d(np.asarray(affinities, dtype=np.float64))
    if not stratified:
        return aff.copy()
    if per_question:
        out = np.empty_like(aff)
        for j in range(aff.shape[1]):
            out[:, j] = septile_weights(aff[:, j], compute_septiles(aff[:, j]))
        return out
    septiles = compute_septiles(aff.ravel())
    return septile_weights(aff, septiles)


def recall_at_k(recommended: np.ndarray, holdout: np.ndarray) -> float:
    if len(holdout) == 0:
        raise ValueError("empty holdout")
    hits = np.intersect1d(recommended, holdout).size
    return hits / len(holdout)


@dataclass(frozen=True)
class SimulationResult:
    method: str
    k: int
    recalls: np.ndarray
    mean_recall: float
    percentiles: dict[float, float]
    n_users: int
    n_excluded: int


def _summarize(method: str, k: int, recalls: list[float], n_excluded: int) -> SimulationResult:
    arr = np.array(recalls)
    pct = {p: float(np.percentile(arr, p)) for p in RECALL_PERCENTILES}
    return SimulationResult(
        method=method,
        k=k,
        recalls=arr,
        mean_recall=float(arr.mean()),
        percentiles=pct,
        n_users=arr.size,
        n_excluded=n_excluded,
    )


def run_offline_eval(
    edit_matrix: sp.csr_matrix,
    method: str,
    topics=None,
    view_counts=None,
    k: int = 300,
    holdout_size: int = 20,
    n_questions: int = 20,
    seed: int = 0,
    n_test_users: int | None = None,
    stratified: bool = True,
    per_question: bool = False,
    exclude_seen: bool = True,
    cf_dims: int = 50,
    cf_reg: float = 0.1,
    cf_iterations: int = 15,
) -> SimulationResult:
    """Simulated cold-start sessions scored against per-user held-out edits.

    For questionnaire methods the user's remaining (non-held-out) edits answer
    the questions; recommendations are ranked interest scores. Baselines rank
    by popularity or by the CF model; all of them see only the holdout-removed
    matrix, so no method trains on what it is scored against. precision@k is
    recall@k * holdout_size / k by construction and is asserted per user.
    """
    E = as_csr(edit_matrix)
    split = holdout_users(E, holdout_size, seed)
    users, holdouts, E_mod = split.users, split.holdouts, split.train
    if n_test_users is not None and n_test_users < users.size:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(users.size, size=n_test_users, replace=False))
        users = users[keep]
        holdouts = tuple(holdouts[i] for i in keep)

    topic_methods = {"content", "collab", "joint", "interest"}
    if method in topic_methods:
        if topics is None:
            raise ValueError(f"method {method!r} needs a topic matrix")
        mat = topics.topics if hasattr(topics, "topics") else np.asarray(topics)
        if n_questions > mat.shape[1]:
            raise ValueError(
                f"n_questions={n_questions} exceeds {mat.shape[1]} topics"
            )
        aff = question_affinities(E_mod[users], mat, n_questions)
        weights = simulate_responses(aff, stratified, per_question)
        interest = weights @ mat[:, :n_questions].T  # users x articles
    elif method == "edit-pop":
        pop = edit_pop(E_mod)
    elif method == "view-pop":
        if view_counts is None:
            raise ValueError("view-pop needs view counts")
        pop = view_pop(view_counts)
    elif method == "cf":
        model = train_cf(
            E_mod, dims=cf_dims, reg=cf_reg, iterations=cf_iterations, seed=seed
        )
    elif method == "random":
        rng_rand = np.random.default_rng(seed)
    else:
        raise ValueError(f"unknown method {method!r}")

    recalls = []
    for i, u in enumerate(users):
        seen = E_mod.indices[E_mod.indptr[u] : E_mod.indptr[u + 1]]
        exclude = seen if exclude_seen else None
        if method in topic_methods:
            rec = top_k(interest[i], k, exclude=exclude, method=method)
        elif method in ("edit-pop", "view-pop"):
            rec = top_k(pop, k, exclude=exclude, method=method)
        elif method == "cf":
            if exclude_seen:
                rec = cf_recommend(model, int(u), k)
            else:
                rec = top_k(model.Q @ model.P[int(u)], k, exclude=None, method="cf")
        else:
            scores = rng_rand.uniform(size=E.shape[1])
            rec = top_k(scores, k, exclude=exclude, method="random")
        r = recall_at_k(rec.article_indices, holdouts[i])
        precision = np.intersect1d(rec.article_indices, holdouts[i]).size / k
        assert abs(precision - r * len(holdouts[i]) / k) < 1e-12
        recalls.append(r)
    return _summarize(method, k, recalls, split.n_excluded)


def write_cohesion_table(reports, path) -> None:
    """TSV: one row per method with mean cohesion and its interval."""
    lines = ["method\tmean_cohesion\tci_low\tci_high\tn_topics"]
    for r in reports:
        lines.append(
            f"{r.method}\t{r.mean:.6f}\t{r.ci_low:.6f}\t{r.ci_high:.6f}\t{len(r.per_topic)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_recall_table(results, path) -> None:
    """TSV: one row per method with mean recall@k and its percentiles."""
    header = ["method", "k", "mean_recall", "n_users", "n_excluded"]
    header += [f"p{p:g}" for p in RECALL_PERCENTILES]
    lines = ["\t".join(header)]
    for r in sorted(results, key=lambda x: -x.mean_recall):
        row = [r.method, str(r.k), f"{r.mean_recall:.6f}", str(r.n_users), str(r.n_excluded)]
        row += [f"{r.percentiles[p]:.6f}" for p in RECALL_PERCENTILES]
        lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_summary(results) -> str:
    """Human-readable ranking of methods by mean recall."""
    out = []
    for r in sorted(results, key=lambda x: -x.mean_recall):
        out.append(
            f"{r.method:>12}  recall@{r.k} = {r.mean_recall:.5f}  "
            f"(median {r.percentiles[50.0]:.5f}, p95 {r.percentiles[95.0]:.5f}, "
            f"{r.n_users} users)"
        )
    return "\n".join(out)
