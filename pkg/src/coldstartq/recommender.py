"""Turning questionnaire responses into ranked article lists, plus the
popularity and collaborative-filtering baselines used for comparison.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .numerics import as_csr
from .questionnaire import Likert, likert_to_score

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterestVector:
    """Per-article interest scores: the response-weighted sum of topic vectors."""

    scores: np.ndarray
    weights: np.ndarray  # one signed weight per answered question
    no_signal: bool  # every response mapped to weight zero


@dataclass(frozen=True)
class RecommendationList:
    article_indices: np.ndarray
    scores: np.ndarray
    method: str

    def __len__(self) -> int:
        return len(self.article_indices)


def interest_vector(topics, responses) -> InterestVector:
    """Weighted sum of topic columns, one weight per response.

    `responses` is a sequence of Likert levels (or raw floats), one per topic
    column used; fewer responses than columns uses the leading columns.
    """
    mat = topics.topics if hasattr(topics, "topics") else np.asarray(topics)
    weights = np.array(
        [likert_to_score(r) if isinstance(r, Likert) else float(r) for r in responses]
    )
    if weights.size > mat.shape[1]:
        raise ValueError(
            f"{weights.size} responses but only {mat.shape[1]} topic columns"
        )
    scores = mat[:, : weights.size] @ weights
    return InterestVector(
        scores=scores, weights=weights, no_signal=bool(np.all(weights == 0.0))
    )


def top_k(
    scores: np.ndarray, k: int, exclude=None, method: str = "interest"
) -> RecommendationList:
    """Highest-k scores, ties toward the lower article index; excluded indices
    are removed before ranking. k larger than the remaining pool is an error."""
    scores = np.asarray(scores, dtype=np.float64)
    mask = np.ones(scores.size, dtype=bool)
    if exclude is not None:
        excl = np.asarray(list(exclude) if not isinstance(exclude, np.ndarray) else exclude, dtype=np.int64)
        mask[excl] = False
    pool = np.flatnonzero(mask)
    if k < 0 or k > pool.size:
        raise ValueError(f"k={k} outside the {pool.size} available articles")
    sub = scores[pool]
    order = np.lexsort((np.arange(pool.size), -sub))[:k]
    chosen = pool[order]
    return RecommendationList(chosen, scores[chosen], method)


def _kmeans(X: np.ndarray, n_clusters: int, seed: int, max_iter: int = 100):
    """Lloyd iterations with seeded distance-squared (k-means++ style) init.

    Spreading the initial centroids keeps well-separated groups from sharing
    one centroid. Ties in assignment go to the lowest centroid index. Clusters
    may end up empty; callers deal with that.
    """
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    centroids = np.empty((n_clusters, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    for c in range(1, n_clusters):
        d2min = ((X[:, None, :] - centroids[None, :c, :]) ** 2).sum(axis=2).min(axis=1)
        total = d2min.sum()
        if total > 0:
            centroids[c] = X[rng.choice(n, p=d2min / total)]
        else:
            centroids[c] = X[rng.integers(n)]
    labels = np.zeros(n, dtype=np.int64)
    for it in range(max_iter):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # argmin takes the first minimum
        if it > 0 and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(n_clusters):
            members = X[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    return labels


def diversify(
    ranked: RecommendationList,
    latents: np.ndarray,
    k: int,
    seed: int,
) -> RecommendationList:
    """Pick k articles spread across k latent-space clusters of the ranked pool.

    The pool is clustered with k-means on the article latents; one article is
    drawn uniformly (seeded) from each non-empty cluster. Empty clusters are
    backfilled with the highest-scored articles not yet chosen. Output is
    ordered by descending score.
    """
    pool = ranked.article_indices
    if k < 1 or k > pool.size:
        raise ValueError(f"k={k} outside the pool of {pool.size}")
    if k == pool.size:
        chosen = pool.copy()
    else:
        labels = _kmeans(latents[pool], k, seed)
        rng = np.random.default_rng(seed)
        chosen_list = []
        for c in range(k):
            members = np.flatnonzero(labels == c)
            if members.size:
                chosen_list.append(int(pool[rng.choice(members)]))
        missing = k - len(chosen_list)
        if missing:
            taken = set(chosen_list)
            for cand in pool:  # pool is already score-ordered
                if int(cand) not in taken:
                    chosen_list.append(int(cand))
                    taken.add(int(cand))
                    missing -= 1
                    if missing == 0:
                        break
        chosen = np.array(chosen_list, dtype=np.int64)
    # reorder by score, ties toward lower article index
    pos = {int(a): i for i, a in enumerate(ranked.article_indices)}
    sc = np.array([ranked.scores[pos[int(a)]] for a in chosen])
    order = np.lexsort((chosen, -sc))
    return RecommendationList(chosen[order], sc[order], ranked.method + "+diversified")


def edit_pop(edit_matrix: sp.csr_matrix) -> np.ndarray:
    """Per-article total edit count."""
    return np.asarray(as_csr(edit_matrix).sum(axis=0)).ravel()


def view_pop(view_counts) -> np.ndarray:
    """Per-article view totals, validated non-negative."""
    v = np.asarray(view_counts, dtype=np.float64).ravel()
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("view counts must be finite and non-negative")
    return v


@dataclass(frozen=True)
class CfModel:
    P: np.ndarray  # user factors
    Q: np.ndarray  # article factors
    rated: sp.csr_matrix  # binary pattern of observed (user, article) cells
    objective_log: tuple[float, ...]


def _cf_objective(P, Q, E, kappa, epsilon, reg) -> float:
    rows, cols = E.nonzero()
    e = np.asarray(E[rows, cols]).ravel()
    c = 1.0 + kappa * np.log1p(e / epsilon)
    pred_nz = np.einsum("ij,ij->i", P[rows], Q[cols])
    gram = (P.T @ P) @ (Q.T @ Q)
    # all cells at weight 1 with r=0, corrected on the observed cells
    val = float(np.trace(gram)) + float(np.sum(c * (1 - pred_nz) ** 2 - pred_nz**2))
    return val + reg * (float(np.sum(P * P)) + float(np.sum(Q * Q)))


def train_cf(
    edit_matrix: sp.csr_matrix,
    dims: int = 50,
    reg: float = 0.1,
    iterations: int = 15,
    kappa: float = 10.0,
    epsilon: float = 20.0,
    seed: int = 0,
) -> CfModel:
    """Alternating least squares for the confidence-weighted implicit model.

    Each user solve uses (Q^T Q + Q_u^T (C_u - I) Q_u + reg*I) x = Q_u^T C_u r_u,
    exploiting that unobserved cells all carry confidence 1 and rating 0; the
    article solves mirror it. The exact objective is logged per sweep and must
    not increase.
    """
    E = as_csr(edit_matrix)
    n_users, n_articles = E.shape
    if dims > min(E.shape):
        raise ValueError(f"dims={dims} exceeds min(matrix shape)={min(E.shape)}")
    rng = np.random.default_rng(seed)
    P = rng.normal(scale=0.1, size=(n_users, dims))
    Q = rng.normal(scale=0.1, size=(n_articles, dims))
    Ecsc = E.tocsc()
    eye = np.eye(dims)

    def solve_side(X, other, mat, indptr, indices, data):
        gram = other.T @ other
        for i in range(X.shape[0]):
            start, end = indptr[i], indptr[i + 1]
            idx = indices[start:end]
            if idx.size == 0:
                X[i] = 0.0
                continue
            c = 1.0 + kappa * np.log1p(data[start:end] / epsilon)
            Yi = other[idx]
            A = gram + Yi.T @ ((c - 1.0)[:, None] * Yi) + reg * eye
            b = Yi.T @ c  # ratings are all 1 on observed cells
            X[i] = np.linalg.solve(A, b)

    log = [_cf_objective(P, Q, E, kappa, epsilon, reg)]
    for sweep in range(iterations):
        solve_side(P, Q, E, E.indptr, E.indices, E.data)
        solve_side(Q, P, Ecsc, Ecsc.indptr, Ecsc.indices, Ecsc.data)
        obj = _cf_objective(P, Q, E, kappa, epsilon, reg)
        if obj > log[-1] * (1.0 + 1e-9):
            raise FloatingPointError(
                f"ALS objective increased at sweep {sweep}: {log[-1]:.6g} -> {obj:.6g}"
            )
        log.append(obj)
    pattern = E.copy()
    pattern.data = np.ones_like(pattern.data)
    return CfModel(P=P, Q=Q, rated=pattern, objective_log=tuple(log))


def cf_recommend(model: CfModel, user_index: int, k: int) -> RecommendationList:
    """Top-k unrated articles by predicted preference for a known user."""
    row = model.rated[user_index]
    if row.nnz == 0:
        raise LookupError("cold user: CF inapplicable")
    scores = model.Q @ model.P[user_index]
    return top_k(scores, k, exclude=row.indices, method="cf")
