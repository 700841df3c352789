"""Topic extraction: content-only SVD, collaborative-only SVD, and the joint
confidence-weighted factorization with content anchor and soft orthogonality.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .numerics import SvdResult, as_csr, row_normalize, truncated_svd

logger = logging.getLogger(__name__)


class TrainingDiverged(Exception):
    """Mini-batch optimization blew up (epoch loss > 10x the initial loss)."""


@dataclass(frozen=True)
class TopicMatrix:
    """Article x topic matrix; column i is the i-th topic vector."""

    topics: np.ndarray
    method: str  # "content" | "collab" | "joint"

    @property
    def n_articles(self) -> int:
        return self.topics.shape[0]

    @property
    def n_topics(self) -> int:
        return self.topics.shape[1]


@dataclass(frozen=True)
class HyperParams:
    alpha: float = 0.1  # user-factor regularization
    lam: float = 0.1  # content-anchor weight
    theta: float = 0.1  # soft-orthogonality weight
    kappa: float = 10.0  # confidence scale
    epsilon: float = 20.0  # confidence offset
    latent_dims: int = 200
    learning_rate: float = 0.01
    batch_size: int = 8192
    epochs: int = 50
    nonzero_fraction: float = 0.9
    reg_scale: float = 1.0  # regularizer strength applied per mini-batch step

    def __post_init__(self):
        for name in ("alpha", "lam", "theta", "kappa", "epsilon", "reg_scale"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (0.0 < self.nonzero_fraction < 1.0):
            raise ValueError("nonzero_fraction must be in (0, 1)")
        if self.latent_dims < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("latent_dims/batch_size must be >= 1, epochs >= 0")


@dataclass(frozen=True)
class JointModel:
    P: np.ndarray  # user latents, n_users x d
    Q: np.ndarray  # article latents, n_articles x d
    Qbar: np.ndarray  # content anchor, n_articles x d
    hyperparams: HyperParams
    loss_log: tuple[float, ...] = field(repr=False, default=())

    def topic_matrix(self) -> TopicMatrix:
        return TopicMatrix(topics=self.Q.copy(), method="joint")


def rating(e) -> np.ndarray | int:
    """Inferred binary rating: 1 for any positive edit count, else 0."""
    if np.isscalar(e):
        return 1 if e > 0 else 0
    return (np.asarray(e) > 0).astype(np.float64)


def confidence(e, kappa: float = 10.0, epsilon: float = 20.0):
    """Confidence in the inferred rating: 1 + kappa * ln(1 + e / epsilon)."""
    return 1.0 + kappa * np.log1p(np.asarray(e, dtype=np.float64) / epsilon)


def _svd_topics(matrix: sp.csr_matrix, k: int, seed: int, method: str) -> TopicMatrix:
    matrix = as_csr(matrix)
    n_articles = matrix.shape[1]
    if k == 0:
        return TopicMatrix(np.zeros((n_articles, 0)), method)
    if matrix.nnz == 0:
        raise ValueError("matrix has no nonzero entries (rank deficient)")
    if k + 1 > min(matrix.shape):
        raise ValueError(
            f"need rank {k + 1} (k topics plus the discarded first component), "
            f"matrix allows at most {min(matrix.shape)}"
        )
    res = truncated_svd(matrix, k=k + 1, seed=seed)
    full = res.V * res.singular_values[None, :]
    # First component mostly captures the data mean (no centering); drop it.
    return TopicMatrix(topics=full[:, 1 : k + 1].copy(), method=method)


def content_topics(tfidf_matrix: sp.csr_matrix, k: int, seed: int = 0) -> TopicMatrix:
    """Topic vectors from the SVD of the term x article TF-IDF matrix."""
    return _svd_topics(tfidf_matrix, k, seed, "content")


def collab_topics(edit_matrix: sp.csr_matrix, k: int, seed: int = 0) -> TopicMatrix:
    """Topic vectors from the SVD of the user x article edit-count matrix."""
    return _svd_topics(edit_matrix, k, seed, "collab")


def build_qbar(content: TopicMatrix, width: int = 200) -> np.ndarray:
    """Content anchor: the first `width` content topic columns, row-normalized."""
    if content.n_topics < width:
        raise ValueError(
            f"content topic matrix has {content.n_topics} columns, need >= {width}"
        )
    return row_normalize(content.topics[:, :width])


def _cell_terms(E: sp.csr_matrix, cells: np.ndarray, hp: HyperParams):
    """Edit counts, ratings and confidences for an array of (user, article) cells."""
    if cells.size == 0:
        empty = np.zeros(0)
        return empty, empty, empty
    e = np.asarray(E[cells[:, 0], cells[:, 1]]).ravel()
    return e, rating(e), confidence(e, hp.kappa, hp.epsilon)


def _offdiag_gram(Q: np.ndarray) -> np.ndarray:
    g = Q.T @ Q
    np.fill_diagonal(g, 0.0)
    return g


def joint_loss(
    P: np.ndarray,
    Q: np.ndarray,
    Qbar: np.ndarray,
    E: sp.csr_matrix,
    cells: np.ndarray,
    hp: HyperParams,
) -> float:
    """Objective value: confidence-weighted squared error over the given cells
    plus the full-matrix regularizer terms."""
    cells = np.atleast_2d(np.asarray(cells, dtype=np.int64)).reshape(-1, 2)
    _, r, c = _cell_terms(E, cells, hp)
    if cells.size:
        pred = np.einsum("ij,ij->i", P[cells[:, 0]], Q[cells[:, 1]])
        batch = float(np.sum(c * (r - pred) ** 2))
    else:
        batch = 0.0
    reg = hp.reg_scale * (
        hp.alpha * float(np.sum(P * P))
        + hp.lam * float(np.sum((Q - Qbar) ** 2))
        + hp.theta * float(np.sum(_offdiag_gram(Q) ** 2))
    )
    total = batch + reg
    if not math.isfinite(total):
        raise FloatingPointError("non-finite joint loss")
    return total


def joint_gradient(
    P: np.ndarray,
    Q: np.ndarray,
    Qbar: np.ndarray,
    E: sp.csr_matrix,
    cells: np.ndarray,
    hp: HyperParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of joint_loss w.r.t. P and Q.

    The batch term touches only rows referenced by the cells; regularizer
    gradients are full, including d/dQ of the orthogonality penalty,
    4 * Q @ (Q^T Q - diag(Q^T Q)).
    """
    cells = np.atleast_2d(np.asarray(cells, dtype=np.int64)).reshape(-1, 2)
    dP = np.zeros_like(P)
    dQ = np.zeros_like(Q)
    if cells.size:
        rows, cols = cells[:, 0], cells[:, 1]
        _, r, c = _cell_terms(E, cells, hp)
        pred = np.einsum("ij,ij->i", P[rows], Q[cols])
        g = -2.0 * c * (r - pred)
        np.add.at(dP, rows, g[:, None] * Q[cols])
        np.add.at(dQ, cols, g[:, None] * P[rows])
    dP += hp.reg_scale * 2.0 * hp.alpha * P
    dQ += hp.reg_scale * (
        2.0 * hp.lam * (Q - Qbar) + 4.0 * hp.theta * (Q @ _offdiag_gram(Q))
    )
    if not (np.all(np.isfinite(dP)) and np.all(np.isfinite(dQ))):
        raise FloatingPointError("non-finite gradient")
    return dP, dQ


def full_joint_loss(
    P: np.ndarray, Q: np.ndarray, Qbar: np.ndarray, E: sp.csr_matrix, hp: HyperParams
) -> float:
    """Objective over ALL (user, article) cells, computed without materializing
    the dense prediction matrix: zero cells contribute pred^2 (c=1, r=0)."""
    gram = (P.T @ P) @ (Q.T @ Q)
    sum_sq_all = float(np.trace(gram))
    rows, cols = E.nonzero()
    e = np.asarray(E[rows, cols]).ravel()
    pred = np.einsum("ij,ij->i", P[rows], Q[cols])
    c = confidence(e, hp.kappa, hp.epsilon)
    nz = float(np.sum(c * (1.0 - pred) ** 2 - pred**2))
    reg = hp.reg_scale * (
        hp.alpha * float(np.sum(P * P))
        + hp.lam * float(np.sum((Q - Qbar) ** 2))
        + hp.theta * float(np.sum(_offdiag_gram(Q) ** 2))
    )
    return sum_sq_all + nz + reg


def _sample_cells(
    E: sp.csr_matrix, batch_size: int, rng: np.random.Generator, nonzero_fraction: float
) -> np.ndarray:
    n_rows, n_cols = E.shape
    total = n_rows * n_cols
    flat_nz = np.sort(_flat_nonzeros(E))
    nnz = flat_nz.size
    if nnz == 0:
        raise ValueError("edit matrix has no nonzero entries")

    quota_nz = int(math.ceil(nonzero_fraction * batch_size))
    quota_nz = min(quota_nz, batch_size)
    quota_zero = batch_size - quota_nz

    if nnz >= quota_nz:
        chosen_nz = rng.choice(flat_nz, size=quota_nz, replace=False)
    else:
        chosen_nz = rng.choice(flat_nz, size=quota_nz, replace=True)

    zeros: list[int] = []
    n_zero_cells = total - nnz
    if n_zero_cells == 0:
        if quota_zero:
            logger.info(
                "matrix is fully dense; zero quota (%d cells) unfillable", quota_zero
            )
        quota_zero = 0
    taken: set[int] = set()
    attempts = 0
    max_attempts = 1000 * max(quota_zero, 1) + 1000
    while len(zeros) < quota_zero and attempts < max_attempts:
        cand = int(rng.integers(0, total))
        attempts += 1
        if cand in taken:
            continue
        pos = np.searchsorted(flat_nz, cand)
        if pos < nnz and flat_nz[pos] == cand:
            continue
        taken.add(cand)
        zeros.append(cand)
    if len(zeros) < quota_zero:
        logger.warning(
            "zero-cell quota unfilled: %d of %d after %d attempts",
            len(zeros),
            quota_zero,
            attempts,
        )
    flat = np.concatenate([chosen_nz, np.array(zeros, dtype=np.int64)])
    return np.column_stack([flat // n_cols, flat % n_cols]).astype(np.int64)


def _flat_nonzeros(E: sp.csr_matrix) -> np.ndarray:
    rows, cols = E.nonzero()
    return rows.astype(np.int64) * E.shape[1] + cols.astype(np.int64)


def sample_minibatch(
    E: sp.csr_matrix, batch_size: int, seed: int, nonzero_fraction: float = 0.9
) -> np.ndarray:
    """Seeded mini-batch of (user, article) cells: ceil(f * batch_size) nonzero
    cells (without replacement when possible) plus zero cells by rejection."""
    rng = np.random.default_rng(seed)
    return _sample_cells(as_csr(E), batch_size, rng, nonzero_fraction)


def train_joint(
    E: sp.csr_matrix, Qbar: np.ndarray, hp: HyperParams, seed: int
) -> JointModel:
    """Mini-batch gradient descent on the joint objective.

    Q starts at the content anchor Qbar, P at row-normalized uniform [-1, 1]
    noise. The learning rate decays as 1/sqrt(epoch). The full objective is
    logged per epoch; an epoch loss above 10x the initial value aborts.
    """
    E = as_csr(E)
    n_users = E.shape[0]
    d = Qbar.shape[1]
    if hp.latent_dims != d:
        hp = replace(hp, latent_dims=d)
    rng = np.random.default_rng(seed)
    Q = Qbar.copy()
    P = row_normalize(rng.uniform(-1.0, 1.0, size=(n_users, d)))

    initial = full_joint_loss(P, Q, Qbar, E, hp)
    losses = [initial]
    nnz = E.nnz
    steps_per_epoch = max(1, math.ceil(nnz / max(1, round(hp.nonzero_fraction * hp.batch_size))))
    for epoch in range(1, hp.epochs + 1):
        lr = hp.learning_rate / math.sqrt(epoch)
        for _ in range(steps_per_epoch):
            cells = _sample_cells(E, hp.batch_size, rng, hp.nonzero_fraction)
            dP, dQ = joint_gradient(P, Q, Qbar, E, cells, hp)
            P -= lr * dP
            Q -= lr * dQ
        loss = full_joint_loss(P, Q, Qbar, E, hp)
        if not math.isfinite(loss) or loss > 10.0 * initial:
            raise TrainingDiverged(
                f"epoch {epoch}: loss {loss:.6g} exceeds 10x initial {initial:.6g} "
                f"(lr={lr:.3g}, batch_size={hp.batch_size})"
            )
        losses.append(loss)
    if losses[-1] > losses[0]:
        logger.warning(
            "joint training did not reduce the objective: %.6g -> %.6g",
            losses[0],
            losses[-1],
        )
    else:
        logger.info("joint training loss %.6g -> %.6g", losses[0], losses[-1])
    return JointModel(P=P, Q=Q, Qbar=Qbar.copy(), hyperparams=hp, loss_log=tuple(losses))


def validation_split(
    E: sp.csr_matrix, user_fraction: float, edit_fraction: float, seed: int
) -> tuple[sp.csr_matrix, np.ndarray]:
    """Hold out a fraction of edits from a fraction of users.

    Returns (train matrix with held-out cells zeroed, heldout (n, 2) cell
    array). Users with fewer than 2 nonzeros are never selected.
    """
    if not (0.0 < user_fraction < 1.0 and 0.0 < edit_fraction < 1.0):
        raise ValueError("fractions must be in (0, 1)")
    E = as_csr(E)
    rng = np.random.default_rng(seed)
    row_nnz = np.diff(E.indptr)
    eligible = np.flatnonzero(row_nnz >= 2)
    n_select = min(int(user_fraction * E.shape[0]), eligible.size)
    selected = rng.choice(eligible, size=n_select, replace=False) if n_select else np.array([], dtype=np.int64)

    train = E.copy()
    held: list[tuple[int, int]] = []
    for u in np.sort(selected):
        start, end = train.indptr[u], train.indptr[u + 1]
        n_held = int(edit_fraction * (end - start))
        if n_held == 0:
            continue
        picks = rng.choice(end - start, size=n_held, replace=False)
        for p in picks:
            held.append((int(u), int(train.indices[start + p])))
            train.data[start + p] = 0.0
    train.eliminate_zeros()
    heldout = np.array(held, dtype=np.int64).reshape(-1, 2)
    return train, heldout


def validation_mse(
    model: JointModel, E_original: sp.csr_matrix, heldout: np.ndarray
) -> float:
    """Mean confidence-weighted squared error on held-out cells (the batch term
    of the objective, averaged)."""
    if heldout.size == 0:
        raise ValueError("no held-out cells")
    e = np.asarray(E_original[heldout[:, 0], heldout[:, 1]]).ravel()
    r = rating(e)
    c = confidence(e, model.hyperparams.kappa, model.hyperparams.epsilon)
    pred = np.einsum("ij,ij->i", model.P[heldout[:, 0]], model.Q[heldout[:, 1]])
    return float(np.mean(c * (r - pred) ** 2))


@dataclass(frozen=True)
class GridPoint:
    hyperparams: HyperParams
    validation_mse: float = math.nan
    mean_cohesion: float = math.nan
    failed: bool = False


@dataclass(frozen=True)
class GridSearchResult:
    points: tuple[GridPoint, ...]  # ranked by the default-pick score
    frontier: tuple[GridPoint, ...]
    best: GridPoint


def _pareto_frontier(points: list[GridPoint]) -> list[GridPoint]:
    # minimize mse, maximize cohesion
    frontier = []
    for p in points:
        dominated = any(
            (q.validation_mse <= p.validation_mse and q.mean_cohesion >= p.mean_cohesion)
            and (q.validation_mse < p.validation_mse or q.mean_cohesion > p.mean_cohesion)
            for q in points
        )
        if not dominated:
            frontier.append(p)
    return frontier


def grid_search(
    E: sp.csr_matrix,
    Qbar: np.ndarray,
    grid,
    seed: int,
    base_hp: HyperParams | None = None,
    user_fraction: float = 0.1,
    edit_fraction: float = 0.2,
    n_questions: int = 20,
    n_per_list: int = 20,
) -> GridSearchResult:
    """Evaluate (alpha, lambda, theta) grid points on one shared validation split.

    Each point trains from scratch with the same seed; points are scored by
    held-out confidence-weighted MSE and by mean cohesion over the first
    n_questions topics of the trained Q. Returns all points ranked, the Pareto
    frontier, and a default pick minimizing normalized(mse) - normalized(cohesion).
    """
    from .evaluation import cohesion  # local import; evaluation depends on topics

    grid = [tuple(g) for g in grid]
    if not grid:
        raise ValueError("empty hyperparameter grid")
    base = base_hp or HyperParams(latent_dims=Qbar.shape[1])
    E = as_csr(E)
    train, heldout = validation_split(E, user_fraction, edit_fraction, seed)
    if heldout.size == 0:
        raise ValueError("validation split produced no held-out cells")

    evaluated: list[GridPoint] = []
    for alpha, lam, theta in grid:
        hp = replace(base, alpha=alpha, lam=lam, theta=theta, latent_dims=Qbar.shape[1])
        try:
            model = train_joint(train, Qbar, hp, seed)
        except TrainingDiverged as exc:
            logger.warning("grid point (%g, %g, %g) failed: %s", alpha, lam, theta, exc)
            evaluated.append(GridPoint(hp, failed=True))
            continue
        mse = validation_mse(model, E, heldout)
        n_topics = min(n_questions, model.Q.shape[1])
        scores = [
            cohesion(model.Q[:, i], model.Q, n_per_list) for i in range(n_topics)
        ]
        evaluated.append(GridPoint(hp, mse, float(np.mean(scores))))

    ok = [p for p in evaluated if not p.failed]
    if not ok:
        raise TrainingDiverged("every grid point failed")

    mses = np.array([p.validation_mse for p in ok])
    cohs = np.array([p.mean_cohesion for p in ok])

    def norm(v: np.ndarray) -> np.ndarray:
        span = v.max() - v.min()
        return (v - v.min()) / span if span > 0 else np.zeros_like(v)

    pick_scores = norm(mses) - norm(cohs)
    order = np.argsort(pick_scores, kind="stable")
    ranked = [ok[i] for i in order] + [p for p in evaluated if p.failed]
    frontier = _pareto_frontier(ok)
    return GridSearchResult(tuple(ranked), tuple(frontier), ranked[0])
