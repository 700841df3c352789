"""Release acceptance checks, one test per criterion.

Each test prints a single [PASS]/[FAIL] verdict line (run with -s to see them
alongside the pytest dots). These are the binding end-to-end guarantees; the
unit suites cover the same ground in finer grain.
"""

import math
import time

import numpy as np
import scipy.sparse as sp
from fastapi.testclient import TestClient

import _synth
from coldstartq.corpus import FilterConfig, filter_corpus
from coldstartq.evaluation import (
    cohesion,
    cohesion_summary,
    compute_septiles,
    holdout_users,
    question_affinities,
    recall_at_k,
    run_offline_eval,
    simulate_responses,
)
from coldstartq.numerics import row_normalize, tfidf, truncated_svd
from coldstartq.questionnaire import Likert, generate_questions, likert_to_score
from coldstartq.recommender import interest_vector, top_k
from coldstartq.service import ServiceConfig, SessionStore, create_app
from coldstartq.topics import (
    HyperParams,
    TopicMatrix,
    build_qbar,
    confidence,
    content_topics,
    joint_gradient,
    joint_loss,
    rating,
    train_joint,
)


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" — {detail}"
    print(line)
    assert ok, line


# --------------------------------------------------------------------------
# 1. Analytic gradient vs central finite differences


def test_gradient_against_finite_differences():
    t0 = time.monotonic()
    h = 1e-5
    worst = 0.0
    rng = np.random.default_rng(42)
    for _ in range(20):
        n_u = int(rng.integers(4, 11))
        n_a = int(rng.integers(5, 13))
        d = int(rng.integers(2, 5))
        E = sp.random(n_u, n_a, density=0.4,
                      random_state=int(rng.integers(1 << 31)), format="csr")
        E.data = rng.integers(1, 60, size=E.nnz).astype(np.float64)
        P = rng.normal(size=(n_u, d))
        Q = rng.normal(size=(n_a, d))
        Qbar = row_normalize(rng.normal(size=(n_a, d)))
        hp = HyperParams(
            alpha=float(rng.uniform(0.05, 0.5)),
            lam=float(rng.uniform(0.05, 0.5)),
            theta=float(rng.uniform(0.05, 0.5)),
            latent_dims=d,
        )
        flat = rng.choice(n_u * n_a, size=min(16, n_u * n_a), replace=False)
        cells = np.column_stack([flat // n_a, flat % n_a])
        dP, dQ = joint_gradient(P, Q, Qbar, E, cells, hp)
        analytic = np.concatenate([dP.ravel(), dQ.ravel()])
        fd = np.empty_like(analytic)
        pos = 0
        for arr in (P, Q):
            view = arr.ravel()
            for i in range(view.size):
                orig = view[i]
                view[i] = orig + h
                up = joint_loss(P, Q, Qbar, E, cells, hp)
                view[i] = orig - h
                down = joint_loss(P, Q, Qbar, E, cells, hp)
                view[i] = orig
                fd[pos] = (up - down) / (2 * h)
                pos += 1
        worst = max(worst, float(np.linalg.norm(analytic - fd) / np.linalg.norm(fd)))
    elapsed = time.monotonic() - t0
    _report(
        "gradient matches finite differences",
        worst < 1e-4 and elapsed < 10.0,
        f"max relative error {worst:.2e} over 20 instances in {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# 2. Truncated SVD vs dense full-SVD oracle


def test_svd_against_dense_oracle():
    t0 = time.monotonic()
    worst_sv, worst_recon = 0.0, 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        # Planted-rank instance: truncation at the true rank is exact.
        n_r = int(rng.integers(50, 201))
        n_c = int(rng.integers(50, 201))
        r = int(rng.integers(3, 13))
        M = rng.normal(size=(n_r, r)) @ rng.normal(size=(r, n_c))
        res = truncated_svd(M, k=r, seed=seed)
        s_true = np.linalg.svd(M, compute_uv=False)[:r]
        worst_sv = max(worst_sv, float(np.max(np.abs(res.singular_values - s_true) / s_true)))
        recon = (res.U * res.singular_values) @ res.V.T
        worst_recon = max(worst_recon, float(np.linalg.norm(M - recon) / np.linalg.norm(M)))
        # Dense-spectrum instance at full k: every singular value recovered.
        A = rng.normal(size=(40, 30))
        res2 = truncated_svd(A, k=30, seed=seed)
        s2 = np.linalg.svd(A, compute_uv=False)
        worst_sv = max(worst_sv, float(np.max(np.abs(res2.singular_values - s2) / s2)))
        recon2 = (res2.U * res2.singular_values) @ res2.V.T
        worst_recon = max(worst_recon, float(np.linalg.norm(A - recon2) / np.linalg.norm(A)))
    elapsed = time.monotonic() - t0
    _report(
        "truncated SVD matches dense oracle",
        worst_sv < 1e-6 and worst_recon < 1e-6 and elapsed < 30.0,
        f"sv err {worst_sv:.2e}, recon err {worst_recon:.2e}, 10 seeds in {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# 3. Rating / confidence / response-score / interest-vector exactness


def test_scalar_transforms_bit_for_bit():
    rng = np.random.default_rng(7)
    worst = 0.0

    e_vals = np.concatenate([[0.0], rng.integers(1, 500, size=40).astype(float),
                             rng.uniform(0.0, 300.0, size=40)])
    for e in e_vals:
        r_oracle = 1.0 if e > 0 else 0.0
        worst = max(worst, abs(float(rating(e)) - r_oracle))
        c_oracle = 1.0 + 10.0 * math.log(1.0 + e / 20.0)
        worst = max(worst, abs(float(confidence(e)) - c_oracle))

    expected_scores = {
        Likert.A_GREAT: 1.0,
        Likert.A_MODERATE: 2.0 / 3.0,
        Likert.A_SLIGHT: 1.0 / 3.0,
        Likert.NONE: 0.0,
        Likert.B_SLIGHT: -1.0 / 3.0,
        Likert.B_MODERATE: -2.0 / 3.0,
        Likert.B_GREAT: -1.0,
    }
    for level, score in expected_scores.items():
        worst = max(worst, abs(likert_to_score(level) - score))

    levels = list(Likert)
    for _ in range(20):
        n_articles, n_topics = int(rng.integers(3, 30)), int(rng.integers(1, 8))
        topics = rng.normal(size=(n_articles, n_topics))
        responses = [levels[int(rng.integers(7))] for _ in range(n_topics)]
        iv = interest_vector(topics, responses)
        for a in range(n_articles):
            acc = 0.0
            for t in range(n_topics):
                acc += likert_to_score(responses[t]) * topics[a, t]
            worst = max(worst, abs(iv.scores[a] - acc))

    _report(
        "rating/confidence/response scores/interest vector exact",
        worst < 1e-12,
        f"max deviation from scalar oracles {worst:.2e}",
    )


# --------------------------------------------------------------------------
# 4. Cohesion metric


def test_cohesion_metric_properties():
    worst = 0.0

    identical = np.tile([1.0, 2.0, -0.5], (12, 1))
    worst = max(worst, abs(cohesion(np.arange(12.0), identical, n=4) - 1.0))

    half = np.zeros((6, 3))
    half[0], half[1], half[2] = [1, 0, 0], [0, 1, 0], [0, 0, 1]
    half[3:] = [2.0, 2.0, 0.0]
    col = np.array([6.0, 5.0, 4.0, -4.0, -5.0, -6.0])
    worst = max(worst, abs(cohesion(col, half, n=3) - 0.5))

    rng = np.random.default_rng(12)
    oracle_worst = 0.0
    for _ in range(10):
        latents = rng.normal(size=(40, 5))
        scores = rng.normal(size=40)
        n = 6
        idx = np.arange(40)
        poles = (np.lexsort((idx, -scores))[:n], np.lexsort((idx, scores))[:n])
        means = []
        for pole in poles:
            sims = []
            for i in range(n):
                for j in range(i + 1, n):
                    a, b = latents[pole[i]], latents[pole[j]]
                    sims.append(float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b)))
            means.append(np.mean(sims))
        oracle_worst = max(oracle_worst, abs(cohesion(scores, latents, n=n) - np.mean(means)))

    tm = TopicMatrix(rng.normal(size=(40, 6)), "content")
    rep = cohesion_summary(tm, rng.normal(size=(40, 4)), n=5, n_boot=4000, seed=0)
    ci_ok = rep.ci_low <= rep.mean <= rep.ci_high

    _report(
        "cohesion metric exact and bootstrap interval sane",
        worst < 1e-12 and oracle_worst < 1e-10 and ci_ok,
        f"construction deviation {worst:.2e}, loop-oracle deviation {oracle_worst:.2e}, "
        f"CI [{rep.ci_low:.3f}, {rep.ci_high:.3f}] brackets mean {rep.mean:.3f}",
    )


# --------------------------------------------------------------------------
# 5. Offline protocol: septile binning oracle + precision/recall identity


def test_offline_protocol_equivalence():
    pc = _synth.planted_corpus(
        3, n_users=50, n_articles=120, n_terms=200, n_clusters=5,
        edits_per_user=30, mixed_fraction=0.0,
    )
    E = pc.E
    tm = content_topics(tfidf(pc.counts), k=5, seed=0)
    split = holdout_users(E, holdout_size=20, seed=0)
    aff = question_affinities(split.train[split.users], tm.topics, n_questions=5)
    weights = simulate_responses(aff)

    # Brute-force binning oracle: manual quantile interpolation + per-value scan.
    pooled = np.sort(aff.ravel())
    n = pooled.size
    boundaries = []
    for i in range(1, 7):
        pos = (i / 7) * (n - 1)
        lo = int(math.floor(pos))
        frac = pos - lo
        hi = min(lo + 1, n - 1)
        boundaries.append(pooled[lo] + frac * (pooled[hi] - pooled[lo]))
    oracle = np.empty_like(aff)
    for u in range(aff.shape[0]):
        for q in range(aff.shape[1]):
            b = 0
            while b < 6 and aff[u, q] > boundaries[b]:
                b += 1
            oracle[u, q] = b / 3.0 - 1.0
    binning_exact = np.array_equal(weights, oracle)

    # Library-path cross-check of the same boundaries.
    sept_match = np.allclose(compute_septiles(aff.ravel()), boundaries, rtol=0, atol=1e-12)

    # Identity precision@k = recall@k * |holdout| / k for every simulated user.
    k = 30
    interest = weights @ tm.topics[:, :5].T
    worst_gap = 0.0
    for i, u in enumerate(split.users):
        seen = split.train.indices[split.train.indptr[u]:split.train.indptr[u + 1]]
        rec = top_k(interest[i], k, exclude=seen)
        r = recall_at_k(rec.article_indices, split.holdouts[i])
        precision = np.intersect1d(rec.article_indices, split.holdouts[i]).size / k
        worst_gap = max(worst_gap, abs(precision - r * len(split.holdouts[i]) / k))
    # run_offline_eval asserts the same identity internally per user.
    run_offline_eval(E, "content", topics=tm, k=k, holdout_size=20, n_questions=5, seed=0)

    _report(
        "offline protocol matches brute-force binning oracle",
        binning_exact and sept_match and worst_gap < 1e-12,
        f"bins exact={binning_exact}, boundary match={sept_match}, "
        f"worst precision-identity gap {worst_gap:.2e} over {split.users.size} users",
    )


# --------------------------------------------------------------------------
# 6. Planted-structure end-to-end


def _plurality(labels: np.ndarray) -> int:
    vals, counts = np.unique(labels, return_counts=True)
    return int(vals[np.argmax(counts)])


def test_planted_structure_end_to_end():
    t0 = time.monotonic()
    d = 16
    hp = HyperParams(alpha=0.01, lam=0.5, theta=0.1, latent_dims=d,
                     learning_rate=0.002, batch_size=2048, epochs=15)
    per_seed = []
    for seed in range(5):
        pc = _synth.planted_corpus(seed)
        content = content_topics(tfidf(pc.counts), k=d, seed=seed)
        qbar = build_qbar(content, width=d)
        model = train_joint(pc.E, qbar, hp, seed=seed)
        joint_tm = TopicMatrix(model.Q, "joint")

        ids = [f"a{i}" for i in range(pc.E.shape[1])]
        qn = generate_questions(joint_tm, ids, ids, n_per_list=20, k=pc.n_clusters)
        distinct = sum(
            _plurality(pc.article_labels[[ref.index for ref in q.list_a]])
            != _plurality(pc.article_labels[[ref.index for ref in q.list_b]])
            for q in qn.questions
        )
        lists_ok = distinct >= 7

        recall_joint = run_offline_eval(
            pc.E, "joint", topics=joint_tm, k=50, holdout_size=20,
            n_questions=pc.n_clusters, seed=seed,
        ).mean_recall
        recall_pop = run_offline_eval(
            pc.E, "edit-pop", k=50, holdout_size=20, seed=seed
        ).mean_recall
        recall_ok = recall_joint > recall_pop

        coh_joint = float(np.mean(
            [cohesion(model.Q[:, t], model.Q, 20) for t in range(pc.n_clusters)]
        ))
        coh_content = float(np.mean(
            [cohesion(content.topics[:, t], content.topics, 20) for t in range(pc.n_clusters)]
        ))
        cohesion_ok = coh_joint > coh_content

        per_seed.append((lists_ok and recall_ok and cohesion_ok, distinct,
                         recall_joint, recall_pop, coh_joint, coh_content))

    n_pass = sum(1 for ok, *_ in per_seed if ok)
    elapsed = time.monotonic() - t0
    detail = "; ".join(
        f"seed {s}: lists {d_}/8, recall {rj:.2f} vs {rp:.2f}, "
        f"cohesion {cj:.2f} vs {cc:.2f}"
        for s, (_, d_, rj, rp, cj, cc) in enumerate(per_seed)
    )
    _report(
        "planted-structure end-to-end (questions, recall, cohesion)",
        n_pass >= 3 and elapsed < 300.0,
        f"{n_pass}/5 seeds in {elapsed:.0f}s — {detail}",
    )


# --------------------------------------------------------------------------
# 7. Preprocessing filters


def test_filters_clean_all_rule_violations():
    from coldstartq.corpus import ArticleRecord, EditTriple

    cfg = FilterConfig(min_df=2, max_df_fraction=0.5, min_edits=6, min_tokens=10)

    def art(article_id, title, tokens):
        return ArticleRecord(
            article_id=article_id, title=title, tokens=tuple(tokens),
            token_count=len(tokens), is_list_like=title.lower().startswith("list of"),
        )

    # 6 healthy articles, each with shared mid-frequency vocabulary plus a
    # ubiquitous term (df-cap violation) and a singleton term (min-df violation).
    articles = []
    for i in range(6):
        tokens = ["everywhere"] * 2 + [f"mid{i % 3}"] * 6 + [f"solo{i}"] + ["filler"] * 6
        articles.append(art(f"a{i}", f"Article {i}", tokens))
    articles.append(art("stub", "Tiny", ["too", "short"]))  # min_tokens violation
    articles.append(art("lst", "List of things", ["list"] * 20))  # list-like violation

    edits = []
    for u in range(4):
        for i in range(6):
            edits.append(EditTriple(f"u{u}", f"a{i}", 2))  # 12 per user, 8 per article
    edits.append(EditTriple("light", "a0", 2))  # user below min_edits
    edits.append(EditTriple("u0", "stub", 50))
    edits.append(EditTriple("u0", "lst", 50))
    # an article whose only support comes from the dropped pages/users
    articles.append(art("weak", "Weak", ["weakterm"] * 15))
    edits.append(EditTriple("light", "weak", 3))

    fc = filter_corpus(articles, edits, cfg)

    kept = {a.article_id: a for a in fc.articles}
    scan = []
    scan.append(all(a.token_count >= cfg.min_tokens for a in fc.articles))
    scan.append(not any(a.is_list_like for a in fc.articles))
    scan.append("stub" not in kept and "lst" not in kept and "weak" not in kept)
    user_totals: dict[str, int] = {}
    article_totals: dict[str, int] = {}
    for t in fc.edits:
        user_totals[t.user_id] = user_totals.get(t.user_id, 0) + t.edit_count
        article_totals[t.article_id] = article_totals.get(t.article_id, 0) + t.edit_count
    scan.append(all(v >= cfg.min_edits for v in user_totals.values()))
    scan.append(set(user_totals) == set(fc.users))
    scan.append(all(v >= cfg.min_edits for v in article_totals.values()))
    df: dict[str, int] = {}
    for a in fc.articles:
        for term in set(a.tokens):
            df[term] = df.get(term, 0) + 1
    scan.append(all(
        cfg.min_df <= df[t] <= cfg.max_df_fraction * fc.n_articles for t in fc.vocabulary
    ))
    scan.append("everywhere" not in fc.vocabulary)
    scan.append(all(f"solo{i}" not in fc.vocabulary for i in range(6)))

    again = filter_corpus(fc.articles, fc.edits, cfg)
    idempotent = (
        again.article_ids() == fc.article_ids()
        and again.users == fc.users
        and again.vocabulary == fc.vocabulary
        and again.edits == fc.edits
    )

    _report(
        "preprocessing filters clean every rule violation",
        all(scan) and idempotent,
        f"invariant scan {scan}, idempotent={idempotent}",
    )


# --------------------------------------------------------------------------
# 8. Service durability and determinism


def test_service_survives_restart_and_is_deterministic(tmp_path, tiny_bundle):
    log = tmp_path / "sessions.log"
    client = TestClient(create_app(tiny_bundle, SessionStore(log), ServiceConfig(seed=0)))

    token = client.post("/api/v1/sessions").json()["token"]
    client.post(f"/api/v1/sessions/{token}/responses",
                json={"question_index": 0, "level": "A-great"})
    client.post(f"/api/v1/sessions/{token}/responses",
                json={"question_index": 1, "level": "B-moderate"})

    # "kill" the process: a new store replays the log from scratch
    client2 = TestClient(create_app(tiny_bundle, SessionStore(log), ServiceConfig(seed=0)))
    session = SessionStore(log).get(token)
    preserved = session.responses == {0: "A-great", 1: "B-moderate"}

    client2.post(f"/api/v1/sessions/{token}/responses",
                 json={"question_index": 2, "level": "none"})
    client2.post(f"/api/v1/sessions/{token}/complete")
    payload_a = client2.get(f"/api/v1/sessions/{token}/recommendations?k=5").content

    # restart again mid-flight: the completed session must replay byte-identically
    client3 = TestClient(create_app(tiny_bundle, SessionStore(log), ServiceConfig(seed=0)))
    payload_b = client3.get(f"/api/v1/sessions/{token}/recommendations?k=5").content
    restart_identical = payload_a == payload_b

    # an identical session in a fresh service yields the same articles bytes
    log2 = tmp_path / "other.log"
    client4 = TestClient(create_app(tiny_bundle, SessionStore(log2), ServiceConfig(seed=0)))
    t2 = client4.post("/api/v1/sessions").json()["token"]
    for i, lvl in enumerate(("A-great", "B-moderate", "none")):
        client4.post(f"/api/v1/sessions/{t2}/responses",
                     json={"question_index": i, "level": lvl})
    client4.post(f"/api/v1/sessions/{t2}/complete")
    payload_c = client4.get(f"/api/v1/sessions/{t2}/recommendations?k=5").content
    cross_identical = (
        payload_a.replace(token.encode(), b"TOKEN")
        == payload_c.replace(t2.encode(), b"TOKEN")
    )

    _report(
        "service restart preserves state; payloads deterministic",
        preserved and restart_identical and cross_identical,
        f"acks preserved={preserved}, restart bytes equal={restart_identical}, "
        f"cross-session bytes equal={cross_identical}",
    )
