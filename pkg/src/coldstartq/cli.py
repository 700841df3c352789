"""Command-line entry points: preprocessing, model building, evaluation, and
the HTTP server.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import artifacts, corpus, evaluation, questionnaire, recommender, topics
from .numerics import load_dense, save_dense, tfidf

logger = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--articles", required=True, type=click.Path(exists=True))
@click.option("--edits", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--min-df", default=50, show_default=True)
@click.option("--max-df-fraction", default=0.10, show_default=True)
@click.option("--min-edits", default=20, show_default=True)
@click.option("--min-tokens", default=100, show_default=True)
@click.option("--keep-list-pages", is_flag=True, help="Keep list/index/timeline/glossary pages.")
def preprocess(articles, edits, out, min_df, max_df_fraction, min_edits, min_tokens, keep_list_pages):
    """Ingest raw article and edit dumps, apply corpus filters, save the result."""
    try:
        art = corpus.ingest_articles(articles)
        ed = corpus.ingest_edits(edits)
    except corpus.CorpusError as exc:
        raise click.ClickException(str(exc)) from exc
    for err in list(art.errors)[:10] + list(ed.errors)[:10]:
        click.echo(f"skipped line {err.line_number}: {err.reason}", err=True)
    cfg = corpus.FilterConfig(
        min_df=min_df,
        max_df_fraction=max_df_fraction,
        min_edits=min_edits,
        min_tokens=min_tokens,
        drop_list_like=not keep_list_pages,
    )
    try:
        filtered = corpus.filter_corpus(art.records, ed.triples, cfg)
    except corpus.CorpusError as exc:
        raise click.ClickException(str(exc)) from exc
    corpus.save_corpus(filtered, out)
    click.echo(
        f"kept {filtered.n_articles} articles, {filtered.n_users} users, "
        f"{len(filtered.vocabulary)} vocabulary terms -> {out}"
    )


def _load_corpus(corpus_dir):
    idx = corpus.load_corpus_index(corpus_dir)
    counts = corpus.load_count_matrix(corpus_dir)
    return idx, counts


@main.command("build-topics")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["content", "collab", "joint"]), required=True)
@click.option("--dims", default=200, show_default=True, help="Topic dimensions.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--alpha", default=0.1, show_default=True)
@click.option("--lam", default=0.1, show_default=True)
@click.option("--theta", default=0.1, show_default=True)
@click.option("--learning-rate", default=0.01, show_default=True)
@click.option("--batch-size", default=8192, show_default=True)
@click.option("--epochs", default=50, show_default=True)
@click.option("--grid", default=None, help="Comma-separated alpha:lam:theta triples to search.")
def build_topics(corpus_dir, method, dims, seed, out, alpha, lam, theta, learning_rate, batch_size, epochs, grid):
    """Extract topic vectors from the corpus with the chosen method."""
    idx, counts = _load_corpus(corpus_dir)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = [f"method\t{method}", f"dims\t{dims}", f"seed\t{seed}"]

    if method == "content":
        tm = topics.content_topics(tfidf(counts), k=dims, seed=seed)
    elif method == "collab":
        tm = topics.collab_topics(idx.edit_matrix(), k=dims, seed=seed)
    else:
        E = idx.edit_matrix()
        content = topics.content_topics(tfidf(counts), k=dims, seed=seed)
        qbar = topics.build_qbar(content, width=dims)
        hp = topics.HyperParams(
            alpha=alpha,
            lam=lam,
            theta=theta,
            latent_dims=dims,
            learning_rate=learning_rate,
            batch_size=batch_size,
            epochs=epochs,
        )
        if grid:
            triples = [tuple(float(x) for x in t.split(":")) for t in grid.split(",")]
            result = topics.grid_search(E, qbar, triples, seed=seed, base_hp=hp)
            hp = result.best.hyperparams
            meta.append(
                f"grid_best\talpha={hp.alpha} lam={hp.lam} theta={hp.theta} "
                f"mse={result.best.validation_mse:.6f} cohesion={result.best.mean_cohesion:.6f}"
            )
        model = topics.train_joint(E, qbar, hp, seed=seed)
        tm = model.topic_matrix()
        save_dense(out_dir / "user_factors.bin", model.P)
        save_dense(out_dir / "anchor.bin", model.Qbar)
        meta.append(f"alpha\t{hp.alpha}")
        meta.append(f"lam\t{hp.lam}")
        meta.append(f"theta\t{hp.theta}")
        meta.append("loss_log\t" + " ".join(f"{v:.4f}" for v in model.loss_log))

    save_dense(out_dir / "topics.bin", tm.topics)
    (out_dir / "meta.txt").write_text("\n".join(meta) + "\n", encoding="utf-8")
    click.echo(f"{method} topics: {tm.topics.shape[0]} articles x {tm.topics.shape[1]} dims -> {out}")


@main.command("build-questionnaire")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--topics", "topics_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--questions", default=20, show_default=True)
@click.option("--n-per-list", default=20, show_default=True)
@click.option("--cloud-size", default=15, show_default=True)
@click.option("--views", default=None, type=click.Path(exists=True), help="TSV of article_id<TAB>view count.")
def build_questionnaire(corpus_dir, topics_dir, out, questions, n_per_list, cloud_size, views):
    """Assemble the serving bundle: questions, word clouds, and ranking data."""
    idx, counts = _load_corpus(corpus_dir)
    mat = load_dense(Path(topics_dir) / "topics.bin")
    method = "unknown"
    meta_path = Path(topics_dir) / "meta.txt"
    if meta_path.exists():
        for line in meta_path.read_text(encoding="utf-8").splitlines():
            key, _, value = line.partition("\t")
            if key == "method":
                method = value
    weights = tfidf(counts)
    qn = questionnaire.generate_questions(
        topics.TopicMatrix(mat, method),
        idx.article_ids,
        idx.titles,
        n_per_list=n_per_list,
        k=questions,
        tfidf_matrix=weights,
        vocabulary=idx.vocabulary,
        cloud_size=cloud_size,
    )
    view_totals = None
    if views:
        by_id = {}
        for line in Path(views).read_text(encoding="utf-8").splitlines():
            aid, _, v = line.partition("\t")
            by_id[aid] = float(v)
        view_totals = np.array([by_id.get(a, 0.0) for a in idx.article_ids])
    bundle = artifacts.ArtifactBundle(
        questionnaire=qn,
        topics=mat,
        latents=mat,
        article_ids=idx.article_ids,
        titles=idx.titles,
        edit_totals=recommender.edit_pop(idx.edit_matrix()),
        view_totals=view_totals,
    )
    artifacts.save_bundle(bundle, out)
    click.echo(f"bundle with {qn.n_questions} questions -> {out}")


@main.command()
@click.option("--artifacts", "artifacts_dir", required=True, type=click.Path(exists=True))
@click.option("--responses", required=True, type=click.Path(exists=True),
              help="JSON list of Likert levels, one per question.")
@click.option("-k", "--k", "k", default=5, show_default=True)
@click.option("--no-diversify", is_flag=True)
@click.option("--seed", default=0, show_default=True)
def recommend(artifacts_dir, responses, k, no_diversify, seed):
    """Rank articles for a completed response sheet."""
    bundle = artifacts.load_bundle(artifacts_dir)
    levels = json.loads(Path(responses).read_text(encoding="utf-8"))
    qn = bundle.questionnaire
    if len(levels) != qn.n_questions:
        raise click.ClickException(
            f"expected {qn.n_questions} responses, got {len(levels)}"
        )
    weights = np.array([questionnaire.likert_to_score(questionnaire.Likert(l)) for l in levels])
    cols = [q.topic_index for q in qn.questions]
    scores = bundle.topics[:, cols] @ weights
    if np.all(weights == 0.0):
        if bundle.view_totals is None:
            raise click.ClickException("all responses neutral and no view data available")
        click.echo("no preference signal; falling back to view popularity", err=True)
        scores = bundle.view_totals
    pool = recommender.top_k(scores, min(50, bundle.n_articles))
    if not no_diversify and k < len(pool):
        pool = recommender.diversify(pool, bundle.latents, k, seed=seed)
    for i, s in zip(pool.article_indices[:k], pool.scores[:k]):
        click.echo(f"{bundle.article_ids[int(i)]}\t{s:.4f}\t{bundle.titles[int(i)]}")


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--models", "models_dir", required=True, type=click.Path(exists=True),
              help="Directory with <method>/topics.bin per topic method.")
@click.option("--methods", default="joint,content,collab,edit-pop,view-pop,cf", show_default=True)
@click.option("-k", "--k", "k", default=300, show_default=True)
@click.option("--holdout", default=20, show_default=True)
@click.option("--questions", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--views", default=None, type=click.Path(exists=True))
@click.option("--unstratified", is_flag=True, help="Use raw affinities instead of 7-level binning.")
@click.option("--out", required=True, type=click.Path())
def evaluate(corpus_dir, models_dir, methods, k, holdout, questions, seed, views, unstratified, out):
    """Score every method with simulated cold-start sessions on held-out edits."""
    idx, _ = _load_corpus(corpus_dir)
    E = idx.edit_matrix()
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    view_totals = None
    if views:
        by_id = {}
        for line in Path(views).read_text(encoding="utf-8").splitlines():
            aid, _, v = line.partition("\t")
            by_id[aid] = float(v)
        view_totals = np.array([by_id.get(a, 0.0) for a in idx.article_ids])

    results = []
    cohesion_reports = []
    for method in [m.strip() for m in methods.split(",") if m.strip()]:
        tm = None
        if method in ("joint", "content", "collab"):
            path = Path(models_dir) / method / "topics.bin"
            if not path.exists():
                raise click.ClickException(f"missing {path}")
            tm = topics.TopicMatrix(load_dense(path), method)
            cohesion_reports.append(
                evaluation.cohesion_summary(tm, tm.topics, n_questions=questions, seed=seed)
            )
        res = evaluation.run_offline_eval(
            E,
            method if tm is None else method,
            topics=tm,
            view_counts=view_totals,
            k=k,
            holdout_size=holdout,
            n_questions=questions,
            seed=seed,
            stratified=not unstratified,
        )
        results.append(res)
        click.echo(f"{method}: mean recall@{k} = {res.mean_recall:.5f} over {res.n_users} users")

    evaluation.write_recall_table(results, out_dir / "recall.tsv")
    if cohesion_reports:
        evaluation.write_cohesion_table(cohesion_reports, out_dir / "cohesion.tsv")
    (out_dir / "summary.txt").write_text(
        evaluation.format_summary(results) + "\n", encoding="utf-8"
    )
    click.echo(f"reports -> {out_dir}")


@main.command()
@click.option("--artifacts", "artifacts_dir", default=None, type=click.Path())
@click.option("--port", default=None, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--log", "log_path", default="sessions.log", show_default=True)
@click.option("--comparison-mode", is_flag=True)
@click.option("--allow-partial", is_flag=True)
@click.option("--seed", default=0, show_default=True)
def serve(artifacts_dir, port, host, log_path, comparison_mode, allow_partial, seed):
    """Run the HTTP service (artifact dir and port also honor environment
    variables COLDSTARTQ_ARTIFACTS and COLDSTARTQ_PORT)."""
    import uvicorn

    from .service import ServiceConfig, SessionStore, create_app

    artifacts_dir = artifacts_dir or os.environ.get("COLDSTARTQ_ARTIFACTS")
    port = port or int(os.environ.get("COLDSTARTQ_PORT", "8000"))
    bundle = None
    if artifacts_dir and Path(artifacts_dir).exists():
        bundle = artifacts.load_bundle(artifacts_dir)
    elif artifacts_dir:
        click.echo(f"artifact dir {artifacts_dir} not found; serving without a bundle", err=True)
    store = SessionStore(log_path)
    config = ServiceConfig(
        seed=seed, comparison_enabled=comparison_mode, allow_partial=allow_partial
    )
    app = create_app(bundle, store, config)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
