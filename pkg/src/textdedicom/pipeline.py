"""End-to-end pipeline: documents -> corpus -> PPMI -> factorization -> reports."""

from __future__ import annotations

import contextlib
import csv
import json
import logging
import platform
import time
from pathlib import Path

import numpy as np

import textdedicom
from textdedicom import analysis, baselines, cooc, dedicom, modelio, textprep, wikifetch
from textdedicom.config import PipelineConfig
from textdedicom.errors import InputError

log = logging.getLogger(__name__)


@contextlib.contextmanager
def stage(name):
    """Tag any exception escaping the block with the pipeline stage it came from."""
    log.info("stage: %s", name)
    try:
        yield
    except Exception as exc:
        if not hasattr(exc, "stage"):
            exc.stage = name
        raise


def load_documents(config: PipelineConfig) -> list:
    docs = []
    for path in config.documents:
        path = Path(path)
        try:
            docs.append((path.stem, path.read_text(encoding="utf-8")))
        except OSError as exc:
            raise InputError(f"cannot read document {path}: {exc}") from exc
    if config.article_ids:
        table = {row[0]: row for row in wikifetch.read_table(config.table)}
        missing = [i for i in config.article_ids if i not in table]
        if missing:
            raise InputError(f"article ids not in table: {missing}")
        rows = [table[i] for i in config.article_ids]
        for sd in wikifetch.build_synthetic_docs(rows, config.cache_dir, config.offline, config.api_url):
            docs.append((f"doc_{sd.id}", sd.concatenated_text))
    if not docs:
        raise InputError("config names no documents and no article ids")
    return docs


def prepare(config: PipelineConfig):
    """Build the corpus, co-occurrence counts and PPMI target for a config."""
    with stage("preprocess"):
        corpus = textprep.build_corpus(load_documents(config), config.preprocess_config(), config.seed)
        if config.k > corpus.n:
            raise InputError(f"k={config.k} exceeds vocabulary size n={corpus.n}")
    with stage("cooc"):
        counts = cooc.count_cooccurrences(corpus, config.window_size, config.symmetric,
                                          config.zero_diagonal)
        S = cooc.ppmi(counts)
    log.info("corpus: %d documents, %d tokens, vocabulary %d", len(corpus.documents),
             corpus.num_tokens, corpus.n)
    return corpus, counts, S


def _row_normalized(M: np.ndarray) -> np.ndarray:
    M = np.abs(M)
    sums = M.sum(axis=1, keepdims=True)
    out = np.full_like(M, 1.0 / M.shape[1])
    np.divide(M, sums, out=out, where=sums > 0)
    return out


def fit(method: str, S, config: PipelineConfig) -> dict:
    """Train one method and collect what the reports need.

    Topic scores are A' for DEDICOM and row-normalized |W| or |U diag(sigma)|
    for the baselines; the affinity matrix is R, none, and diag(sigma).
    """
    n, k = S.n, config.k
    with stage(f"train:{method}"):
        if method == "dedicom":
            model, A_prime, trace = dedicom.train(S, config.train_config())
            return dict(model=model, trace=trace, final_loss=trace.final_loss,
                        embeddings=A_prime.A_prime, scores=A_prime.A_prime, affinity=model.R,
                        num_parameters=model.num_parameters)
        if method == "nmf":
            model, trace = baselines.nmf_train(S, k, config.nmf_iters, config.seed)
            return dict(model=model, trace=trace, final_loss=trace.final_loss,
                        embeddings=model.embeddings, scores=_row_normalized(model.W), affinity=None,
                        num_parameters=baselines.parameter_counts(n, k)["nmf"])
        model = baselines.svd_truncate(S, k)
        value = baselines.common_loss(S, model.reconstruction())
        trace = dedicom.TrainTrace([(1, value)], 0.0, value)
        return dict(model=model, trace=trace, final_loss=value,
                    embeddings=model.embeddings, scores=_row_normalized(model.embeddings),
                    affinity=np.diag(model.Sigma),
                    num_parameters=baselines.parameter_counts(n, k)["svd"])


def _report(result, vocab, config):
    report = analysis.topic_report(result["scores"], result["affinity"], vocab, config.top_m)
    neighbors = analysis.topic_neighbors(report, result["embeddings"], vocab,
                                         config.neighbor_words_per_topic,
                                         min(config.neighbor_count, len(vocab) - 1))
    return report, neighbors


def _versions() -> dict:
    import matplotlib

    return {"textdedicom": textdedicom.__version__, "numpy": np.__version__,
            "matplotlib": matplotlib.__version__, "python": platform.python_version()}


def run(config: PipelineConfig) -> dict:
    """Run the configured method and write every artifact under ``config.output_dir``."""
    from textdedicom import plotting

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    corpus, counts, S = prepare(config)
    result = fit(config.method, S, config)

    with stage("report"):
        vocab = list(corpus.vocab)
        report, neighbors = _report(result, vocab, config)
        corpus.save(out / "corpus.json")
        cooc.save_matrix(S, out / "ppmi.bin")
        modelio.save_model(result["model"], out / "model.npz", config.to_dict(), result["final_loss"])
        result["trace"].save_csv(out / "trace.csv")
        (out / "topics.json").write_text(report.to_json(), encoding="utf-8")
        (out / "topics.txt").write_text(report.to_text() + "\n", encoding="utf-8")
        analysis.export_embeddings(result["embeddings"], vocab, out / "embeddings.txt")
        (out / "neighbors.json").write_text(
            json.dumps([t.to_dict() for t in neighbors], indent=2, ensure_ascii=False), encoding="utf-8")
        if config.method == "dedicom":
            plotting.plot_training_loss(result["trace"], out / "loss.png")

        manifest = {
            "config_hash": config.config_hash(),
            "config": config.to_dict(),
            "seed": config.seed,
            "method": config.method,
            "n": corpus.n,
            "k": config.k,
            "num_parameters": result["num_parameters"],
            "final_loss": result["final_loss"],
            "wall_time": time.perf_counter() - started,
            "versions": _versions(),
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest


def compare(config: PipelineConfig) -> dict:
    """Train all three methods on one PPMI target and write the loss comparison.

    ``compare_trace.csv`` has one row per logged DEDICOM epoch; the NMF column
    shows the loss after ``min(epoch, nmf_iters)`` iterations and the SVD column
    is its constant optimum.
    """
    from textdedicom import plotting

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, _, S = prepare(config)
    results = {m: fit(m, S, config) for m in ("dedicom", "nmf", "svd")}

    with stage("report"):
        nmf_losses = dict(results["nmf"]["trace"].losses)
        svd_loss = results["svd"]["final_loss"]
        with open(out / "compare_trace.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "dedicom", "nmf", "svd"])
            for epoch, value in results["dedicom"]["trace"].losses:
                nmf_value = nmf_losses[min(epoch, config.nmf_iters)]
                writer.writerow([epoch, repr(value), repr(nmf_value), repr(svd_loss)])

        final = {m: r["final_loss"] for m, r in results.items()}
        checks = {
            "svd_le_nmf": final["svd"] <= final["nmf"],
            "svd_le_dedicom": final["svd"] <= final["dedicom"],
            "dedicom_ge_nmf": final["dedicom"] >= final["nmf"],
        }
        if not checks["dedicom_ge_nmf"]:
            log.warning("expected DEDICOM loss >= NMF loss, got %.6g < %.6g",
                        final["dedicom"], final["nmf"])
        summary = {
            "n": S.n,
            "k": config.k,
            "final_loss": final,
            "parameter_counts": baselines.parameter_counts(S.n, config.k),
            "checks": checks,
            "config_hash": config.config_hash(),
        }
        (out / "compare_summary.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")
        plotting.plot_loss_comparison(results["dedicom"]["trace"], final, out / "loss_comparison.png")
    return summary
