"""Row-stochastic DEDICOM topic extraction and word embeddings from PPMI matrices."""

__version__ = "0.1.0"

from textdedicom.errors import (
    DedicomError,
    InputError,
    NetworkError,
    NotFoundError,
    NumericError,
)
from textdedicom.textprep import Corpus, Document, PreprocessConfig, build_corpus, preprocess
from textdedicom.cooc import CoocMatrix, PpmiMatrix, count_cooccurrences, ppmi
from textdedicom.dedicom import (
    DedicomModel,
    RowStochasticA,
    TrainConfig,
    TrainTrace,
    init_model,
    loss,
    gradients,
    reconstruct,
    row_softmax_znorm,
    train,
)
from textdedicom.baselines import NmfModel, SvdModel, common_loss, nmf_train, svd_truncate, parameter_counts
from textdedicom.analysis import (
    NeighborTable,
    TopicAssignment,
    TopicReport,
    assign_topics,
    explain_pair,
    export_embeddings,
    load_embeddings,
    nearest_neighbors,
    topic_report,
)

__all__ = [
    "DedicomError", "InputError", "NetworkError", "NotFoundError", "NumericError",
    "Corpus", "Document", "PreprocessConfig", "build_corpus", "preprocess",
    "CoocMatrix", "PpmiMatrix", "count_cooccurrences", "ppmi",
    "DedicomModel", "RowStochasticA", "TrainConfig", "TrainTrace",
    "init_model", "loss", "gradients", "reconstruct", "row_softmax_znorm", "train",
    "NmfModel", "SvdModel", "common_loss", "nmf_train", "svd_truncate", "parameter_counts",
    "NeighborTable", "TopicAssignment", "TopicReport", "assign_topics", "explain_pair",
    "export_embeddings", "load_embeddings", "nearest_neighbors", "topic_report",
]
