"""Flow-record DDoS traffic classification toolkit."""

from . import cli, dataset, logreg, metrics, preprocess, svm

__version__ = "0.1.0"

__all__ = ["cli", "dataset", "logreg", "metrics", "preprocess", "svm"]
