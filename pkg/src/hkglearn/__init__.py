"""hkglearn: learn bipartite disease-symptom knowledge graphs from binary
co-occurrence records, evaluate them against a reference graph, and run
robustness analyses on synthetic cohorts with known ground truth."""

from .backend import BACKEND_NAME, HAVE_COMPILED

__version__ = "0.1.0"

__all__ = ["BACKEND_NAME", "HAVE_COMPILED", "__version__"]
