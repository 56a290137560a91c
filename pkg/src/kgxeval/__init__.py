"""kgxeval: fine-grained, bucketized evaluation and debugging of link-prediction models.

The package is organized as a small library plus a ``kgx`` command-line tool:

- :mod:`kgxeval.data` -- triple splits, vocabularies, training-set statistics,
  synthetic dataset generation
- :mod:`kgxeval.metrics` -- Hits@k / MRR / MR and rank derivation with tie handling
- :mod:`kgxeval.sysout` -- the native line-delimited system-output format
- :mod:`kgxeval.adapters` -- importers for pykeen-style and libkge-style rank dumps
- :mod:`kgxeval.buckets` -- built-in and custom bucketization of evaluation data
- :mod:`kgxeval.confidence` -- bootstrap and t confidence intervals
- :mod:`kgxeval.analysis` -- single-system reports and multi-system comparison
- :mod:`kgxeval.models` -- desk-scale TransE/DistMult/RESCAL/RotatE embedding models
- :mod:`kgxeval.debug` -- symmetry-violation mining and intensive fine-tuning
- :mod:`kgxeval.store` / :mod:`kgxeval.server` -- file-backed system store and HTTP API
"""

__version__ = "0.1.0"

from kgxeval.errors import (
    ComparabilityError,
    ConfigurationError,
    DataError,
    FormatError,
    InsufficientViolationsError,
    NotFoundError,
    TrainingError,
    ValidationError,
)

__all__ = [
    "ComparabilityError",
    "ConfigurationError",
    "DataError",
    "FormatError",
    "InsufficientViolationsError",
    "NotFoundError",
    "TrainingError",
    "ValidationError",
    "__version__",
]
