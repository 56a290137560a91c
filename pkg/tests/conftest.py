"""Shared fixtures: small system-output builders and session-scoped trained
models (training is the slow part, so the suite trains each model once)."""

from __future__ import annotations

import numpy as np
import pytest

# one "[ACCEPTANCE] criterion N ...: PASS|FAIL" line per acceptance criterion,
# echoed after the run so they survive pytest's output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from kgxeval.data import SyntheticConfig, generate_synthetic
from kgxeval.models import TrainConfig, train
from kgxeval.sysout import (
    ExampleRecord,
    FeatureDef,
    SystemHeader,
    SystemOutput,
)


def build_sysout(
    ranks,
    features=None,
    feature_defs=(),
    system_name="sys",
    dataset_name="ds",
    rank_basis="filtered",
    relations=None,
):
    """System output with one tail-query record per rank.

    ``features`` maps feature name -> per-record value list; ``relations``
    optionally sets per-record relation labels.
    """
    features = features or {}
    defs = {fd.name: fd for fd in feature_defs}
    for name in features:
        defs.setdefault(name, FeatureDef(name=name, dtype="string",
                                         description="", num_buckets=32))
    header = SystemHeader(
        system_name=system_name, dataset_name=dataset_name,
        rank_basis=rank_basis, custom_features=defs,
    )
    records = []
    for i, rank in enumerate(ranks):
        rec_features = {name: values[i] for name, values in features.items()}
        records.append(
            ExampleRecord(
                id=f"{i:04d}-tail",
                head=f"h{i}",
                relation=(relations[i] if relations else "r0"),
                tail=f"t{i}",
                direction="tail-query",
                gold_rank=rank,
                features=rec_features,
            )
        )
    return SystemOutput(header=header, records=tuple(records))


@pytest.fixture(scope="session")
def synth_main():
    """Symmetric-heavy dataset used by the model/debugger tests.

    Twelve relations so a debugged relation is a small slice of the test
    split (drift checks mirror the many-relation regime)."""
    return generate_synthetic(
        SyntheticConfig(n_entities=200, n_relations=12, n_triples=4000,
                        symmetric_fraction=0.7, seed=11)
    )


@pytest.fixture(scope="session")
def synth_dm():
    """Dataset for the DistMult-vs-baseline training check."""
    return generate_synthetic(
        SyntheticConfig(n_entities=200, n_relations=6, n_triples=3000,
                        symmetric_fraction=0.5, seed=7)
    )


@pytest.fixture(scope="session")
def symmetric_ids(synth_main):
    vocab = synth_main.train.vocab
    return frozenset(vocab.relation_id(lb) for lb in synth_main.symmetric_relations)


@pytest.fixture(scope="session")
def rescal_model(synth_main):
    config = TrainConfig(epochs=150, batch_size=256, negatives_per_positive=5,
                         learning_rate=0.05, dim=24, seed=2, optimizer="adagrad")
    return train("rescal", config, synth_main.train, synth_main.valid)


@pytest.fixture(scope="session")
def rotate_model(synth_main):
    config = TrainConfig(epochs=150, batch_size=256, negatives_per_positive=5,
                         learning_rate=0.05, dim=16, seed=3, optimizer="adagrad")
    return train("rotate", config, synth_main.train, synth_main.valid)


@pytest.fixture(scope="session")
def distmult_model(synth_dm):
    config = TrainConfig(epochs=200, batch_size=256, negatives_per_positive=5,
                         learning_rate=0.05, dim=32, seed=1, optimizer="adagrad")
    return train("distmult", config, synth_dm.train, synth_dm.valid)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
