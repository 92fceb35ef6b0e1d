import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from violation_miner.preprocess import preprocess
from violation_miner.records import ColumnMap, parse_report
from violation_miner.trainer import EmbeddingModel, TrainingConfig, Objective, train
from violation_miner.vocab import Vocabulary, build_vocabulary

TESTS_DIR = Path(__file__).parent


def data_path(name: str) -> Path:
    return Path(str(resources.files("violation_miner").joinpath(f"data/{name}")))


FIXTURE_COLUMNS = ColumnMap(
    record_id="Inspection ID",
    inspection_date="Inspection Date",
    violation_type="Violation Type",
    violation_code="Violation Code",
    violation_description="Violation Description",
    inspection_comment="Inspection Comment",
)


@pytest.fixture(scope="session")
def fixture_csv() -> Path:
    return data_path("synthetic_report.csv")


@pytest.fixture(scope="session")
def fixture_config() -> Path:
    return data_path("fixture_config.ini")


@pytest.fixture(scope="session")
def fixture_tally(fixture_csv) -> dict:
    return json.loads(data_path("synthetic_report_tally.json").read_text("utf-8"))


@pytest.fixture(scope="session")
def fixture_records(fixture_csv):
    parsed = parse_report(fixture_csv, FIXTURE_COLUMNS)
    assert not parsed.errors
    return parsed.records


@pytest.fixture(scope="session")
def fixture_streams(fixture_records):
    from violation_miner.records import ViolationType, filter_records

    selected = filter_records(
        fixture_records, ViolationType.ENVIRONMENTAL_HEALTH_SAFETY, require_comment=True
    )
    return [preprocess(r.inspection_comment, source_id=r.record_id) for r in selected]


def make_cluster_streams(n_streams: int, length: int, seed: int):
    """Two token clusters that never co-occur; the standard separation corpus."""
    from violation_miner.preprocess import TokenStream

    rng = np.random.default_rng(seed)
    streams = []
    for i in range(n_streams):
        cluster = ["a", "b", "c"] if i % 2 == 0 else ["x", "y", "z"]
        tokens = [cluster[j] for j in rng.integers(0, 3, size=length)]
        streams.append(TokenStream(tokens, str(i)))
    return streams


def random_model(n_vocab: int, dimension: int, seed: int) -> EmbeddingModel:
    """Small model with standard-normal-ish weights for gradient checks."""
    rng = np.random.default_rng(seed)
    vocab = Vocabulary.from_tokens(
        [f"t{i}" for i in range(n_vocab)], [n_vocab - i for i in range(n_vocab)]
    )
    return EmbeddingModel(
        w_in=rng.normal(0.0, 0.5, size=(n_vocab, dimension)),
        w_out=rng.normal(0.0, 0.5, size=(n_vocab, dimension)),
        vocab=vocab,
    )


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile both numba kernels once so timed tests measure the work."""
    streams = make_cluster_streams(4, 8, seed=0)
    vocab = build_vocabulary(streams)
    for objective in (Objective.NEGATIVE_SAMPLING, Objective.FULL_SOFTMAX):
        train(
            streams,
            vocab,
            TrainingConfig(dimension=4, window=2, epochs=1, seed=0, objective=objective, negatives=2),
        )
    return True
