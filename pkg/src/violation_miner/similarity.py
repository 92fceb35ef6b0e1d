"""Cosine-similarity analysis over trained embeddings.

Builds labeled keyword-by-keyword matrices with row/column maxima
annotations, and exact nearest-neighbor queries. Similarities are computed
on the input-side matrix; averaging in the output-side weights is optional
and off by default.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError
from .trainer import EmbeddingModel

log = logging.getLogger(__name__)


def cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Inner product over the product of norms, clamped to [-1, 1]."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = math.sqrt(float(va @ va))
    nb = math.sqrt(float(vb @ vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine of a zero-norm vector is undefined")
    return max(-1.0, min(1.0, float(va @ vb) / (na * nb)))


@dataclass
class SimilarityMatrix:
    row_labels: list[str]
    col_labels: list[str]
    values: np.ndarray  # rows x cols, each entry in [-1, 1]
    row_max_col: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    col_max_row: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def value(self, row_label: str, col_label: str) -> float:
        return float(
            self.values[self.row_labels.index(row_label), self.col_labels.index(col_label)]
        )

    def row(self, label: str) -> np.ndarray:
        return self.values[self.row_labels.index(label)]


def annotate_extremes(matrix: SimilarityMatrix) -> SimilarityMatrix:
    """Fill per-row argmax columns and per-column argmax rows; ties go to
    the lowest index."""
    if matrix.values.size == 0:
        raise ValueError("cannot annotate an empty matrix")
    matrix.row_max_col = np.argmax(matrix.values, axis=1)
    matrix.col_max_row = np.argmax(matrix.values, axis=0)
    return matrix


def _embedding_rows(model: EmbeddingModel, average_output: bool) -> np.ndarray:
    return (model.w_in + model.w_out) / 2.0 if average_output else model.w_in


def _resolve(model: EmbeddingModel, tokens: Sequence[str], side: str) -> tuple[list[str], list[int]]:
    kept: list[str] = []
    ids: list[int] = []
    for token in tokens:
        if token in model.vocab:
            kept.append(token)
            ids.append(model.vocab.id_of(token))
        else:
            log.warning("%s token %r not in model vocabulary; dropped", side, token)
    return kept, ids


def pairwise_matrix(
    model: EmbeddingModel,
    row_tokens: Sequence[str],
    col_tokens: Sequence[str],
    average_output: bool = False,
) -> SimilarityMatrix:
    """Cosine of every (row token, column token) embedding pair. Tokens
    missing from the vocabulary are dropped with a warning; an empty side
    is an error."""
    rows, row_ids = _resolve(model, row_tokens, "row")
    cols, col_ids = _resolve(model, col_tokens, "column")
    if not rows:
        raise DataError("no row token resolves in the model vocabulary")
    if not cols:
        raise DataError("no column token resolves in the model vocabulary")
    vectors = _embedding_rows(model, average_output)
    r = vectors[row_ids]
    c = vectors[col_ids]
    r_norm = np.linalg.norm(r, axis=1)
    c_norm = np.linalg.norm(c, axis=1)
    for labels, norms in ((rows, r_norm), (cols, c_norm)):
        if (norms == 0).any():
            bad = labels[int(np.argmin(norms != 0))]
            raise DataError(f"token {bad!r} has a zero embedding vector")
    values = np.clip((r / r_norm[:, None]) @ (c / c_norm[:, None]).T, -1.0, 1.0)
    return annotate_extremes(SimilarityMatrix(rows, cols, values))


def nearest_neighbors(
    model: EmbeddingModel, token: str, n: int, average_output: bool = False
) -> list[tuple[str, float]]:
    """The n most cosine-similar vocabulary tokens, excluding the query."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if token not in model.vocab:
        raise DataError(f"token {token!r} not in model vocabulary")
    vectors = _embedding_rows(model, average_output)
    query_id = model.vocab.id_of(token)
    query = vectors[query_id]
    q_norm = np.linalg.norm(query)
    if q_norm == 0:
        raise DataError(f"token {token!r} has a zero embedding vector")
    norms = np.linalg.norm(vectors, axis=1)
    valid = norms > 0
    valid[query_id] = False
    if not valid.any():
        return []
    sims = np.full(len(norms), -np.inf)
    sims[valid] = np.clip(vectors[valid] @ query / (norms[valid] * q_norm), -1.0, 1.0)
    order = np.argsort(-sims, kind="stable")[: min(n, int(valid.sum()))]
    return [(model.vocab.id_to_token[i], float(sims[i])) for i in order]


def matrix_to_delimited(matrix: SimilarityMatrix, *, delimiter: str = ",") -> str:
    """Header row of column labels, then one labeled row per line."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["", *matrix.col_labels])
    for label, row in zip(matrix.row_labels, matrix.values):
        writer.writerow([label, *(f"{v:.6f}" for v in row)])
    return out.getvalue()


def annotations_to_delimited(matrix: SimilarityMatrix, *, delimiter: str = ",") -> str:
    """Companion annotation listing: the argmax column per row and argmax
    row per column (the underline/bold convention of the source tables)."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["kind", "label", "max_label", "value"])
    for i, label in enumerate(matrix.row_labels):
        j = int(matrix.row_max_col[i])
        writer.writerow(["row_max", label, matrix.col_labels[j], f"{matrix.values[i, j]:.6f}"])
    for j, label in enumerate(matrix.col_labels):
        i = int(matrix.col_max_row[j])
        writer.writerow(["col_max", label, matrix.row_labels[i], f"{matrix.values[i, j]:.6f}"])
    return out.getvalue()
