"""Skip-gram embedding trainer.

Pairs come from a dynamically shrunk context window; the objective is either
the exact softmax over the vocabulary or its negative-sampling surrogate
(noise drawn from the unigram^0.75 distribution). The retained artifact is
the input-side weight matrix, one row per vocabulary token.

Training is deterministic for a fixed seed: every random draw (matrix init,
window widths, noise ids, optional stream shuffling and subsampling) comes
from one seeded generator, consumed in a fixed order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, InternalError
from .preprocess import TokenStream
from .vocab import Vocabulary

log = logging.getLogger(__name__)

_LOG_CHUNK = 200_000  # pairs between progress lines
_NOISE_POWER = 0.75


class Objective(Enum):
    FULL_SOFTMAX = "softmax"
    NEGATIVE_SAMPLING = "negative_sampling"


@dataclass(frozen=True)
class TrainingConfig:
    dimension: int = 100
    window: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    final_lr: float | None = None  # defaults to 1e-4 * initial_lr
    objective: Objective = Objective.NEGATIVE_SAMPLING
    negatives: int = 5
    subsample: float = 0.0  # 0 disables frequent-word subsampling
    seed: int = 1
    dynamic_window: bool = True
    shuffle_streams: bool = False

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.dimension}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.negatives < 1:
            raise ConfigError(f"negatives must be >= 1, got {self.negatives}")
        if self.subsample < 0:
            raise ConfigError(f"subsample must be >= 0, got {self.subsample}")
        if self.initial_lr <= 0:
            raise ConfigError(f"initial_lr must be > 0, got {self.initial_lr}")
        resolved = self.resolved_final_lr
        if not 0 < resolved < self.initial_lr:
            raise ConfigError(
                f"final_lr must be in (0, initial_lr), got {resolved} vs {self.initial_lr}"
            )

    @property
    def resolved_final_lr(self) -> float:
        return self.final_lr if self.final_lr is not None else 1e-4 * self.initial_lr


class TrainingPair(NamedTuple):
    center: int
    context: int


@dataclass
class EmbeddingModel:
    w_in: np.ndarray  # V x d, the embedding matrix
    w_out: np.ndarray  # V x d, output-side weights
    vocab: Vocabulary
    config: TrainingConfig | None = None
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return self.w_in.shape[1]

    def vector(self, token: str) -> np.ndarray:
        if token not in self.vocab:
            raise DataError(f"token {token!r} not in model vocabulary")
        return self.w_in[self.vocab.id_of(token)]


def generate_pairs(
    ids: Sequence[int],
    window: int,
    rng: np.random.Generator,
    dynamic_window: bool = True,
) -> list[TrainingPair]:
    """(center, context) pairs for one encoded stream. At each position a
    width b is drawn uniformly from 1..window (or fixed to window) and every
    in-bounds neighbor within b positions becomes a context."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    n = len(ids)
    pairs: list[TrainingPair] = []
    if n < 2:
        return pairs
    widths = (
        rng.integers(1, window + 1, size=n)
        if dynamic_window and window > 1
        else np.full(n, window, dtype=np.int64)
    )
    for i in range(n):
        b = int(widths[i])
        for j in range(max(0, i - b), min(n, i + b + 1)):
            if j != i:
                pairs.append(TrainingPair(int(ids[i]), int(ids[j])))
    return pairs


def encode_stream(stream: TokenStream, vocab: Vocabulary) -> np.ndarray:
    """Token ids for one stream; out-of-vocabulary tokens are dropped."""
    t2i = vocab.token_to_id
    return np.array([t2i[t] for t in stream.tokens if t in t2i], dtype=np.int64)


def softmax_distribution(model: EmbeddingModel, center_id: int) -> np.ndarray:
    """Predicted context distribution for a center id, max-stabilized."""
    scores = model.w_out @ model.w_in[center_id]
    scores -= scores.max()
    exp = np.exp(scores)
    return exp / exp.sum()


def _stable_sigmoid(s: float) -> float:
    if s >= 0:
        return 1.0 / (1.0 + np.exp(-s))
    e = np.exp(s)
    return e / (1.0 + e)


def softmax_loss_and_grads(
    model: EmbeddingModel, pair: TrainingPair
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy loss -log p(context | center) and its gradients with
    respect to w_in[center] (d,) and all of w_out (V, d)."""
    h = model.w_in[pair.center]
    scores = model.w_out @ h
    m = scores.max()
    log_z = m + np.log(np.exp(scores - m).sum())
    loss = float(log_z - scores[pair.context])
    errs = np.exp(scores - log_z)
    errs[pair.context] -= 1.0
    grad_in = errs @ model.w_out
    grad_out = np.outer(errs, h)
    return loss, grad_in, grad_out


def step_full_softmax(model: EmbeddingModel, pair: TrainingPair, lr: float) -> None:
    """One in-place SGD step on the full-softmax loss; touches w_in[center]
    and every row of w_out."""
    _, grad_in, grad_out = softmax_loss_and_grads(model, pair)
    model.w_out -= lr * grad_out
    model.w_in[pair.center] -= lr * grad_in


def negative_sampling_loss_and_grads(
    model: EmbeddingModel, pair: TrainingPair, negatives: Sequence[int]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Logistic loss -log s(u_ctx.h) - sum_neg log s(-u_neg.h) and gradients:
    the (d,) gradient for w_in[center] and per-sample output-row coefficients
    (gradient of row i is coefs[i] * h, rows ordered context then negatives;
    a duplicated negative accumulates once per occurrence)."""
    h = model.w_in[pair.center]
    rows = np.concatenate(([pair.context], np.asarray(negatives, dtype=np.int64)))
    scores = model.w_out[rows] @ h
    loss = float(np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum())
    coefs = np.array([_stable_sigmoid(s) for s in scores])
    coefs[0] -= 1.0
    grad_in = coefs @ model.w_out[rows]
    return loss, grad_in, coefs


def step_negative_sampling(
    model: EmbeddingModel, pair: TrainingPair, negatives: Sequence[int], lr: float
) -> None:
    """One in-place SGD step on the negative-sampling loss; touches
    w_in[center], w_out[context] and the sampled noise rows."""
    _, grad_in, coefs = negative_sampling_loss_and_grads(model, pair, negatives)
    h = model.w_in[pair.center]
    rows = [pair.context, *(int(n) for n in negatives)]
    for row, coef in zip(rows, coefs):
        model.w_out[row] -= lr * coef * h
    model.w_in[pair.center] -= lr * grad_in


def _noise_cumulative(vocab: Vocabulary) -> np.ndarray:
    weights = vocab.id_to_freq.astype(np.float64) ** _NOISE_POWER
    cum = np.cumsum(weights / weights.sum())
    # keep uniform draws in [0, 1) strictly inside the table: rounding may
    # leave the last entry below 1, and searchsorted would then index past V
    cum[-1] = 1.0
    return cum


def sample_negatives(
    contexts: np.ndarray, k: int, noise_cum: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """k noise ids per pair from the unigram^0.75 table, redrawn so that no
    negative equals its pair's context. With a single-token vocabulary no
    valid negative exists and the result has zero columns."""
    n = len(contexts)
    if len(noise_cum) < 2:
        return np.empty((n, 0), dtype=np.int64)
    negs = np.searchsorted(noise_cum, rng.random((n, k)))
    mask = negs == contexts[:, None]
    while mask.any():
        negs[mask] = np.searchsorted(noise_cum, rng.random(int(mask.sum())))
        mask = negs == contexts[:, None]
    return negs.astype(np.int64)


def _subsample_keep_prob(vocab: Vocabulary, threshold: float) -> np.ndarray:
    # word2vec's keep rule: (sqrt(f / (t*N)) + 1) * (t*N) / f, capped at 1
    f = vocab.id_to_freq.astype(np.float64)
    tn = threshold * float(vocab.total_token_count)
    with np.errstate(divide="ignore"):
        p = (np.sqrt(f / tn) + 1.0) * tn / f
    return np.minimum(p, 1.0)


def train(
    streams: Iterable[TokenStream],
    vocab: Vocabulary,
    config: TrainingConfig,
) -> EmbeddingModel:
    """Train on preprocessed streams and return the embedding model.

    w_in starts uniform in [-0.5/d, 0.5/d], w_out at zero; the learning rate
    decays linearly from initial_lr to final_lr over all scheduled pairs.
    Pair sequences (fresh window draws per epoch) and noise samples are
    generated up front so the total schedule length is known.
    """
    encoded = [encode_stream(s, vocab) for s in streams]
    if sum(len(e) for e in encoded) == 0:
        raise DataError("empty corpus: no in-vocabulary tokens to train on")

    n_vocab = len(vocab)
    d = config.dimension
    rng = np.random.default_rng(config.seed)
    w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(n_vocab, d))
    w_out = np.zeros((n_vocab, d))

    use_ns = config.objective is Objective.NEGATIVE_SAMPLING
    noise_cum = _noise_cumulative(vocab) if use_ns else None
    keep_prob = _subsample_keep_prob(vocab, config.subsample) if config.subsample > 0 else None

    epochs: list[tuple[np.ndarray, np.ndarray, np.ndarray | None]] = []
    for _ in range(config.epochs):
        order = rng.permutation(len(encoded)) if config.shuffle_streams else range(len(encoded))
        centers: list[int] = []
        contexts: list[int] = []
        for idx in order:
            ids = encoded[idx]
            if keep_prob is not None and len(ids) > 0:
                ids = ids[rng.random(len(ids)) < keep_prob[ids]]
            for center, context in generate_pairs(ids, config.window, rng, config.dynamic_window):
                centers.append(center)
                contexts.append(context)
        c_arr = np.array(centers, dtype=np.int64)
        o_arr = np.array(contexts, dtype=np.int64)
        negs = (
            sample_negatives(o_arr, config.negatives, noise_cum, rng) if use_ns else None
        )
        epochs.append((c_arr, o_arr, negs))

    total_pairs = sum(len(c) for c, _, _ in epochs)
    lr_span = config.initial_lr - config.resolved_final_lr
    denom = max(1, total_pairs - 1)
    model = EmbeddingModel(w_in, w_out, vocab, config)

    done = 0
    for epoch_index, (c_arr, o_arr, negs) in enumerate(epochs, 1):
        epoch_loss = 0.0
        for start in range(0, len(c_arr), _LOG_CHUNK):
            stop = min(start + _LOG_CHUNK, len(c_arr))
            steps = np.arange(done + start, done + stop, dtype=np.float64)
            lrs = config.initial_lr - lr_span * (steps / denom)
            if use_ns:
                epoch_loss += _kernels.run_negative_sampling(
                    w_in, w_out, c_arr[start:stop], o_arr[start:stop], negs[start:stop], lrs
                )
            else:
                epoch_loss += _kernels.run_full_softmax(
                    w_in, w_out, c_arr[start:stop], o_arr[start:stop], lrs
                )
            log.info(
                "epoch %d: %d/%d pairs, lr=%.6g, running loss=%.6g",
                epoch_index,
                done + stop,
                total_pairs,
                lrs[-1] if len(lrs) else config.initial_lr,
                epoch_loss / max(1, stop),
            )
        done += len(c_arr)
        model.epoch_losses.append(epoch_loss / max(1, len(c_arr)))
        _check_finite(model, done)
    return model


def _check_finite(model: EmbeddingModel, pairs_done: int) -> None:
    for name, matrix in (("w_in", model.w_in), ("w_out", model.w_out)):
        finite_rows = np.isfinite(matrix).all(axis=1)
        if not finite_rows.all():
            bad = int(np.argmin(finite_rows))
            raise InternalError(
                f"non-finite {name} value after {pairs_done} pairs "
                f"(token {model.vocab.id_to_token[bad]!r}); "
                "lower the learning rate"
            )


def save_model(model: EmbeddingModel, sink: str | Path | IO[str]) -> None:
    """Text format: header "V d", then one line per token with d values."""
    own = isinstance(sink, (str, Path))
    stream = open(sink, "w", encoding="utf-8") if own else sink
    try:
        n_vocab, d = model.w_in.shape
        stream.write(f"{n_vocab} {d}\n")
        for i in range(n_vocab):
            values = " ".join(f"{x:.8g}" for x in model.w_in[i])
            stream.write(f"{model.vocab.id_to_token[i]} {values}\n")
    finally:
        if own:
            stream.close()


def load_model(source: str | Path, vocab: Vocabulary | None = None) -> EmbeddingModel:
    """Read a model file back. Frequencies are not part of the format, so a
    vocabulary (e.g. from a dump alongside the model) may be supplied; it
    must list the same tokens in the same order."""
    lines = Path(source).read_text("utf-8").splitlines()
    if not lines:
        raise DataError(f"{source}: empty model file")
    header = lines[0].split()
    if len(header) != 2:
        raise DataError(f"{source}:1: expected header 'V d', got {lines[0]!r}")
    try:
        n_vocab, d = int(header[0]), int(header[1])
    except ValueError:
        raise DataError(f"{source}:1: expected integer header 'V d', got {lines[0]!r}") from None
    body = [line for line in lines[1:] if line.strip()]
    if len(body) != n_vocab:
        raise DataError(f"{source}: header declares {n_vocab} rows, found {len(body)}")
    tokens: list[str] = []
    w_in = np.empty((n_vocab, d))
    for i, line in enumerate(body):
        parts = line.split()
        if len(parts) != d + 1:
            raise DataError(f"{source}:{i + 2}: expected token and {d} values, got {len(parts) - 1}")
        tokens.append(parts[0])
        try:
            w_in[i] = [float(x) for x in parts[1:]]
        except ValueError:
            raise DataError(f"{source}:{i + 2}: malformed number") from None
    if vocab is not None:
        if vocab.id_to_token != tokens:
            raise DataError(f"{source}: token order differs from the supplied vocabulary")
    else:
        vocab = Vocabulary.from_tokens(tokens)
    return EmbeddingModel(w_in, np.zeros_like(w_in), vocab, config=None)
