import copy
import io
import math

import numpy as np
import pytest

from tests.conftest import make_cluster_streams, random_model
from violation_miner.errors import ConfigError, DataError
from violation_miner.preprocess import TokenStream
from violation_miner.trainer import (
    EmbeddingModel,
    Objective,
    TrainingConfig,
    TrainingPair,
    encode_stream,
    generate_pairs,
    load_model,
    negative_sampling_loss_and_grads,
    sample_negatives,
    save_model,
    softmax_distribution,
    softmax_loss_and_grads,
    step_full_softmax,
    step_negative_sampling,
    train,
)
from violation_miner.vocab import Vocabulary, build_vocabulary


class TestTrainingConfig:
    def test_defaults_valid(self):
        config = TrainingConfig()
        assert config.resolved_final_lr == pytest.approx(2.5e-6)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"dimension": 0},
            {"window": 0},
            {"epochs": 0},
            {"negatives": 0},
            {"initial_lr": 0.0},
            {"final_lr": 0.025},  # must stay below initial
            {"subsample": -1.0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            TrainingConfig(**kwargs)


class TestGeneratePairs:
    def test_window_one_enumeration(self):
        rng = np.random.default_rng(0)
        pairs = generate_pairs([0, 1, 2], window=1, rng=rng)
        assert pairs == [
            TrainingPair(0, 1),
            TrainingPair(1, 0),
            TrainingPair(1, 2),
            TrainingPair(2, 1),
        ]

    def test_single_token_no_pairs(self):
        assert generate_pairs([5], window=3, rng=np.random.default_rng(0)) == []

    def test_repeated_token_pairs_allowed(self):
        pairs = generate_pairs([4, 4], window=1, rng=np.random.default_rng(0))
        assert pairs == [TrainingPair(4, 4), TrainingPair(4, 4)]

    def test_dynamic_window_within_bounds(self):
        rng = np.random.default_rng(3)
        ids = list(range(10))
        for center, context in generate_pairs(ids, window=4, rng=rng):
            assert 1 <= abs(center - context) <= 4

    def test_fixed_window_uses_full_width(self):
        rng = np.random.default_rng(0)
        pairs = generate_pairs([0, 1, 2, 3], window=3, rng=rng, dynamic_window=False)
        assert TrainingPair(0, 3) in pairs

    def test_encode_stream_drops_oov(self):
        vocab = build_vocabulary([TokenStream(["a", "b"])])
        ids = encode_stream(TokenStream(["a", "zzz", "b"]), vocab)
        assert ids.tolist() == [vocab.id_of("a"), vocab.id_of("b")]


class TestSoftmaxDistribution:
    def test_zero_matrices_uniform(self):
        vocab = Vocabulary.from_tokens(["a", "b", "c", "d"])
        model = EmbeddingModel(np.zeros((4, 3)), np.zeros((4, 3)), vocab)
        probs = softmax_distribution(model, 0)
        assert np.allclose(probs, 0.25)

    def test_known_two_token_distribution(self):
        # scores (0, ln 3) give probabilities (0.25, 0.75)
        vocab = Vocabulary.from_tokens(["a", "b"])
        w_in = np.array([[1.0], [0.0]])
        w_out = np.array([[0.0], [math.log(3.0)]])
        probs = softmax_distribution(EmbeddingModel(w_in, w_out, vocab), 0)
        assert probs == pytest.approx([0.25, 0.75], abs=1e-12)

    def test_sums_to_one(self):
        model = random_model(11, 6, seed=4)
        for center in range(11):
            assert abs(softmax_distribution(model, center).sum() - 1.0) < 1e-9

    def test_stabilized_against_large_scores(self):
        # raw exp would overflow; max-subtraction must keep this finite
        vocab = Vocabulary.from_tokens(["a", "b", "c"])
        w_in = np.array([[1000.0], [0.0], [0.0]])
        w_out = np.array([[1.0], [0.9], [0.0]])
        probs = softmax_distribution(EmbeddingModel(w_in, w_out, vocab), 0)
        assert np.isfinite(probs).all()
        assert abs(probs.sum() - 1.0) < 1e-9
        assert probs[0] > 0.99


def finite_difference(loss_fn, matrix, h=1e-5):
    """Central finite differences of loss_fn with respect to matrix entries."""
    grad = np.zeros_like(matrix)
    it = np.nditer(matrix, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        original = matrix[idx]
        matrix[idx] = original + h
        up = loss_fn()
        matrix[idx] = original - h
        down = loss_fn()
        matrix[idx] = original
        grad[idx] = (up - down) / (2 * h)
        it.iternext()
    return grad


def relative_error(a, b, floor=1e-8):
    return np.max(np.abs(a - b) / np.maximum(floor, np.maximum(np.abs(a), np.abs(b))))


class TestGradients:
    def test_full_softmax_matches_finite_differences(self):
        model = random_model(7, 4, seed=0)
        pair = TrainingPair(2, 5)
        _, grad_in, grad_out = softmax_loss_and_grads(model, pair)

        fd_in = finite_difference(
            lambda: softmax_loss_and_grads(model, pair)[0], model.w_in
        )[pair.center]
        fd_out = finite_difference(lambda: softmax_loss_and_grads(model, pair)[0], model.w_out)
        assert relative_error(grad_in, fd_in) < 1e-4
        assert relative_error(grad_out, fd_out) < 1e-4

    def test_negative_sampling_matches_finite_differences(self):
        model = random_model(7, 4, seed=1)
        pair = TrainingPair(0, 3)
        negatives = [1, 4, 1]  # duplicate negative must accumulate
        _, grad_in, coefs = negative_sampling_loss_and_grads(model, pair, negatives)
        h = model.w_in[pair.center].copy()
        grad_out = np.zeros_like(model.w_out)
        for row, coef in zip([pair.context, *negatives], coefs):
            grad_out[row] += coef * h

        def loss():
            return negative_sampling_loss_and_grads(model, pair, negatives)[0]

        fd_in = finite_difference(loss, model.w_in)[pair.center]
        fd_out = finite_difference(loss, model.w_out)
        assert relative_error(grad_in, fd_in) < 1e-4
        assert relative_error(grad_out, fd_out) < 1e-4


class TestSteps:
    def test_zero_learning_rate_is_identity(self):
        for step in (
            lambda m: step_full_softmax(m, TrainingPair(1, 2), 0.0),
            lambda m: step_negative_sampling(m, TrainingPair(1, 2), [0, 3], 0.0),
        ):
            model = random_model(5, 3, seed=2)
            before = copy.deepcopy((model.w_in, model.w_out))
            step(model)
            assert np.array_equal(model.w_in, before[0])
            assert np.array_equal(model.w_out, before[1])

    def test_small_step_decreases_loss(self):
        model = random_model(6, 4, seed=3)
        pair = TrainingPair(1, 4)
        before = softmax_loss_and_grads(model, pair)[0]
        step_full_softmax(model, pair, 0.01)
        after = softmax_loss_and_grads(model, pair)[0]
        assert after < before

    def test_repeated_negative_sampling_steps_saturate(self):
        model = random_model(6, 4, seed=5)
        pair = TrainingPair(0, 2)
        negatives = [3, 5]
        for _ in range(500):
            step_negative_sampling(model, pair, negatives, 0.1)
        score = float(model.w_in[pair.center] @ model.w_out[pair.context])
        assert 1.0 / (1.0 + math.exp(-score)) > 0.99

    def test_softmax_touches_all_output_rows(self):
        model = random_model(5, 3, seed=6)
        before = model.w_out.copy()
        step_full_softmax(model, TrainingPair(0, 1), 0.05)
        assert (model.w_out != before).any(axis=1).all()

    def test_negative_sampling_touches_only_sampled_rows(self):
        model = random_model(6, 3, seed=7)
        before = model.w_out.copy()
        step_negative_sampling(model, TrainingPair(0, 1), [2, 4], 0.05)
        changed = (model.w_out != before).any(axis=1)
        assert changed.tolist() == [False, True, True, False, True, False]


class TestSampleNegatives:
    def test_never_equals_context(self):
        rng = np.random.default_rng(0)
        cum = np.cumsum(np.ones(5) / 5)
        contexts = np.array([2] * 1000)
        negs = sample_negatives(contexts, 3, cum, rng)
        assert negs.shape == (1000, 3)
        assert (negs != 2).all()
        assert set(np.unique(negs)) <= {0, 1, 3, 4}

    def test_single_token_vocabulary_yields_no_negatives(self):
        rng = np.random.default_rng(0)
        cum = np.cumsum([1.0])
        negs = sample_negatives(np.array([0, 0]), 5, cum, rng)
        assert negs.shape == (2, 0)


def small_corpus(seed=0):
    return make_cluster_streams(40, 8, seed=seed)


class TestTrain:
    def test_deterministic_for_fixed_seed(self):
        streams = small_corpus()
        vocab = build_vocabulary(streams)
        config = TrainingConfig(dimension=8, window=2, epochs=2, seed=11, negatives=3)
        m1 = train(streams, vocab, config)
        m2 = train(streams, vocab, config)
        assert np.array_equal(m1.w_in, m2.w_in)
        assert np.array_equal(m1.w_out, m2.w_out)
        assert m1.epoch_losses == m2.epoch_losses

    def test_different_seeds_differ(self):
        streams = small_corpus()
        vocab = build_vocabulary(streams)
        base = dict(dimension=8, window=2, epochs=1, negatives=3)
        m1 = train(streams, vocab, TrainingConfig(seed=1, **base))
        m2 = train(streams, vocab, TrainingConfig(seed=2, **base))
        assert not np.array_equal(m1.w_in, m2.w_in)

    def test_empty_corpus_rejected(self):
        vocab = build_vocabulary([TokenStream(["a", "b"])])
        with pytest.raises(DataError, match="empty corpus"):
            train([TokenStream(["zzz"])], vocab, TrainingConfig(dimension=4))

    def test_single_repeated_token_survives(self):
        streams = [TokenStream(["a"] * 50)]
        vocab = build_vocabulary(streams)
        for objective in Objective:
            model = train(
                streams,
                vocab,
                TrainingConfig(dimension=4, window=2, epochs=2, seed=3, objective=objective),
            )
            assert np.isfinite(model.w_in).all()
            assert np.isfinite(model.w_out).all()

    def test_initialization_ranges(self):
        streams = small_corpus()
        vocab = build_vocabulary(streams)
        d = 16
        config = TrainingConfig(dimension=d, epochs=1, seed=9, initial_lr=1e-12, final_lr=1e-13)
        model = train(streams, vocab, config)
        # with a vanishing learning rate the matrices stay near initialization
        assert np.abs(model.w_in).max() <= 0.5 / d + 1e-6
        assert np.abs(model.w_out).max() < 1e-6

    def test_full_softmax_epoch_loss_non_increasing(self):
        streams = small_corpus(seed=4)
        vocab = build_vocabulary(streams)
        config = TrainingConfig(
            dimension=8, window=2, epochs=3, seed=5, objective=Objective.FULL_SOFTMAX
        )
        model = train(streams, vocab, config)
        assert len(model.epoch_losses) == 3
        assert model.epoch_losses[0] >= model.epoch_losses[1] >= model.epoch_losses[2]

    def test_subsample_and_shuffle_modes_run(self):
        streams = small_corpus(seed=6)
        vocab = build_vocabulary(streams)
        config = TrainingConfig(
            dimension=4, window=2, epochs=1, seed=7, subsample=0.01, shuffle_streams=True
        )
        model = train(streams, vocab, config)
        assert np.isfinite(model.w_in).all()

    def test_divergence_fatal_with_diagnostics(self):
        from violation_miner.errors import InternalError

        streams = small_corpus()
        vocab = build_vocabulary(streams)
        config = TrainingConfig(
            dimension=8, window=2, epochs=3, seed=1, initial_lr=1e12, final_lr=1e11,
            objective=Objective.FULL_SOFTMAX,
        )
        with pytest.raises(InternalError, match=r"after \d+ pairs \(token"):
            train(streams, vocab, config)

    def test_cluster_separation_single_seed(self):
        streams = make_cluster_streams(200, 10, seed=8)
        vocab = build_vocabulary(streams)
        config = TrainingConfig(dimension=16, window=3, epochs=2, seed=13, initial_lr=0.05)
        model = train(streams, vocab, config)
        from violation_miner.similarity import cosine

        intra = cosine(model.vector("a"), model.vector("b"))
        inter = cosine(model.vector("a"), model.vector("x"))
        assert intra - inter >= 0.2


class TestKernelStepEquivalence:
    """The JIT epoch kernels and the per-pair step functions must apply the
    same update; this pins the two code paths together."""

    def _replay(self, objective, seed):
        streams = make_cluster_streams(10, 6, seed=seed)
        vocab = build_vocabulary(streams)
        config = TrainingConfig(
            dimension=5, window=2, epochs=2, seed=seed, objective=objective, negatives=2
        )
        fast = train(streams, vocab, config)

        # replay the exact schedule with the numpy step functions
        rng = np.random.default_rng(config.seed)
        d = config.dimension
        w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(len(vocab), d))
        slow = EmbeddingModel(w_in, np.zeros((len(vocab), d)), vocab)
        from violation_miner.trainer import _noise_cumulative

        noise = _noise_cumulative(vocab)
        epochs = []
        for _ in range(config.epochs):
            pairs = []
            for stream in streams:
                pairs.extend(
                    generate_pairs(encode_stream(stream, vocab), config.window, rng)
                )
            contexts = np.array([p.context for p in pairs], dtype=np.int64)
            negs = (
                sample_negatives(contexts, config.negatives, noise, rng)
                if objective is Objective.NEGATIVE_SAMPLING
                else None
            )
            epochs.append((pairs, negs))
        total = sum(len(p) for p, _ in epochs)
        span = config.initial_lr - config.resolved_final_lr
        step_index = 0
        for pairs, negs in epochs:
            for i, pair in enumerate(pairs):
                lr = config.initial_lr - span * (step_index / max(1, total - 1))
                if objective is Objective.NEGATIVE_SAMPLING:
                    step_negative_sampling(slow, pair, negs[i], lr)
                else:
                    step_full_softmax(slow, pair, lr)
                step_index += 1
        return fast, slow

    @pytest.mark.parametrize("objective", list(Objective))
    def test_kernel_matches_steps(self, objective):
        fast, slow = self._replay(objective, seed=21)
        assert np.allclose(fast.w_in, slow.w_in, rtol=1e-10, atol=1e-12)
        assert np.allclose(fast.w_out, slow.w_out, rtol=1e-10, atol=1e-12)


class TestSaveLoad:
    def test_round_trip_exact_tokens_and_close_vectors(self, tmp_path):
        streams = small_corpus(seed=9)
        vocab = build_vocabulary(streams)
        model = train(streams, vocab, TrainingConfig(dimension=6, epochs=1, seed=2))
        path = tmp_path / "model.txt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.vocab.id_to_token == vocab.id_to_token
        assert np.allclose(loaded.w_in, model.w_in, rtol=1e-7, atol=1e-9)

    def test_header_and_line_shape(self):
        vocab = Vocabulary.from_tokens(["only"])
        model = EmbeddingModel(np.array([[0.125]]), np.zeros((1, 1)), vocab)
        buffer = io.StringIO()
        save_model(model, buffer)
        assert buffer.getvalue() == "1 1\nonly 0.125\n"

    def test_wrong_value_count_fatal_with_line(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("3 4\na 1 2 3 4\nb 1 2 3 4 5\nc 1 2 3 4\n")
        with pytest.raises(DataError, match=":3"):
            load_model(path)

    def test_row_count_mismatch_fatal(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("2 2\na 1 2\n")
        with pytest.raises(DataError, match="declares 2"):
            load_model(path)

    def test_load_with_matching_vocabulary(self, tmp_path):
        streams = small_corpus(seed=10)
        vocab = build_vocabulary(streams)
        model = train(streams, vocab, TrainingConfig(dimension=4, epochs=1, seed=6))
        path = tmp_path / "model.txt"
        save_model(model, path)
        loaded = load_model(path, vocab=vocab)
        assert loaded.vocab.freq_of("a") == vocab.freq_of("a")

    def test_load_with_mismatched_vocabulary_fatal(self, tmp_path):
        vocab = Vocabulary.from_tokens(["a", "b"])
        model = EmbeddingModel(np.ones((2, 2)), np.zeros((2, 2)), vocab)
        path = tmp_path / "model.txt"
        save_model(model, path)
        other = Vocabulary.from_tokens(["b", "a"])
        with pytest.raises(DataError, match="order"):
            load_model(path, vocab=other)
