import numpy as np
import pytest

from fintag.corpus import AnnotatedSentence, SyntheticConfig, generate_synthetic, synthetic_labelset
from fintag.crf import CrfParams
from fintag.labels import LabelSet, validate_iob2
from fintag.tagger import (
    FeatureConfig,
    FingerprintMismatch,
    TaggerError,
    TaggerModel,
    TrainConfig,
    emissions,
    extract_features,
    load_model,
    predict,
    predict_detailed,
    save_model,
    topk_tags,
    train,
)
from fintag.tokenization import build_subword_vocab


@pytest.fixture(scope="module")
def feature_config():
    return FeatureConfig(hash_dimension=2**14)


def make_model(labelset, feature_config, head="softmax", granularity="word",
               policy="none", vocab=None, shape_vocab=None, weights=None, params=None):
    L = len(labelset.labels)
    if weights is None:
        weights = np.zeros((feature_config.hash_dimension + 1, L), dtype=np.float32)
    if head == "crf" and params is None:
        params = CrfParams.zeros(L)
    return TaggerModel(
        weights=weights,
        head=head,
        granularity=granularity,
        policy=policy,
        feature_config=feature_config,
        labelset=labelset,
        vocab=vocab,
        shape_vocab=shape_vocab,
        crf_params=params,
    )


class TestExtractFeatures:
    def test_includes_pseudo_token_identity(self, feature_config):
        from fintag.tagger import hash_feature

        features = extract_features(["[XX.X]"], 0, feature_config)
        assert hash_feature("id=[XX.X]") % feature_config.hash_dimension in features

    def test_deterministic(self, feature_config):
        units = ["fees", "of", "[NUM]"]
        assert extract_features(units, 1, feature_config) == extract_features(
            units, 1, feature_config
        )

    def test_identical_windows_identical_sets(self, feature_config):
        # difference only beyond the +/-2 window
        a = extract_features(["x", "mid", "y", "pad", "tail", "one"], 1, feature_config)
        b = extract_features(["x", "mid", "y", "pad", "other", "two"], 1, feature_config)
        assert a == b

    def test_position_out_of_range(self, feature_config):
        with pytest.raises(TaggerError):
            extract_features(["a"], 1, feature_config)


class TestEmissions:
    def test_zero_weights_zero_scores(self, small_labelset, feature_config):
        model = make_model(small_labelset, feature_config)
        scores = emissions(model, ["fees", "of", "1,000"])
        assert scores.shape == (3, len(small_labelset.labels))
        assert np.all(scores == 0.0)

    def test_linearity(self, small_labelset, feature_config):
        rng = np.random.default_rng(5)
        weights = rng.normal(size=(feature_config.hash_dimension + 1, len(small_labelset.labels))).astype(np.float32)
        weights[-1] = 0.0
        model = make_model(small_labelset, feature_config, weights=weights)
        doubled = make_model(small_labelset, feature_config, weights=weights * 2)
        units = ["alpha", "beta", "gamma"]
        assert np.allclose(emissions(doubled, units), 2 * emissions(model, units))

    def test_matches_feature_sum_oracle(self, small_labelset, feature_config):
        rng = np.random.default_rng(9)
        weights = rng.normal(size=(feature_config.hash_dimension + 1, len(small_labelset.labels))).astype(np.float32)
        weights[-1] = 0.0
        model = make_model(small_labelset, feature_config, weights=weights)
        units = ["fees", "of", "53.2"]
        scores = emissions(model, units)
        for t in range(len(units)):
            indices = extract_features(units, t, feature_config)
            expected = np.zeros(len(small_labelset.labels))
            for f in indices:
                expected += weights[f].astype(np.float64)
            assert np.allclose(scores[t], expected, atol=1e-5)


class TestTrain:
    def test_memorizes_one_sentence(self, small_labelset, feature_config):
        sentence = AnnotatedSentence.create(
            ["total", "revenue", "was", "9,323.0"],
            ["O", "O", "O", "B-Revenues"],
        )
        train_set = [sentence] * 50
        config = TrainConfig(epochs=20, learning_rate=0.5, batch_size=8, seed=0)
        model = train(train_set, [], small_labelset, feature_config, config)
        assert model.history[-1]["train_loss_per_token"] < 0.1
        assert predict(model, sentence.tokens) == list(sentence.labels)

    def test_empty_train_set_rejected(self, small_labelset):
        with pytest.raises(TaggerError):
            train([], [], small_labelset)

    def test_deterministic_model_bytes(self, tmp_path, feature_config):
        labelset = synthetic_labelset(4)
        sentences = generate_synthetic(SyntheticConfig(120, 4, seed=5), labelset)
        config = TrainConfig(epochs=3, seed=11, learning_rate=0.5)
        paths = []
        for name in ("a.ftm", "b.ftm"):
            model = train(sentences, [], labelset, feature_config, config,
                          granularity="subword", policy="num")
            path = tmp_path / name
            save_model(model, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_l2_shrinks_weights(self, small_labelset, feature_config):
        sentence = AnnotatedSentence.create(["alpha", "1,000"], ["O", "B-Revenues"])
        base = TrainConfig(epochs=5, seed=0)
        reg = TrainConfig(epochs=5, seed=0, l2_strength=0.01)
        m0 = train([sentence] * 20, [], small_labelset, feature_config, base)
        m1 = train([sentence] * 20, [], small_labelset, feature_config, reg)
        assert np.abs(m1.weights).sum() < np.abs(m0.weights).sum()

    def test_crf_head_trains(self, small_labelset, feature_config):
        sentence = AnnotatedSentence.create(
            ["fees", "of", "1.5", "million"],
            ["O", "O", "B-Revenues", "I-Revenues"],
        )
        config = TrainConfig(epochs=8, learning_rate=0.3, seed=0)
        model = train([sentence] * 30, [], small_labelset, feature_config, config, head="crf")
        assert predict(model, sentence.tokens) == list(sentence.labels)
        losses = [h["train_loss_per_token"] for h in model.history]
        assert losses[-1] < losses[0]


class TestPredict:
    def test_zero_weight_softmax_predicts_o(self, small_labelset, feature_config):
        model = make_model(small_labelset, feature_config)
        assert predict(model, ["fees", "of", "1,000"]) == ["O", "O", "O"]

    def test_empty_sentence_rejected(self, small_labelset, feature_config):
        model = make_model(small_labelset, feature_config)
        with pytest.raises(TaggerError):
            predict(model, [])

    def test_crf_subword_always_valid(self, small_labelset, feature_config):
        rng = np.random.default_rng(123)
        vocab = build_subword_vocab(
            [AnnotatedSentence.create(["seed", "words", "1,234.5"], ["O", "O", "O"])]
        )
        L = len(small_labelset.labels)
        weights = rng.normal(size=(feature_config.hash_dimension + 1, L)).astype(np.float32) * 2
        weights[-1] = 0.0
        params = CrfParams(rng.normal(size=(L, L)), rng.normal(size=L), rng.normal(size=L))
        model = make_model(
            small_labelset, feature_config, head="crf", granularity="subword",
            vocab=vocab, weights=weights, params=params,
        )
        alphabet = ["fees", "of", "1,234.5", "12.78", "rent", "tax", "9", "x,y", "zz"]
        for _ in range(1000):
            n = int(rng.integers(1, 7))
            tokens = [alphabet[i] for i in rng.integers(0, len(alphabet), size=n)]
            detail = predict_detailed(model, tokens)
            assert validate_iob2(detail.word_labels, small_labelset) == []
            assert validate_iob2(detail.unit_labels, small_labelset) == []
            assert len(detail.word_labels) == len(tokens)

    def test_trained_shape_model_uses_cue(self, synth_labelset):
        sentences = generate_synthetic(SyntheticConfig(2500, 12, seed=2), synth_labelset)
        config = TrainConfig(epochs=10, learning_rate=1.0, batch_size=16, seed=0)
        model = train(
            sentences, [], synth_labelset, FeatureConfig(hash_dimension=2**16), config,
            granularity="subword", policy="shape",
        )
        # held-out template built from the generator's grammar: the cue noun
        # "interest" pins the percent tag even for an unseen amount
        tokens = ["the", "company", "reported", "net", "interest", "of", "4.95", "in", "the", "quarter"]
        labels = predict(model, tokens)
        assert labels[6] == "B-DebtInstrumentInterestRateStatedPercentage"

    def test_word_and_subword_lengths(self, small_labelset, feature_config):
        vocab = build_subword_vocab(
            [AnnotatedSentence.create(["alpha", "beta", "1,234.5"], ["O", "O", "O"])]
        )
        model = make_model(small_labelset, feature_config, granularity="subword", vocab=vocab)
        tokens = ["alpha", "1,234.5", "beta"]
        detail = predict_detailed(model, tokens)
        assert len(detail.word_labels) == 3
        assert sum(detail.piece_counts) == len(detail.unit_labels)
        assert len(detail.unit_labels) > 3  # the number fragmented


class TestTopK:
    def test_mass_sums_to_one(self, small_labelset, feature_config):
        rng = np.random.default_rng(3)
        weights = rng.normal(size=(feature_config.hash_dimension + 1, len(small_labelset.labels))).astype(np.float32)
        weights[-1] = 0.0
        model = make_model(small_labelset, feature_config, weights=weights)
        ranked = topk_tags(model, ["fees", "of", "1,000"], 2, len(small_labelset.tags))
        scores = emissions(model, ["fees", "of", "1,000"])
        row = scores[2] - scores[2].max()
        probs = np.exp(row) / np.exp(row).sum()
        o_mass = probs[0]
        assert sum(p for _, p in ranked) + o_mass == pytest.approx(1.0, abs=1e-6)

    def test_prefix_property(self, small_labelset, feature_config):
        rng = np.random.default_rng(4)
        weights = rng.normal(size=(feature_config.hash_dimension + 1, len(small_labelset.labels))).astype(np.float32)
        weights[-1] = 0.0
        model = make_model(small_labelset, feature_config, weights=weights)
        top1 = topk_tags(model, ["fees", "of", "1,000"], 1, 1)
        top3 = topk_tags(model, ["fees", "of", "1,000"], 1, 3)
        assert top3[:1] == top1

    def test_uniform_model_returns_tag_order(self, small_labelset, feature_config):
        model = make_model(small_labelset, feature_config)
        ranked = topk_tags(model, ["alpha"], 0, 3)
        assert [tag for tag, _ in ranked] == list(small_labelset.tags)
        assert len({p for _, p in ranked}) == 1

    def test_k_out_of_range(self, small_labelset, feature_config):
        model = make_model(small_labelset, feature_config)
        with pytest.raises(TaggerError):
            topk_tags(model, ["alpha"], 0, 0)
        with pytest.raises(TaggerError):
            topk_tags(model, ["alpha"], 0, 4)
        with pytest.raises(TaggerError):
            topk_tags(model, ["alpha"], 5, 1)

    def test_crf_marginal_head(self, small_labelset, feature_config):
        rng = np.random.default_rng(8)
        L = len(small_labelset.labels)
        weights = rng.normal(size=(feature_config.hash_dimension + 1, L)).astype(np.float32)
        weights[-1] = 0.0
        params = CrfParams(rng.normal(size=(L, L)), rng.normal(size=L), rng.normal(size=L))
        model = make_model(small_labelset, feature_config, head="crf",
                           weights=weights, params=params)
        ranked = topk_tags(model, ["fees", "of", "1,000"], 2, 3)
        assert all(0.0 <= p <= 1.0 for _, p in ranked)
        assert sorted((p for _, p in ranked), reverse=True) == [p for _, p in ranked]


class TestSerialization:
    def _trained(self, tmp_path, head="softmax"):
        labelset = synthetic_labelset(4)
        sentences = generate_synthetic(SyntheticConfig(150, 4, seed=3), labelset)
        config = TrainConfig(epochs=3 if head == "softmax" else 2, seed=1)
        model = train(sentences, [], labelset, FeatureConfig(hash_dimension=2**14),
                      config, head=head, granularity="subword", policy="shape")
        path = tmp_path / "model.ftm"
        save_model(model, path)
        return model, path, labelset

    def test_round_trip_softmax(self, tmp_path):
        model, path, labelset = self._trained(tmp_path)
        loaded = load_model(path, labelset, model.vocab, model.shape_vocab)
        tokens = ["the", "company", "reported", "net", "revenue", "of", "7,782"]
        assert predict(loaded, tokens) == predict(model, tokens)
        assert np.array_equal(loaded.weights, model.weights)

    def test_round_trip_crf(self, tmp_path):
        model, path, labelset = self._trained(tmp_path, head="crf")
        loaded = load_model(path, labelset, model.vocab, model.shape_vocab)
        assert np.allclose(loaded.crf_params.transitions, model.crf_params.transitions)
        tokens = ["management", "recorded", "total", "consideration", "3.5", "million"]
        assert predict(loaded, tokens) == predict(model, tokens)

    def test_wrong_labelset_rejected(self, tmp_path):
        model, path, _ = self._trained(tmp_path)
        with pytest.raises(FingerprintMismatch):
            load_model(path, LabelSet(["Other"] * 1), model.vocab, model.shape_vocab)

    def test_wrong_vocab_rejected(self, tmp_path):
        model, path, labelset = self._trained(tmp_path)
        other_vocab = build_subword_vocab(
            [AnnotatedSentence.create(["different"], ["O"])]
        )
        with pytest.raises(FingerprintMismatch):
            load_model(path, labelset, other_vocab, model.shape_vocab)

    def test_missing_vocab_rejected(self, tmp_path):
        model, path, labelset = self._trained(tmp_path)
        with pytest.raises(FingerprintMismatch):
            load_model(path, labelset, None, model.shape_vocab)

    def test_not_a_model_file(self, tmp_path, small_labelset):
        path = tmp_path / "junk.ftm"
        path.write_bytes(b"not a model")
        with pytest.raises(TaggerError):
            load_model(path, small_labelset)
