import pytest

from fintag.corpus import SyntheticConfig, generate_synthetic, synthetic_labelset
from fintag.labels import LabelSet
from fintag.tokenization import ShapeVocab, build_subword_vocab, fixture_vocab


@pytest.fixture(scope="session")
def small_labelset():
    return LabelSet(["Revenues", "Expenses", "TaxRate"])


@pytest.fixture(scope="session")
def synth_labelset():
    return synthetic_labelset(12)


@pytest.fixture(scope="session")
def synth_corpus(synth_labelset):
    return generate_synthetic(SyntheticConfig(n_sentences=1000, n_tags=12, seed=1), synth_labelset)


@pytest.fixture(scope="session")
def synth_shapes(synth_corpus):
    return ShapeVocab.from_sentences(synth_corpus)


@pytest.fixture(scope="session")
def synth_vocab(synth_corpus, synth_shapes):
    return build_subword_vocab(synth_corpus, synth_shapes)


@pytest.fixture(scope="session")
def demo_vocab():
    return fixture_vocab()
