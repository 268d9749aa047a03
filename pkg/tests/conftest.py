import pytest

from ake.corpus import Document, default_stopwords, segment_and_tokenize
from ake.features import Gazetteer, SignalLexicon
from ake.ngram_lm import build_model
from ake.synthdata import synthesize_corpus


def make_doc(title: str, body: str, category: str = "Technology", doc_id: str = "d1") -> Document:
    doc = Document(id=doc_id, title=title, body=body, category=category)
    doc.sentences = segment_and_tokenize(title, body)
    return doc


@pytest.fixture(scope="session")
def stopwords():
    return default_stopwords()


@pytest.fixture(scope="session")
def lexicon():
    return SignalLexicon.load()


@pytest.fixture(scope="session")
def gazetteer():
    return Gazetteer.load()


@pytest.fixture(scope="session")
def synth():
    """The bundled synthetic corpus: (docs, gold, lm_sequences)."""
    return synthesize_corpus(seed=7)


@pytest.fixture(scope="session")
def synth_store(synth):
    _, _, lm_sequences = synth
    return build_model(lm_sequences)
