import pytest

from ctxsearch.cli import default_stopwords_path
from ctxsearch.lexicon import Lexicon, Sense, load_stopwords


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords(default_stopwords_path())


@pytest.fixture()
def small_lexicon():
    return Lexicon(
        {
            "java": [
                Sense("java", "java.lang", "a general purpose programming language", ("jvm",)),
                Sense("java", "java.isle", "an island of indonesia", ("indonesia",)),
                Sense("java", "java.drink", "an informal word for brewed coffee", ("coffee",)),
            ],
            "coffee": [
                Sense("coffee", "coffee.drink", "a beverage brewed from roasted beans", ()),
            ],
        }
    )
