"""Feature extraction: tokenization, text vectors, sentiment, topics, fusion."""

from .fusion import FeatureVector, Featurizer, FeaturizerError, fit_featurizer
from .sentiment import LexiconError, SentimentLexicon
from .tokenizer import Tokenizer, bundled_stopwords
from .topics import GibbsState, TopicModel, TopicModelError, fit_lda, infer_topics
from .vectorizer import TextVectorizer, VectorizerError, fit_vectorizer

__all__ = [
    "FeatureVector",
    "Featurizer",
    "FeaturizerError",
    "fit_featurizer",
    "LexiconError",
    "SentimentLexicon",
    "Tokenizer",
    "bundled_stopwords",
    "GibbsState",
    "TopicModel",
    "TopicModelError",
    "fit_lda",
    "infer_topics",
    "TextVectorizer",
    "VectorizerError",
    "fit_vectorizer",
]
