"""Hand-engineered review features.

Four families are extracted from a review record:

* structural: word count (LEN), sentence count (NoS), average sentence
  length (ASL) and the share of question sentences (PoQS);
* lexical: TF-IDF unigram vector (UGR);
* syntactic: noun, adjective and adverb shares (Syn);
* metadata: rating, rating relative to the author's mean (Rating-Norm) and
  the age-based negativity of the review (Age).

``ReviewFeaturizer`` fits the data-dependent parts (vocabulary, user means,
oldest age) and assembles any named feature set as a matrix.
"""

import re
import string
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .negativity import DEFAULT_EPSILON, negativity_age

_PUNCT = str.maketrans("", "", string.punctuation)
_SENTENCE_END = re.compile(r"[.!?]+")

STRUCTURAL = ("len", "nos", "asl", "poqs")
SYNTACTIC = ("pct_noun", "pct_adj", "pct_adv")
SELECTORS = ("len", "nos", "asl", "poqs", "structural", "ugr", "syn", "rating",
             "rating-norm", "age", "metadata", "dense", "all")


def tokenize(text):
    """Lowercase, strip punctuation, split on whitespace."""
    return text.lower().translate(_PUNCT).split()


def structural_features(text):
    """``(LEN, NoS, ASL, PoQS)`` of a text.

    Sentences end at runs of ``.``, ``!`` or ``?``; a trailing fragment
    without a terminator still counts. Empty text gives all zeros.
    """
    n_words = len(tokenize(text))
    n_sent = 0
    n_quest = 0
    pos = 0
    for match in _SENTENCE_END.finditer(text):
        if text[pos:match.start()].translate(_PUNCT).strip():
            n_sent += 1
            n_quest += "?" in match.group()
        pos = match.end()
    if text[pos:].translate(_PUNCT).strip():
        n_sent += 1
    if n_sent == 0:
        return 0.0, 0.0, 0.0, 0.0
    return float(n_words), float(n_sent), n_words / n_sent, n_quest / n_sent


_ADJ_SUFFIXES = ("ous", "ful", "ive", "able", "ible", "less", "ic")
_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship")


def suffix_tagger(token):
    """Crude part-of-speech guess from the word ending.

    ``-ly`` is an adverb; ``-ous/-ful/-ive/-able/-ible/-less/-ic`` an
    adjective; ``-tion/-sion/-ment/-ness/-ity/-ance/-ence/-ship`` a noun;
    anything else OTHER. Pass a real tagger to ``syntactic_features`` for
    anything serious.
    """
    if len(token) > 3 and token.endswith("ly"):
        return "ADV"
    if len(token) > 4 and token.endswith(_ADJ_SUFFIXES):
        return "ADJ"
    if len(token) > 4 and token.endswith(_NOUN_SUFFIXES):
        return "NOUN"
    return "OTHER"


def syntactic_features(text, tagger=suffix_tagger):
    """Shares of nouns, adjectives and adverbs among the text's tokens."""
    tokens = tokenize(text)
    if not tokens:
        return 0.0, 0.0, 0.0
    tags = Counter(tagger(t) for t in tokens)
    n = len(tokens)
    return tags["NOUN"] / n, tags["ADJ"] / n, tags["ADV"] / n


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict
    doc_freq: dict
    n_docs: int

    def idf(self, token):
        return np.log(self.n_docs / self.doc_freq[token])


def tfidf_fit(corpus, max_vocab=10_000):
    """Keep the ``max_vocab`` tokens with the highest document frequency.

    Ties are broken lexicographically; indices follow that ranking.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    df = Counter()
    for doc in corpus:
        df.update(set(doc))
    ranked = sorted(df, key=lambda t: (-df[t], t))[:max_vocab]
    return TfidfModel(vocabulary={t: i for i, t in enumerate(ranked)},
                      doc_freq={t: df[t] for t in ranked},
                      n_docs=len(corpus))


def tfidf_transform(model, doc):
    """L2-normalised ``tf * ln(n_docs / df)`` weights as a sparse row vector."""
    counts = Counter(t for t in doc if t in model.vocabulary)
    cols = [model.vocabulary[t] for t in counts]
    vals = np.array([c * model.idf(t) for t, c in counts.items()], dtype=np.float64)
    norm = np.sqrt(vals @ vals) if len(vals) else 0.0
    if norm > 0:
        vals = vals / norm
    return sp.csr_matrix((vals, ([0] * len(cols), cols)), shape=(1, len(model.vocabulary)))


@dataclass(frozen=True)
class UserStats:
    mean_rating: dict
    review_count: dict

    @classmethod
    def fit(cls, records):
        sums, counts = Counter(), Counter()
        for r in records:
            if r.user_id is not None and r.rating is not None:
                sums[r.user_id] += r.rating
                counts[r.user_id] += 1
        return cls({u: sums[u] / counts[u] for u in counts}, dict(counts))

    def __bool__(self):
        return bool(self.mean_rating)


def metadata_features(record, stats, max_age_days, epsilon=DEFAULT_EPSILON,
                      default_rating=3.0):
    """``{'rating', 'rating_norm', 'age'}`` for one record.

    ``rating_norm`` (user's mean rating minus this rating) is present only
    when ``stats`` holds any user; unseen users get 0.
    """
    if record.age_days > max_age_days:
        raise ValueError(f"age {record.age_days} exceeds max_age_days={max_age_days}")
    rating = default_rating if record.rating is None else record.rating
    out = {"rating": rating}
    if stats:
        mean = stats.mean_rating.get(record.user_id)
        out["rating_norm"] = 0.0 if mean is None else mean - rating
    out["age"] = negativity_age(record.age_days, max_age_days, epsilon)
    return out


def assemble(selector, columns):
    """Stack named feature columns into the matrix for ``selector``.

    ``columns`` maps feature names to column arrays (``'ugr'`` to a sparse
    matrix). Returns the matrix and its column names.
    """
    names = schema_for(selector, has_user_stats="rating_norm" in columns,
                       vocabulary_size=columns["ugr"].shape[1] if "ugr" in columns else 0)
    blocks = []
    for name in _expand(selector, "rating_norm" in columns):
        if name == "ugr":
            blocks.append(sp.csr_matrix(columns["ugr"]))
        else:
            blocks.append(sp.csr_matrix(np.asarray(columns[name], dtype=np.float64)[:, None]))
    if any(name == "ugr" for name in _expand(selector, "rating_norm" in columns)):
        return sp.hstack(blocks, format="csr"), names
    return sp.hstack(blocks).toarray(), names


def _expand(selector, has_user_stats):
    selector = selector.lower()
    if selector not in SELECTORS:
        raise ValueError(f"unknown feature set {selector!r}; choose from {', '.join(SELECTORS)}")
    metadata = ["rating"] + (["rating_norm"] if has_user_stats else []) + ["age"]
    table = {
        "structural": list(STRUCTURAL),
        "ugr": ["ugr"],
        "syn": list(SYNTACTIC),
        "rating-norm": ["rating_norm"],
        "metadata": metadata,
        "dense": list(STRUCTURAL) + list(SYNTACTIC) + metadata,
        "all": list(STRUCTURAL) + ["ugr"] + list(SYNTACTIC) + metadata,
    }
    names = table.get(selector, [selector])
    if "rating_norm" in names and not has_user_stats:
        raise ValueError("rating-norm needs user ids in the training records")
    return names


def schema_for(selector, has_user_stats, vocabulary_size=0, vocabulary=None):
    """Ordered column names of the feature set ``selector``."""
    names = []
    for name in _expand(selector, has_user_stats):
        if name == "ugr":
            if vocabulary is not None:
                names.extend(f"ugr:{t}" for t in sorted(vocabulary, key=vocabulary.get))
            else:
                names.extend(f"ugr:{i}" for i in range(vocabulary_size))
        else:
            names.append(name)
    return names


class ReviewFeaturizer(TransformerMixin, BaseEstimator):
    """Turn review records into a feature matrix for a named feature set.

    Parameters
    ----------
    features : str
        One of ``len, nos, asl, poqs, structural, ugr, syn, rating,
        rating-norm, age, metadata, dense, all``. ``dense`` is ``all``
        without the TF-IDF block.
    max_vocab : int
        Vocabulary size for the TF-IDF block.
    max_age_days : int or None
        Oldest age used to normalise the Age feature; learned in ``fit``
        when None. Older ages seen later are capped at this value.
    tagger : callable or None
        Token to ``NOUN/ADJ/ADV/OTHER`` map; ``suffix_tagger`` when None.
    epsilon : float
        Clamp margin of the Age feature.

    Sets with a TF-IDF block come out as CSR matrices, others as dense arrays.
    """

    def __init__(self, features="all", max_vocab=10_000, max_age_days=None, tagger=None,
                 epsilon=DEFAULT_EPSILON):
        self.features = features
        self.max_vocab = max_vocab
        self.max_age_days = max_age_days
        self.tagger = tagger
        self.epsilon = epsilon

    def fit(self, X, y=None):
        records = list(X)
        if not records:
            raise ValueError("empty record list")
        self.user_stats_ = UserStats.fit(records)
        names = _expand(self.features, bool(self.user_stats_))
        if self.max_age_days is None:
            self.max_age_ = max(r.age_days for r in records)
        else:
            self.max_age_ = int(self.max_age_days)
        rated = [r.rating for r in records if r.rating is not None]
        self.default_rating_ = float(np.mean(rated)) if rated else 3.0
        if "ugr" in names:
            self.tfidf_ = tfidf_fit((tokenize(r.text) for r in records), self.max_vocab)
        else:
            self.tfidf_ = None
        vocab = None if self.tfidf_ is None else self.tfidf_.vocabulary
        self.feature_names_ = schema_for(self.features, bool(self.user_stats_), vocabulary=vocab)
        return self

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "feature_names_")
        return np.asarray(self.feature_names_, dtype=object)

    def transform(self, X):
        check_is_fitted(self, "feature_names_")
        records = list(X)
        names = _expand(self.features, bool(self.user_stats_))
        tagger = self.tagger or suffix_tagger
        columns = {}
        if set(names) & set(STRUCTURAL):
            block = np.array([structural_features(r.text) for r in records]).reshape(-1, 4)
            columns.update(zip(STRUCTURAL, block.T))
        if set(names) & set(SYNTACTIC):
            block = np.array([syntactic_features(r.text, tagger) for r in records]).reshape(-1, 3)
            columns.update(zip(SYNTACTIC, block.T))
        if set(names) & {"rating", "rating_norm", "age"}:
            meta = [metadata_features(_cap_age(r, self.max_age_), self.user_stats_, self.max_age_,
                                      self.epsilon, self.default_rating_) for r in records]
            for key in ("rating", "rating_norm", "age"):
                if not meta or key in meta[0]:
                    columns[key] = np.array([m[key] for m in meta], dtype=np.float64)
        if "ugr" in names:
            rows = [tfidf_transform(self.tfidf_, tokenize(r.text)) for r in records]
            columns["ugr"] = sp.vstack(rows, format="csr") if rows else \
                sp.csr_matrix((0, len(self.tfidf_.vocabulary)))
        if self.user_stats_:
            columns.setdefault("rating_norm", np.zeros(len(records)))
        return assemble(self.features, columns)[0]


def _cap_age(record, max_age):
    return record if record.age_days <= max_age else replace(record, age_days=max_age)


def featurizer_to_dict(featurizer):
    """JSON-ready state of a fitted ``ReviewFeaturizer`` (custom taggers are not kept)."""
    check_is_fitted(featurizer, "feature_names_")
    tfidf = featurizer.tfidf_
    return {
        "features": featurizer.features,
        "max_vocab": featurizer.max_vocab,
        "epsilon": featurizer.epsilon,
        "max_age": featurizer.max_age_,
        "default_rating": featurizer.default_rating_,
        "user_mean_rating": featurizer.user_stats_.mean_rating,
        "user_review_count": featurizer.user_stats_.review_count,
        "tfidf": None if tfidf is None else {
            "vocabulary": tfidf.vocabulary, "doc_freq": tfidf.doc_freq, "n_docs": tfidf.n_docs},
        "feature_names": list(featurizer.feature_names_),
    }


def featurizer_from_dict(data):
    fz = ReviewFeaturizer(features=data["features"], max_vocab=data["max_vocab"],
                          max_age_days=data["max_age"], epsilon=data["epsilon"])
    fz.max_age_ = data["max_age"]
    fz.default_rating_ = data["default_rating"]
    fz.user_stats_ = UserStats(data["user_mean_rating"], data["user_review_count"])
    fz.tfidf_ = None if data["tfidf"] is None else TfidfModel(**data["tfidf"])
    fz.feature_names_ = list(data["feature_names"])
    return fz
