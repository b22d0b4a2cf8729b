"""Review records, label assignment, fold splitting and class balancing."""

import csv
import enum
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class LabelState(enum.IntEnum):
    """Observed label of an instance. The integer value is the margin sign."""

    POSITIVE = 1
    UNLABELLED = -1


@dataclass(frozen=True)
class ReviewRecord:
    id: str
    text: str
    age_days: int
    helpful_votes: int
    rating: Optional[float] = None
    user_id: Optional[str] = None

    def __post_init__(self):
        if self.age_days < 0:
            raise ValueError(f"age_days must be >= 0, got {self.age_days}")
        if self.helpful_votes < 0:
            raise ValueError(f"helpful_votes must be >= 0, got {self.helpful_votes}")
        if self.rating is not None and not 1.0 <= self.rating <= 5.0:
            raise ValueError(f"rating must lie in [1, 5], got {self.rating}")

    def to_dict(self):
        return {
            "id": self.id,
            "user_id": self.user_id,
            "text": self.text,
            "rating": self.rating,
            "age_days": self.age_days,
            "helpful_votes": self.helpful_votes,
        }


@dataclass(frozen=True)
class ClassPriors:
    pi_plus: float
    pi_minus: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.pi_plus < 1.0:
            raise ValueError(f"pi_plus must lie in (0, 1), got {self.pi_plus}")
        object.__setattr__(self, "pi_minus", 1.0 - self.pi_plus)


class Dataset:
    """Immutable sequence of review records with their observed labels.

    ``labels`` is a read-only int8 array of +1 (positive) / -1 (unlabelled).
    """

    def __init__(self, records: Sequence[ReviewRecord], labels):
        records = tuple(records)
        labels = np.asarray(labels, dtype=np.int8).copy()
        if len(records) == 0:
            raise ValueError("empty dataset")
        if labels.shape != (len(records),):
            raise ValueError("labels must be a vector with one entry per record")
        if not np.all(np.isin(labels, (1, -1))):
            raise ValueError("labels must be +1 or -1")
        labels.setflags(write=False)
        self._records = records
        self._labels = labels

    @property
    def records(self):
        return self._records

    @property
    def labels(self):
        return self._labels

    @property
    def n_positive(self):
        return int(np.count_nonzero(self._labels == 1))

    @property
    def n_unlabelled(self):
        return int(np.count_nonzero(self._labels == -1))

    @property
    def ages(self):
        return np.array([r.age_days for r in self._records], dtype=np.int64)

    @property
    def ids(self):
        return [r.id for r in self._records]

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        for rec, lab in zip(self._records, self._labels):
            yield rec, LabelState(int(lab))

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset([self._records[i] for i in indices], self._labels[indices])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self._records == other._records and np.array_equal(self._labels, other._labels)

    def __repr__(self):
        return (f"Dataset(n={len(self)}, n_positive={self.n_positive}, "
                f"n_unlabelled={self.n_unlabelled})")


class LoadedReviews(NamedTuple):
    records: list
    skipped: int


_REQUIRED = ("id", "text", "age_days", "helpful_votes")


def _parse_row(row):
    for key in _REQUIRED:
        if row.get(key) in (None, ""):
            raise ValueError(f"missing field {key!r}")
    if not isinstance(row["text"], str):
        raise ValueError("text must be a string")
    rating = row.get("rating")
    rating = None if rating in (None, "") else float(rating)
    user_id = row.get("user_id")
    user_id = None if user_id in (None, "") else str(user_id)
    age = float(row["age_days"])
    votes = float(row["helpful_votes"])
    if not (age.is_integer() and votes.is_integer()):
        raise ValueError("age_days and helpful_votes must be integers")
    return ReviewRecord(id=str(row["id"]), text=row["text"], age_days=int(age),
                        helpful_votes=int(votes), rating=rating, user_id=user_id)


def load_reviews(path, format="jsonl"):
    """Read review records from a JSONL or CSV file.

    Malformed rows are skipped and counted rather than raising. An unreadable
    file raises ``OSError``.

    Returns
    -------
    LoadedReviews
        ``(records, skipped)`` with records in file order.
    """
    path = Path(path)
    fmt = format.lower()
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown format {format!r}; expected 'jsonl' or 'csv'")
    records = []
    skipped = 0
    with path.open(encoding="utf-8", newline="") as fh:
        if fmt == "jsonl":
            rows = ((lineno, line) for lineno, line in enumerate(fh, 1) if line.strip())
            for lineno, line in rows:
                try:
                    row = json.loads(line)
                    if not isinstance(row, dict):
                        raise ValueError("not a JSON object")
                    records.append(_parse_row(row))
                except (ValueError, TypeError) as exc:
                    skipped += 1
                    logger.warning("%s:%d skipped: %s", path, lineno, exc)
        else:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ValueError(f"{path}: CSV header row required")
            for lineno, row in enumerate(reader, 2):
                try:
                    records.append(_parse_row(row))
                except (ValueError, TypeError) as exc:
                    skipped += 1
                    logger.warning("%s:%d skipped: %s", path, lineno, exc)
    return LoadedReviews(records, skipped)


def write_reviews(records, path):
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")


def apply_threshold(records, threshold=1):
    """Label a record positive iff it has at least ``threshold`` helpful votes."""
    if int(threshold) != threshold or threshold < 1:
        raise ValueError(f"threshold must be a positive integer, got {threshold}")
    records = list(records)
    if not records:
        raise ValueError("empty dataset")
    labels = [1 if r.helpful_votes >= threshold else -1 for r in records]
    return Dataset(records, labels)


def summary_line(name, dataset):
    """One-line corpus summary, e.g. ``Yelp: 1,373,587 reviews, 45.21% helpful``."""
    pct = 100.0 * dataset.n_positive / len(dataset)
    return f"{name}: {len(dataset):,} reviews, {pct:.2f}% helpful"


@dataclass(frozen=True)
class FoldSplit:
    k: int
    assignments: np.ndarray

    def train_test(self, fold):
        """Indices of the training and held-out rows for ``fold``."""
        if not 0 <= fold < self.k:
            raise IndexError(f"fold {fold} out of range for k={self.k}")
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test

    def __iter__(self):
        for fold in range(self.k):
            yield self.train_test(fold)


def split_folds(dataset, k=5, seed=0):
    """Stratified k-fold assignment.

    Each label class is shuffled with ``seed`` and the classes are dealt
    round-robin (positives first, then unlabelled) so that fold sizes and
    per-class counts per fold each differ by at most one.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    n = len(dataset)
    if k > n:
        raise ValueError(f"cannot split {n} instances into {k} folds")
    rng = np.random.default_rng(seed)
    labels = dataset.labels
    order = np.concatenate([
        rng.permutation(np.flatnonzero(labels == 1)),
        rng.permutation(np.flatnonzero(labels == -1)),
    ])
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    assignments.setflags(write=False)
    return FoldSplit(k=k, assignments=assignments)


def downsample_indices(labels, seed=0):
    """Row indices that balance the unlabelled class down to the positive count."""
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    unl = np.flatnonzero(labels == -1)
    if len(pos) < 1:
        raise ValueError("down-sampling needs at least one positive instance")
    if len(pos) > len(unl):
        warnings.warn(
            f"{len(pos)} positives exceed {len(unl)} unlabelled; returning input unchanged",
            stacklevel=3,
        )
        return np.arange(len(labels))
    rng = np.random.default_rng(seed)
    kept = rng.choice(unl, size=len(pos), replace=False)
    return np.sort(np.concatenate([pos, kept]))


def downsample_balance(train, seed=0):
    """Randomly drop unlabelled instances until both classes are the same size."""
    idx = downsample_indices(train.labels, seed)
    if len(idx) == len(train):
        return train
    return train.subset(idx)
