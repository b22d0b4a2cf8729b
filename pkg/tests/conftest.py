import numpy as np
import pytest

from ncws.data import ReviewRecord


def make_records(votes, ages=None):
    ages = ages if ages is not None else [10 * i for i in range(len(votes))]
    return [ReviewRecord(id=f"r{i}", text=f"review {i}.", age_days=a, helpful_votes=v, rating=3.0)
            for i, (v, a) in enumerate(zip(votes, ages))]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
