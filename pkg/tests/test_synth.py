import numpy as np
import pytest

from ncws.model import LinearModel
from ncws.synth import (DiscreteDistribution, SynthConfig, bayes_labels, exact_risk, generate,
                        make_exposure, pointwise_gap, read_truth, verify_identity, write_truth)

LOSSES = ("hinge", "double-hinge", "logistic")


def test_full_and_zero_exposure():
    ds, truth = generate(SynthConfig(n_instances=500, exposure=lambda a: np.ones_like(a, float),
                                     seed=3))
    assert np.array_equal(ds.labels, truth)
    ds0, _ = generate(SynthConfig(n_instances=500, exposure=lambda a: np.zeros_like(a, float)))
    assert ds0.n_positive == 0


def test_default_observed_fraction_and_pu_assumption():
    ds, truth = generate(SynthConfig(n_instances=20_000, seed=1))
    assert abs(np.mean(ds.labels == 1) - 0.225) <= 0.01
    assert np.all(truth[ds.labels == 1] == 1)
    assert all(r.helpful_votes >= 1 for r, lab in ds if lab == 1)
    assert ds.ages.min() >= 0 and ds.ages.max() <= 1000


def test_generation_is_seeded():
    a, ta = generate(SynthConfig(n_instances=300, seed=7))
    b, tb = generate(SynthConfig(n_instances=300, seed=7))
    c, _ = generate(SynthConfig(n_instances=300, seed=8))
    assert a == b and np.array_equal(ta, tb)
    assert a != c


@pytest.mark.parametrize("kwargs", [
    {"positive_fraction": 0.0}, {"positive_fraction": 1.0}, {"n_instances": 0},
    {"feature_noise": -1.0}, {"exposure": "sideways"},
    {"exposure": lambda a: 1.0 - np.asarray(a) / 1000},
    {"exposure": lambda a: 2.0 * np.ones_like(a, float)},
])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_exposure_shapes():
    ages = np.array([0, 500, 1000])
    assert make_exposure("linear", 1000)(ages).tolist() == [0.0, 0.5, 1.0]
    assert make_exposure("step:500", 1000)(ages).tolist() == [0.0, 1.0, 1.0]
    lg = make_exposure("logistic", 1000)(ages)
    assert lg[1] == 0.5 and lg[0] < 0.01 and lg[2] > 0.99


def test_truth_roundtrip(tmp_path):
    ds, truth = generate(SynthConfig(n_instances=20))
    write_truth(ds.ids, truth, tmp_path / "t.csv")
    table = read_truth(tmp_path / "t.csv")
    assert [table[i] for i in ds.ids] == truth.tolist()


def test_exact_risk_examples():
    zero = LinearModel.zeros(1)
    dist = DiscreteDistribution([[0.0], [1.0]], [[0.3, 0.2], [0.2, 0.3]])
    assert exact_risk(dist, zero, "joint") == pytest.approx(1.0, abs=1e-15)
    one = DiscreteDistribution([[0.0]], [[0.5, 0.5]])
    assert exact_risk(one, LinearModel(np.array([0.0]), 1.0), "joint") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        exact_risk(dist, zero, "bogus")


def _models(rng, n, dim):
    return [LinearModel(rng.normal(size=dim) * 2, float(rng.normal())) for _ in range(n)]


@pytest.mark.parametrize("base", LOSSES)
def test_identity_on_random_distribution(rng, base):
    dist = DiscreteDistribution.random(rng, n_points=8)
    assert verify_identity(dist, _models(rng, 100, 2), base) < 1e-10
    assert pointwise_gap(dist) < 1e-12


def test_identity_precondition():
    dist = DiscreteDistribution([[0.0], [1.0]], [[0.5, 0.0], [0.2, 0.3]])
    with pytest.raises(ValueError):
        verify_identity(dist, [LinearModel.zeros(1)])
    with pytest.raises(ValueError):
        exact_risk(dist, LinearModel.zeros(1), "weighted")
    # the joint form does not divide by the posterior
    assert np.isfinite(exact_risk(dist, LinearModel.zeros(1), "joint"))


def test_clamping_bias_is_visible():
    # posterior 0.0005 sits below eps = 1e-3, so clamping changes the weight
    dist = DiscreteDistribution([[0.0], [1.0]], [[0.4998, 0.00025], [0.2, 0.29995]])
    models = [LinearModel(np.array([1.0]), 0.0), LinearModel(np.array([-2.0]), 0.5)]
    assert verify_identity(dist, models) < 1e-10
    assert verify_identity(dist, models, epsilon=1e-3) > 1e-4


def test_distribution_validation():
    with pytest.raises(ValueError):
        DiscreteDistribution([[0.0]], [[0.5, 0.6]])
    with pytest.raises(ValueError):
        DiscreteDistribution([[0.0], [1.0]], [[1.0, 0.0]])


def test_bayes_labels():
    dist = DiscreteDistribution([[0.0], [1.0], [2.0]], [[0.36, 0.04], [0.08, 0.32], [0.1, 0.1]])
    assert bayes_labels(dist).tolist() == [1, -1, -1]
