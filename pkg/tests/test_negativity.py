import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncws.negativity import (AgeNegativity, ConstantNegativity, TableNegativity, make_negativity,
                             negativity_age, negativity_weight, positivity_default)

from .conftest import make_records


def test_negativity_examples():
    assert negativity_age(0, 99, 1e-3) == 1e-3
    # ln(100)/ln(101) and ln(10)/ln(101), evaluated with mpmath
    assert negativity_age(99, 99, 1e-3) == pytest.approx(0.997843971610956, abs=1e-12)
    assert negativity_age(9, 99, 1e-3) == pytest.approx(0.498921985805478, abs=1e-12)


def test_negativity_errors():
    with pytest.raises(ValueError):
        negativity_age(100, 99)
    with pytest.raises(ValueError):
        negativity_age(1, 99, epsilon=0.5)
    with pytest.raises(ValueError):
        negativity_age(1, 99, epsilon=0.0)


@given(st.integers(0, 5000), st.integers(0, 5000))
def test_negativity_base_invariance_and_range(age, extra):
    max_age = age + extra
    n = negativity_age(age, max_age)
    raw10 = math.log10(age + 1) / math.log10(max_age + 2)
    assert n == pytest.approx(min(max(raw10, 1e-3), 1 - 1e-3), abs=1e-12)
    assert 1e-3 <= n <= 1 - 1e-3


@given(st.integers(0, 3000), st.integers(0, 3000), st.integers(0, 3000))
def test_negativity_monotone_and_weight_non_increasing(a, b, extra):
    lo, hi = sorted((a, b))
    max_age = hi + extra
    assert negativity_age(lo, max_age) <= negativity_age(hi, max_age)
    assert (negativity_weight(negativity_age(lo, max_age))
            >= negativity_weight(negativity_age(hi, max_age)))


def test_weight_examples():
    assert negativity_weight(0.5) == 1.0
    assert negativity_weight(0.001) == pytest.approx(999.0)
    assert negativity_weight(0.99784) == pytest.approx(0.0021646757, rel=1e-8)


def test_weight_bounded_by_clamp():
    n = np.linspace(1e-3, 1 - 1e-3, 101)
    w = negativity_weight(n)
    assert np.all(np.diff(w) < 0)
    assert w.max() <= (1 - 1e-3) / 1e-3 + 1e-9


def test_positivity_default_examples():
    assert positivity_default(0.3) == pytest.approx(0.7)
    assert positivity_default(0.999) == pytest.approx(0.001)
    assert positivity_default(0.49893) == pytest.approx(0.50107)
    assert positivity_default(0.9999) == 1e-3


def test_age_transformer_learns_max_and_clamps_unseen():
    recs = make_records([0, 0, 0], ages=[0, 9, 99])
    t = AgeNegativity().fit(recs)
    assert t.max_age_ == 99
    out = t.transform(recs)
    assert out[2] == pytest.approx(0.997843971610956)
    older = make_records([0], ages=[500])
    assert t.transform(older)[0] == 1 - 1e-3


def test_other_sources(tmp_path):
    recs = make_records([0, 1])
    assert np.allclose(ConstantNegativity(0.4).fit(recs).transform(recs), 0.4)
    table = tmp_path / "n.csv"
    table.write_text("id,score\nr0,0.25\nr1,0.9\n", encoding="utf-8")
    assert TableNegativity(table).fit().transform(recs).tolist() == [0.25, 0.9]
    assert isinstance(make_negativity(f"file:{table}"), TableNegativity)
    assert make_negativity("constant:0.2").value == 0.2
    with pytest.raises(ValueError):
        make_negativity("bogus")
