import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from fdss.errors import MOutOfRange, SupercriticalM
from fdss.estimators import (
    CriticalExponentsTransformer,
    RegionClassifier,
    SelfMapTransformer,
    check_params_array,
)

X = np.array([[3.0, 0.25, 1.2, 0.0], [4.0, 0.3, 1.5, 1.0], [5.0, 0.5, 1.8, 0.5]])


def test_critical_exponents_columns():
    out = CriticalExponentsTransformer().fit_transform(X)
    assert out.shape == (3, 8)
    assert out[0, 5] == pytest.approx(1.25)
    assert list(CriticalExponentsTransformer().fit(X).get_feature_names_out())[5] == "p_s"


def test_selfmap_round_trip():
    t = SelfMapTransformer().fit(X)
    bar = t.transform(X)
    assert bar[0, 0] == pytest.approx(4.0) and bar[0, 3] == pytest.approx(1.6)
    assert np.allclose(t.inverse_transform(bar), X, rtol=1e-10, atol=1e-10)
    assert SelfMapTransformer(with_theta=True).fit_transform(X)[0, 4] == pytest.approx(-0.5)


def test_selfmap_rejects_supercritical():
    with pytest.raises(SupercriticalM):
        SelfMapTransformer().fit([[3.0, 0.5, 1.2, 0.0]])


def test_region_classifier():
    clf = RegionClassifier().fit(X)
    pred = clf.predict(X)
    assert pred[0] == "E"
    assert "" in clf.classes_
    assert clf.predict_behaviors(X[:1]) == [["GlobalDecayFast", "GlobalDecaySlow"]]
    assert clf.predict([[3.0, 0.25, 1.2, -0.5]])[0] == ""


def test_validation_and_clone():
    with pytest.raises(MOutOfRange):
        check_params_array([[3.0, 1.5, 2.0, 0.0]])
    with pytest.raises(ValueError):
        check_params_array([[3.0, 0.5, 2.0]])
    pipe = make_pipeline(clone(SelfMapTransformer(with_theta=False)), CriticalExponentsTransformer())
    assert pipe.fit_transform(X).shape == (3, 8)
