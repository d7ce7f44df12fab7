import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from steinhaus.estimators import BallCounter, SPrimeScanner, SteinhausBallFinder, check_points
from steinhaus.norms import NormSpec
from steinhaus.pointset import lattice_window

WINDOW = lattice_window(2, 16.0, NormSpec.lp(2, 2))


def test_ball_counter_array_and_pointset():
    counter = BallCounter(radius=1.0, mode="closed").fit(WINDOW)
    assert counter.predict([[0, 0], [0.5, 0.5]]).tolist() == [5, 4]
    from_array = BallCounter(radius=1.0).fit(WINDOW.coords)
    assert from_array.points_.horizon == 16.0
    assert from_array.predict([[0, 0]]).tolist() == [1]
    assert from_array.query([0, 0], 2.0).count == 9


def test_params_and_clone():
    finder = SteinhausBallFinder(n=5, method="growth", seed=3)
    params = finder.get_params()
    assert params["n"] == 5 and params["method"] == "growth"
    twin = clone(finder).set_params(n=6)
    assert twin.n == 6 and finder.n == 5


def test_finder_predict():
    finder = SteinhausBallFinder(n=4).fit(WINDOW)
    radii = finder.predict([[np.sqrt(2), 1 / 3], [0.5, 0.5]])
    assert radii.shape == (2,)
    assert all(c.n == 4 for c in finder.certificates_)
    growth = SteinhausBallFinder(n=4, method="growth").fit(WINDOW)
    growth.predict([[0.5, 0.5]])
    assert growth.certificates_[0].method == "growth"
    with pytest.raises(ValueError):
        SteinhausBallFinder(method="magic").fit(WINDOW)


def test_not_fitted_and_shapes():
    with pytest.raises(NotFittedError):
        BallCounter().predict([[0, 0]])
    counter = BallCounter().fit(WINDOW)
    with pytest.raises(ValueError):
        counter.predict([[0, 0, 0]])
    with pytest.raises(ValueError):
        check_points([[np.nan, 0]])


def test_sprime_scanner():
    spec = NormSpec.lp(2, 2)
    scanner = SPrimeScanner(norm="l2", delta=0.1).fit(dim=2)
    found = scanner.predict([[1, 0], [1, 0]], [[0, 1], [0.6, 0.8]])
    assert found.tolist() == [True, True]
    flat = SPrimeScanner(norm="linf", delta=0.4, budget=2000).fit(dim=2)
    assert flat.predict([[1, 0]], [[1, 0.5]]).tolist() == [False]
    assert scanner.norm_spec_ == spec
