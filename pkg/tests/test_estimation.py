import math

import numpy
import pytest
from numpy.testing import assert_allclose

from metrosim.errors import DomainError, OptimizationError
from metrosim.estimation import IntervalSearch


def test_search_methods():
    for method in IntervalSearch.methods:
        search = IntervalSearch(method=method)
        result = search.minimize(lambda x: (x - 0.3)**2 + 1, 0, 1)
        assert_allclose(result.x, 0.3, atol=1e-6)
        assert_allclose(result.value, 1, atol=1e-10)
        assert result.evaluations > 0


def test_dichotomous_flat_minimum():
    # the two evaluation points must stay distinguishable near a flat minimum
    for offset in [0, 1]:
        result = IntervalSearch(method="dichotomous").minimize(lambda x: (x - 0.3)**2 + offset, 0, 1)
        assert abs(result.x - 0.3) < 1e-6
        assert result.evaluations < 200


def test_search_options():
    with pytest.raises(DomainError):
        IntervalSearch(method="newton")
    with pytest.raises(DomainError):
        IntervalSearch(precision=0)
    with pytest.raises(DomainError):
        IntervalSearch().minimize(lambda x: x, 1, 1)
    assert str(IntervalSearch(method="fibonacci")) == "Interval Search (fibonacci)"


def test_scan_small_scale():
    # minimum at 1/32 of a unit interval, the shape of a decoherence-limited uncertainty
    for method in ["golden", "fibonacci", "bounded"]:
        result = IntervalSearch(method=method).scan(lambda t: math.exp(32 * t) / t, 1.0)
        assert_allclose(result.x, 1 / 32, atol=1e-7)


def test_scan_edges():
    search = IntervalSearch()
    result = search.scan(lambda t: 1 / t, 2.0)
    assert result.x == 2.0

    with pytest.raises(OptimizationError):
        search.scan(lambda t: t, 1.0)
    with pytest.raises(OptimizationError):
        search.scan(lambda t: float("nan"), 1.0)
    with pytest.raises(OptimizationError):
        search.scan(lambda t: float("inf"), 1.0)
    with pytest.raises(DomainError):
        search.scan(lambda t: t, 0.0)


def test_scan_tolerates_overflow():
    # exp overflows to inf on the right part of the grid
    result = IntervalSearch().scan(lambda t: numpy.exp(2000 * t) / t, 1.0)
    assert_allclose(result.x, 1 / 2000, rtol=1e-6)
