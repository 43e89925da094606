import math

import numpy
import pytest
from numpy.testing import assert_allclose

from metrosim.dephasing import (
    CorrelationKernel,
    FullyCorrelated,
    Markovian,
    ModeBath,
    NonMarkovian,
    PartiallyCorrelated,
    Tabulated,
    Uncorrelated,
    collective_factor,
    collective_weight,
    decoherence_factor,
    decoherence_rate,
    lamb_shift_coeff,
    mode_correlation,
    occupation,
    optimal_aux_coupling,
    partial_corr_factor,
    partial_corr_sums,
    spectral_function,
)
from metrosim.errors import DomainError, GridRangeError


def test_decoherence_factor():
    assert decoherence_factor(Markovian(1), 0) == 0
    assert decoherence_factor(Markovian(1), 0.5) == 0.5
    assert decoherence_factor(NonMarkovian(1), 2.0) == 4.0
    assert_allclose(decoherence_factor(NonMarkovian(2), [0, 1, 3]), [0, 2, 18])

    for law in [Markovian(3), NonMarkovian(0.5)]:
        with pytest.raises(DomainError):
            decoherence_factor(law, -1e-3)


def test_decoherence_rate():
    assert decoherence_rate(Markovian(2), 10.0) == 2
    assert decoherence_rate(NonMarkovian(2), 0.25) == 1.0
    assert_allclose(decoherence_rate(Markovian(0.3), [0, 1, 2]), [0.3] * 3)


def test_negative_law_parameters():
    with pytest.raises(DomainError):
        Markovian(-1)
    with pytest.raises(DomainError):
        NonMarkovian(-0.1)
    with pytest.raises(DomainError):
        PartiallyCorrelated(-1)


def test_tabulated_law():
    law = Tabulated([0, 1, 3, 6], 0.5)
    assert law.horizon == 1.5
    assert decoherence_factor(law, 0) == 0
    assert_allclose(decoherence_factor(law, [0.25, 0.5, 1.25, 1.5]), [0.5, 1.0, 4.5, 6.0])
    # forward differences, the last interval is reused at the end of the grid
    assert_allclose(decoherence_rate(law, [0, 0.5, 0.75, 1.5]), [2, 4, 4, 6])

    # every sample time opens its own interval, whatever the rounding of t / dt
    times = numpy.linspace(0, 1.5, 151)
    quadratic = Tabulated.from_samples(times, times**2)
    k = numpy.arange(150)
    assert_allclose(decoherence_rate(quadratic, times[:-1]), (2 * k + 1) * 0.01, rtol=1e-9)
    assert_allclose(decoherence_rate(quadratic, 0.29), 0.59, rtol=1e-9)

    with pytest.raises(GridRangeError):
        decoherence_factor(law, 1.6)
    with pytest.raises(GridRangeError):
        decoherence_rate(law, 2.0)
    with pytest.raises(DomainError):
        decoherence_factor(law, -0.1)


def test_tabulated_validation():
    with pytest.raises(DomainError):
        Tabulated([0.1, 0.2], 1.0)
    with pytest.raises(DomainError):
        Tabulated([0, 2, 1], 1.0)
    with pytest.raises(DomainError):
        Tabulated([0], 1.0)
    with pytest.raises(DomainError):
        Tabulated([0, 1], 0.0)
    with pytest.raises(DomainError):
        Tabulated.from_samples([0, 0.1, 0.3], [0, 1, 2])

    law = Tabulated.from_samples(numpy.linspace(0, 1, 11), numpy.linspace(0, 1, 11)**2)
    assert_allclose(law.dt, 0.1)
    assert_allclose(decoherence_factor(law, 0.35), 0.125)


def test_tabulated_from_mode_bath():
    bath = ModeBath([1.0, 2.0], [0.3, 0.1], temperature=0.5)
    times = numpy.linspace(0, 1.5, 151)
    law = Tabulated.from_mode_bath(bath, times)

    w, g = bath.frequencies, bath.couplings
    expected = [numpy.sum(2 * g**2 * (2 * occupation(w, 0.5) + 1) * (1 - numpy.cos(w * t)) / w**2) for t in times]
    assert_allclose(law.values, expected, rtol=1e-12, atol=1e-15)

    # the numerical derivative follows the single-qubit correlation function
    midpoints = times[:-1] + 0.005
    assert_allclose(decoherence_rate(law, times[:-1]), mode_correlation(bath, 0, 0, midpoints), rtol=1e-4)

    # a single mode re-phases after half a period
    with pytest.raises(DomainError):
        Tabulated.from_mode_bath(ModeBath([1.0], [1.0]), numpy.linspace(0, 5, 51))


def test_collective_factor():
    assert_allclose(collective_factor(Markovian(1), Uncorrelated(), 4, 0.125), 0.5)
    assert_allclose(collective_factor(Markovian(1), FullyCorrelated(), 4, 0.125), 2.0)
    assert_allclose(collective_factor(Markovian(1), PartiallyCorrelated(0), 3, 1), 9.0)

    for n in range(1, 9):
        assert collective_weight(Uncorrelated(), n) == n
        assert collective_weight(FullyCorrelated(), n) == n**2

    with pytest.raises(DomainError):
        collective_factor(Markovian(1), FullyCorrelated(), 0, 1.0)


def test_collective_factor_is_linear_in_gamma():
    times = numpy.linspace(0, 2, 9)
    for topology in [Uncorrelated(), FullyCorrelated(), PartiallyCorrelated(0.7)]:
        for n in [1, 2, 5]:
            base = collective_factor(Markovian(0.4), topology, n, times)
            scaled = collective_factor(Markovian(0.4 * 3.5), topology, n, times)
            assert_allclose(scaled, 3.5 * base, rtol=1e-14)


def test_partial_corr_factor():
    assert_allclose(partial_corr_factor(4, 0, 4), 0, atol=1e-12)
    assert_allclose(partial_corr_factor(2, 0, 0), 4)

    e = math.exp
    a = e(-1) + e(-2) + e(-3)
    b = 3 + 4 * e(-1) + 2 * e(-2)
    sums = partial_corr_sums(3, 1.0)
    assert_allclose(sums.a, a, rtol=1e-14)
    assert_allclose(sums.b, b, rtol=1e-14)
    assert_allclose(partial_corr_factor(3, 1.0, 1.0), (1 - a)**2 + b - a**2, rtol=1e-14)


def test_partial_corr_total_summation():
    # the auxiliary position itself joins both sums
    a, b = partial_corr_sums(2, 1.0, "total")
    e = math.exp
    assert_allclose(a, e(-2) + e(-1) + 1)
    assert_allclose(b, 3 + 4 * e(-1) + 2 * e(-2))

    with pytest.raises(DomainError):
        partial_corr_sums(2, 1.0, "all")
    with pytest.raises(DomainError):
        partial_corr_sums(0, 1.0)


def test_partial_corr_factor_lower_bound():
    rng = numpy.random.default_rng(7)
    for _ in range(200):
        N = int(rng.integers(1, 17))
        x = float(rng.uniform(0, 10))
        K = float(rng.uniform(0, 2 * N))
        a, b = partial_corr_sums(N, x)
        assert partial_corr_factor(N, x, K) >= b - a**2 - 1e-12
        assert_allclose(partial_corr_factor(N, 0, N), 0, atol=1e-9)


def test_optimal_aux_coupling():
    coupling = optimal_aux_coupling(5, 0)
    assert_allclose(coupling.K, 5)
    assert_allclose(coupling.A_min, 0, atol=1e-12)

    coupling = optimal_aux_coupling(2, float("inf"))
    assert_allclose(coupling.K, 0)
    assert_allclose(coupling.A_min, 2)

    coupling = optimal_aux_coupling(4, 0.5)
    grid = numpy.arange(0, 8 + 1e-9, 1e-3)
    values = [partial_corr_factor(4, 0.5, K) for K in grid]
    assert abs(grid[int(numpy.argmin(values))] - coupling.K) <= 1e-3
    assert_allclose(coupling.A_min, min(values), atol=1e-6)
    assert_allclose(coupling.A_min, partial_corr_factor(4, 0.5, coupling.K), rtol=1e-14)


def test_occupation():
    assert_allclose(occupation([1.0, 2.0], 0), [0, 0])
    assert_allclose(occupation(1.0, 2.0), 1 / (math.exp(0.5) - 1))
    with pytest.raises(DomainError):
        occupation(1.0, -1)


def test_mode_bath_validation():
    with pytest.raises(DomainError):
        ModeBath([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        ModeBath([1.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        ModeBath([1.0], [1.0], temperature=-1)

    bath = ModeBath.from_dict({"modes": [[1.0, 0.5], [3.0, 0.2]], "temperature": 0.1, "multipliers": [1, 1, 2]})
    assert_allclose(bath.frequencies, [1.0, 3.0])
    assert bath.multiplier(2) == 2
    assert bath.multiplier(7) == 1
    assert ModeBath.from_dict(bath.to_dict()).to_dict() == bath.to_dict()


def test_mode_correlation():
    single = ModeBath([1.0], [1.0])
    assert_allclose(mode_correlation(single, 0, 1, math.pi / 2), 2)
    assert mode_correlation(single, 0, 0, 0) == 0
    assert_allclose(lamb_shift_coeff(single, 0, 0, math.pi), -2)
    assert lamb_shift_coeff(single, 0, 0, 0) == 0
    assert_allclose(spectral_function(single, 0, 0, math.pi / 2), 1 - 1j)
    assert spectral_function(single, 0, 0, 0) == 0

    empty = ModeBath([], [])
    assert mode_correlation(empty, 0, 1, 1.0) == 0
    assert lamb_shift_coeff(empty, 0, 1, 1.0) == 0

    bath = ModeBath([0.7, 1.9], [0.4, 0.25], temperature=1.3, multipliers=[1.0, 2.0])
    for t in [0.1, 0.8, 2.5]:
        expected = 0
        for w, g in zip([0.7, 1.9], [0.4, 0.25]):
            nbar = 1 / (math.exp(w / 1.3) - 1)
            expected += 2 * g * (2 * g) * (2 * nbar + 1) * math.sin(w * t) / w
        assert_allclose(mode_correlation(bath, 0, 1, t), expected, rtol=1e-13)

    # the pair functions scale the unit-multiplier sums of the bath
    times = numpy.array([0.1, 0.8, 2.5])
    assert_allclose(mode_correlation(bath, 1, 1, times), 4 * bath.correlation_sum(times), rtol=1e-14)
    assert_allclose(lamb_shift_coeff(bath, 0, 1, times), 2 * bath.lamb_shift_sum(times), rtol=1e-14)
    t = math.pi / 0.7
    assert_allclose(bath.lamb_shift_sum(t), -2 * 0.4**2 / 0.7 + 0.25**2 * (math.cos(1.9 * t) - 1) / 1.9)

    with pytest.raises(DomainError):
        mode_correlation(bath, 0, 1, -1.0)


def test_spectral_function_decomposition():
    rng = numpy.random.default_rng(11)
    for _ in range(20):
        modes = int(rng.integers(1, 6))
        bath = ModeBath(rng.uniform(0.1, 5, modes), rng.uniform(-1, 1, modes), float(rng.uniform(0, 3)),
                        rng.uniform(0.5, 2, 3))
        t = rng.uniform(0, 10, 7)
        for i, j in [(0, 0), (0, 1), (1, 2), (2, 2)]:
            D = spectral_function(bath, i, j, t)
            assert_allclose(D.real, mode_correlation(bath, i, j, t) / 2, atol=1e-12)
            assert_allclose(D.imag, lamb_shift_coeff(bath, i, j, t), atol=1e-12)


def test_kernel_topologies():
    law = NonMarkovian(0.8)
    t = 0.6
    gamma = decoherence_rate(law, t)
    for N in [1, 2, 4]:
        uncorrelated = CorrelationKernel.from_law(law, Uncorrelated(), N)
        fully = CorrelationKernel.from_law(law, FullyCorrelated(), N)
        assert_allclose(uncorrelated.matrix(t), gamma * numpy.eye(N))
        assert_allclose(fully.matrix(t), gamma * numpy.ones((N, N)))

        for K in [0.5, N]:
            zero = CorrelationKernel.from_law(law, PartiallyCorrelated(0), N, K)
            assert_allclose(zero.matrix(t), CorrelationKernel.from_law(law, FullyCorrelated(), N, K).matrix(t))
            far = CorrelationKernel.from_law(law, PartiallyCorrelated(50), N, K)
            assert_allclose(far.matrix(t), CorrelationKernel.from_law(law, Uncorrelated(), N, K).matrix(t),
                            atol=1e-12)


def test_kernel_with_aux():
    law = Markovian(2.0)
    N, K, x = 3, 1.7, 0.4
    kernel = CorrelationKernel.from_law(law, PartiallyCorrelated(x), N, K)
    assert kernel.size == N + 1
    for i in range(N):
        for j in range(N):
            assert_allclose(kernel(i, j, 0.3), math.exp(-x * abs(i - j)) * 2.0)
        # working qubit i + 1 sits N + 1 - (i + 1) sites away from the auxiliary qubit
        assert_allclose(kernel(i, N, 0.3), K * math.exp(-x * (N - i)) * 2.0)
    assert_allclose(kernel(N, N, 0.3), K**2 * 2.0)

    with pytest.raises(DomainError):
        kernel(0, N + 1, 0.3)


def test_kernel_symmetry():
    rng = numpy.random.default_rng(3)
    bath = ModeBath(rng.uniform(0.5, 3, 4), rng.uniform(0, 1, 4), 0.7, [1.0, 1.5, 0.5])
    kernels = [
        CorrelationKernel.from_law(Markovian(1), PartiallyCorrelated(0.9), 3, 2.5),
        CorrelationKernel.from_mode_bath(bath, 3),
    ]
    for kernel in kernels:
        for t in rng.uniform(0, 4, 5):
            for i in range(kernel.size):
                for j in range(kernel.size):
                    assert kernel(i, j, t) == kernel(j, i, t)


def test_kernel_from_mode_bath():
    bath = ModeBath([1.0, 2.5], [0.3, 0.6], 0.4, [1.0, 2.0, 3.0])
    kernel = CorrelationKernel.from_mode_bath(bath, 3)
    for t in [0.0, 0.5, 1.7]:
        for i in range(3):
            for j in range(3):
                assert_allclose(kernel(i, j, t), mode_correlation(bath, i, j, t), rtol=1e-13, atol=1e-15)
