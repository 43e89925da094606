import math

import numpy
import pytest
from numpy.testing import assert_allclose

from metrosim.dephasing import FullyCorrelated, Markovian, NonMarkovian, PartiallyCorrelated, Tabulated, Uncorrelated
from metrosim.errors import (
    DegenerateDetuningError,
    DegenerateDetuningWarning,
    DomainError,
    OptimizationError,
    PairingError,
    SingularProbabilityError,
)
from metrosim.metrology import (
    ExperimentBudget,
    ProbeConfig,
    aux_precision_ratio,
    aux_probability,
    aux_scheme_uncertainty,
    envelope_uncertainty,
    field_sensing_fisher_information,
    field_sensing_probability,
    field_sensing_time,
    field_sensing_uncertainty,
    fisher_information,
    ghz_fisher_information,
    ghz_probability,
    ghz_probability_derivative,
    numeric_optimal_time,
    optimal_time,
    phase_matched_time,
    phase_uncertainty,
    precision_ratio,
    scheme_factor,
    tabulated_ratio,
    uncertainty,
    unentangled_aux_uncertainty,
)

omega0 = 2 * math.pi * 5


def test_probe_config():
    probe = ProbeConfig(3, omega0)
    assert probe.n == 3 and not probe.has_aux and probe.K is None

    probe = ProbeConfig(3, omega0, aux=True, omega_a=2.0)
    assert probe.n == 4
    assert probe.K == 3
    assert_allclose(probe.signal_frequency, 3 * omega0 - 2.0)

    with pytest.raises(DomainError):
        ProbeConfig(0, omega0)
    with pytest.raises(DomainError):
        ProbeConfig(2, omega0, aux=True, K=0)
    with pytest.raises(DomainError):
        ProbeConfig(2, omega0, K=2)


def test_experiment_budget():
    budget = ExperimentBudget(1.0, 0.25)
    assert budget.repetitions == 4
    for T, t in [(1.0, 0.0), (1.0, 1.5), (1.0, -1)]:
        with pytest.raises(DomainError):
            ExperimentBudget(T, t)


def test_ghz_probability():
    assert ghz_probability(1, 0.0, 0.0, 0.0) == 1
    assert_allclose(ghz_probability(2, math.pi / 2, 1.0, 0.0), 0, atol=1e-15)
    expected = 0.5 * (1 + math.cos(4 * omega0 / 32) * math.exp(-0.5))
    assert_allclose(ghz_probability(4, omega0, 1 / 32, 0.5), expected)
    assert_allclose(expected, 0.2856, atol=1e-4)

    rng = numpy.random.default_rng(5)
    P = ghz_probability(int(rng.integers(1, 9)), rng.normal(), rng.uniform(0, 10, 100), rng.uniform(0, 3, 100))
    assert numpy.all((P >= 0) & (P <= 1))

    with pytest.raises(DomainError):
        ghz_probability(2, 1.0, -1.0, 0.0)
    with pytest.raises(DomainError):
        ghz_probability(2, 1.0, 1.0, -0.1)


def test_aux_probability():
    assert aux_probability(3, omega0, 1.0, 0.0) == 1
    assert_allclose(aux_probability(4, omega0, 0.0, 1 / 40), 0, atol=1e-15)

    with pytest.warns(DegenerateDetuningWarning):
        assert aux_probability(3, omega0, 3 * omega0, 0.7) == 1

    rng = numpy.random.default_rng(6)
    P = aux_probability(4, omega0, 1.3, rng.uniform(0, 3, 100))
    assert numpy.all((P >= 0) & (P <= 1))


def test_fisher_information():
    assert_allclose(ghz_fisher_information(2, math.pi / 4, 1.0, 0.0), 4)

    rng = numpy.random.default_rng(8)
    for n in range(1, 9):
        t = rng.uniform(0.01, 2, 50)
        phi = 0.37
        assert_allclose(ghz_fisher_information(n, phi, t, 0.0), n**2 * t**2, rtol=1e-7)

    with pytest.raises(SingularProbabilityError):
        ghz_fisher_information(2, math.pi / 2, 1.0, 0.0)
    with pytest.raises(SingularProbabilityError):
        fisher_information(1.0, 0.3)
    with pytest.raises(SingularProbabilityError):
        fisher_information([0.5, 0.0], [0.1, 0.1])
    assert_allclose(fisher_information(0.5, 0.5), 1)


def _finite_difference_fisher(n, phi, t, gamma, delta=1e-5):
    P = ghz_probability(n, phi, t, gamma)
    dP = (ghz_probability(n, phi + delta, t, gamma) - ghz_probability(n, phi - delta, t, gamma)) / (2 * delta)
    return fisher_information(P, dP)


def test_fisher_closed_form_against_finite_differences():
    closed = ghz_fisher_information(4, omega0, 1 / 32, 0.5)
    assert_allclose(closed, _finite_difference_fisher(4, omega0, 1 / 32, 0.5), rtol=1e-6)
    assert_allclose(closed, fisher_information(ghz_probability(4, omega0, 1 / 32, 0.5),
                                               ghz_probability_derivative(4, omega0, 1 / 32, 0.5)), rtol=1e-12)

    rng = numpy.random.default_rng(9)
    checked = 0
    while checked < 100:
        n = int(rng.integers(1, 9))
        gamma = float(rng.uniform(0, 2))
        t = float(rng.uniform(0.05, 1))
        phi = float(rng.uniform(-3, 3))
        # stay away from the singular and the flat points of P
        if abs(math.sin(n * phi * t)) < 0.1 or abs(math.cos(n * phi * t)) < 0.1:
            continue
        assert_allclose(ghz_fisher_information(n, phi, t, gamma), _finite_difference_fisher(n, phi, t, gamma),
                        rtol=1e-6)
        checked += 1


def test_uncertainty():
    assert uncertainty(1.0, 1, 1.0, 1.0) == 1
    assert_allclose(uncertainty(16 / 40**2, 4, 1.0, 1 / 40, "per_shot"), 2.5)
    assert_allclose(aux_scheme_uncertainty(4, 1.0, 1 / 40), 2.5)

    # per-qubit repetitions count n times more shots
    assert_allclose(uncertainty(2.0, 4, 1.0, 0.5, "per_shot"), 4 * uncertainty(2.0, 4, 1.0, 0.5, "per_qubit"))

    with pytest.raises(DomainError):
        uncertainty(0.0, 1, 1.0, 1.0)
    with pytest.raises(DomainError):
        uncertainty(1.0, 1, 1.0, 2.0)
    with pytest.raises(DomainError):
        uncertainty(1.0, 1, 1.0, 1.0, "per_experiment")

    # interrogation-time sweeps
    t = numpy.linspace(0.1, 1, 5)
    assert_allclose(uncertainty(t**2, 1, 1.0, t), 1 / t)
    assert_allclose(uncertainty(t**2, 2, 1.0, t, "per_shot"), 1 / t)
    with pytest.raises(DomainError):
        uncertainty(1.0, 1, 1.0, numpy.array([0.5, 1.5]))
    with pytest.raises(DomainError):
        uncertainty(1.0, 1, 1.0, numpy.array([0.0, 0.5]))


def test_envelope_uncertainty():
    law = Markovian(1)
    assert_allclose(envelope_uncertainty(law, FullyCorrelated(), 4, 1 / 32, 1.0), 2 * math.e)
    assert_allclose(envelope_uncertainty(law, Uncorrelated(), 4, 0.5, 1.0, "unentangled"), math.e / 2)
    # a fully correlated bath is cancelled by the auxiliary qubit
    assert_allclose(envelope_uncertainty(law, FullyCorrelated(), 4, 0.25, 1.0, "entangled_with_aux"),
                    aux_scheme_uncertainty(3, 1.0, 0.25))

    # the envelope bounds the phase-resolved uncertainty from below
    t = numpy.linspace(0.01, 1, 97)
    for scheme in ["entangled", "unentangled"]:
        envelope = envelope_uncertainty(law, FullyCorrelated(), 4, t, 1.0, scheme)
        resolved = phase_uncertainty(law, FullyCorrelated(), 4, 1.234, t, 1.0, scheme)
        assert numpy.all(resolved >= envelope * (1 - 1e-12))


def test_phase_uncertainty_at_working_point():
    law = NonMarkovian(1)
    n = 4
    t = phase_matched_time(n * omega0, 1 / 8)
    assert_allclose(phase_uncertainty(law, FullyCorrelated(), n, omega0, t, 1.0),
                    envelope_uncertainty(law, FullyCorrelated(), n, t, 1.0), rtol=1e-10)

    with pytest.raises(DegenerateDetuningError):
        phase_uncertainty(law, FullyCorrelated(), 4, omega0, 0.1, 1.0, "entangled_with_aux", 3 * omega0)


def test_scheme_factor():
    law = Markovian(1)
    assert_allclose(scheme_factor(law, FullyCorrelated(), 4, 0.5), 8)
    assert_allclose(scheme_factor(law, FullyCorrelated(), 4, 0.5, "unentangled"), 0.5)
    assert_allclose(scheme_factor(law, FullyCorrelated(), 4, 0.5, "entangled_with_aux"), 0, atol=1e-15)
    # uncorrelated bath: N working qubits plus an auxiliary coupled K times more strongly
    assert_allclose(scheme_factor(law, Uncorrelated(), 3, 1.0, "entangled_with_aux", K=1.5), 2 + 1.5**2)

    with pytest.raises(DomainError):
        scheme_factor(law, FullyCorrelated(), 4, 0.5, "bayesian")


def test_optimal_time_closed_forms():
    n = 4
    markovian, non_markovian = Markovian(1), NonMarkovian(1)
    cases = [
        (markovian, FullyCorrelated(), 1 / 32),
        (markovian, Uncorrelated(), 1 / 8),
        (non_markovian, FullyCorrelated(), 1 / 8),
        (non_markovian, Uncorrelated(), 1 / 4),
    ]
    for law, topology, expected in cases:
        optimum = optimal_time(law, topology, n, omega0, T=1.0)
        assert_allclose(optimum.t_e, expected, rtol=1e-14)
        assert optimum.method == "closed_form"
        assert abs(numeric_optimal_time(law, topology, n, 1.0) - expected) <= 1e-6

        # stationarity: 2 c t gamma(t) = 1
        c = n**2 if isinstance(topology, FullyCorrelated) else n
        rate = law.alpha if isinstance(law, Markovian) else 2 * law.beta * optimum.t_e
        assert abs(2 * c * optimum.t_e * rate - 1) < 1e-9

    assert_allclose(optimal_time(markovian, Uncorrelated(), n, scheme="unentangled").t_e, 0.5)
    assert_allclose(optimal_time(non_markovian, FullyCorrelated(), n, scheme="unentangled").t_e, 0.5)


def test_optimal_time_phase_condition():
    optimum = optimal_time(Markovian(1), FullyCorrelated(), 4, omega0, T=1.0)
    k = 4 * omega0 * optimum.t_phase / (math.pi / 2)
    assert_allclose(k, round(k), atol=1e-9)
    assert round(k) % 2 == 1
    assert abs(optimum.t_phase - optimum.t_e) <= math.pi / (2 * 4 * omega0)

    assert optimal_time(Markovian(1), FullyCorrelated(), 4).t_phase is None
    with pytest.raises(DomainError):
        optimal_time(Markovian(1), FullyCorrelated(), 4, 0.0)


def test_optimal_time_with_aux():
    optimum = optimal_time(Markovian(1), FullyCorrelated(), 4, omega0, "entangled_with_aux", T=1.0)
    assert_allclose(optimum.t_e, math.pi / (2 * 3 * omega0))
    assert_allclose(aux_probability(3, omega0, 0.0, optimum.t_e), 0.5, atol=1e-12)
    assert optimum.method == "phase_condition"

    with pytest.raises(DegenerateDetuningError):
        optimal_time(Markovian(1), FullyCorrelated(), 4, omega0, "entangled_with_aux", omega_a=3 * omega0)
    with pytest.raises(OptimizationError):
        optimal_time(Markovian(1), FullyCorrelated(), 4, 0.1, "entangled_with_aux", T=1.0)

    # independent baths are not cancelled, N + K^2 = 12 for three working qubits
    optimum = optimal_time(Markovian(1), Uncorrelated(), 4, omega0, "entangled_with_aux")
    assert optimum.method == "closed_form"
    assert_allclose(optimum.t_e, 1 / 24)
    assert_allclose(numeric_optimal_time(Markovian(1), Uncorrelated(), 4, 1.0, "entangled_with_aux"), 1 / 24,
                    rtol=1e-6)
    optimum = optimal_time(NonMarkovian(1), Uncorrelated(), 4, omega0, "entangled_with_aux")
    assert_allclose(optimum.t_e, 1 / (2 * math.sqrt(12)))


def test_optimal_time_numeric():
    times = numpy.linspace(0, 1, 2001)
    law = Tabulated.from_samples(times, 0.8 * times**2)
    optimum = optimal_time(law, FullyCorrelated(), 4, omega0)
    assert optimum.method == "numeric"
    # same law as NonMarkovian(0.8), up to the interpolation error
    assert_allclose(optimum.t_e, optimal_time(NonMarkovian(0.8), FullyCorrelated(), 4).t_e, rtol=1e-4)

    with pytest.raises(OptimizationError):
        optimal_time(Markovian(0), FullyCorrelated(), 4)
    clipped = optimal_time(Markovian(0), FullyCorrelated(), 4, T=2.0)
    assert clipped.t_e == 2.0 and clipped.method == "closed_form_clipped"


def test_precision_ratio_table():
    markovian, non_markovian = Markovian(1), NonMarkovian(1)
    for n in range(2, 129):
        assert_allclose(precision_ratio(markovian, FullyCorrelated(), n).r * math.sqrt(n), 1, atol=1e-12)
    for n in range(2, 65):
        assert_allclose(precision_ratio(markovian, Uncorrelated(), n).r, 1, atol=1e-9)
        assert_allclose(precision_ratio(non_markovian, FullyCorrelated(), n).r, 1, atol=1e-9)
        assert_allclose(precision_ratio(non_markovian, Uncorrelated(), n).r, n**0.25, rtol=1e-9)

    ns = numpy.arange(2, 65)
    ratios = [precision_ratio(non_markovian, Uncorrelated(), int(n)).r for n in ns]
    slope = numpy.polyfit(numpy.log(ns), numpy.log(ratios), 1)[0]
    assert abs(slope - 0.25) <= 0.005

    result = precision_ratio(markovian, FullyCorrelated(), 4)
    assert_allclose(result.t_e, 1 / 32)
    assert_allclose(result.r, 0.5)

    with pytest.raises(DomainError):
        precision_ratio(markovian, FullyCorrelated(), 1)


def test_precision_ratio_numeric_agreement():
    # independent check through numerical minimization of both uncertainties
    for law in [Markovian(1), NonMarkovian(1)]:
        for topology in [FullyCorrelated(), Uncorrelated()]:
            for n in [2, 5, 16]:
                t_e = numeric_optimal_time(law, topology, n, 2.0, "entangled")
                t_u = numeric_optimal_time(law, topology, n, 2.0, "unentangled")
                r = math.sqrt(envelope_uncertainty(law, topology, n, t_u, 2.0, "unentangled")
                              / envelope_uncertainty(law, topology, n, t_e, 2.0, "entangled"))
                assert_allclose(r, precision_ratio(law, topology, n).r, rtol=1e-8)


def test_tabulated_ratio():
    assert_allclose(tabulated_ratio(Markovian(1), FullyCorrelated(), 9), 1 / 3)
    assert tabulated_ratio(Markovian(1), Uncorrelated(), 9) == 1
    assert tabulated_ratio(NonMarkovian(1), FullyCorrelated(), 9) == 1
    assert_allclose(tabulated_ratio(NonMarkovian(1), Uncorrelated(), 9), 3)
    assert_allclose(tabulated_ratio(Markovian(1), PartiallyCorrelated(0), 4), 0.5)
    with pytest.raises(DomainError):
        tabulated_ratio(Markovian(1), PartiallyCorrelated(1.0), 4)


def test_aux_scheme():
    assert aux_scheme_uncertainty(1, 1.0, 1.0) == 1
    assert unentangled_aux_uncertainty(4, 1.0, 0.5) == 1
    for N in range(1, 20):
        assert_allclose(aux_scheme_uncertainty(N, 2.0, 0.3) * N**2 * 2.0 * 0.3, 1)

    with pytest.raises(PairingError):
        unentangled_aux_uncertainty(5, 1.0, 0.5)
    with pytest.raises(DomainError):
        aux_scheme_uncertainty(2, 1.0, 2.0)


def test_aux_scheme_scaling():
    ns = numpy.arange(3, 66)
    delta = numpy.sqrt([aux_scheme_uncertainty(int(n) - 1, 1.0, 0.1) for n in ns])
    slope = numpy.polyfit(numpy.log(ns - 1), numpy.log(delta), 1)[0]
    assert_allclose(slope, -1, atol=1e-12)

    even = numpy.arange(2, 66, 2)
    ratios = numpy.array([aux_precision_ratio(int(n)) for n in even])
    assert_allclose(ratios * numpy.sqrt(even) / (even - 1), math.sqrt(2), rtol=1e-12)
    # the local slope approaches 1/2 from above, as n / (n - 1) - 1/2
    local = math.log(ratios[-1] / ratios[-2]) / math.log(even[-1] / even[-2])
    assert 0.5 < local <= 0.52


def test_field_sensing():
    assert field_sensing_uncertainty(2, 1.0, 1.0, 1.0, 1.0) == 1
    assert_allclose(field_sensing_uncertainty(10, 1.0, 1.0, 1.0, 1.0), 1 / 81)
    with pytest.raises(DegenerateDetuningError):
        field_sensing_uncertainty(1, 1.0, 1.0, 1.0, 1.0)

    Ns = numpy.arange(10, 200)
    delta = numpy.sqrt([field_sensing_uncertainty(int(N), 1.0, 1.0, 1.0, 1.0) for N in Ns])
    slope = numpy.polyfit(numpy.log(Ns), numpy.log(delta), 1)[0]
    assert abs(slope + 1) < 0.05

    t = field_sensing_time(3, 2.0, 1.0, 0.5)
    assert_allclose(t, math.pi / (2 * 5 * 0.5))
    assert_allclose(field_sensing_probability(3, 2.0, 1.0, 0.5, t), 0.5, atol=1e-12)
    assert_allclose(field_sensing_fisher_information(3, 2.0, 1.0, 0.4), 4)
    with pytest.raises(DomainError):
        field_sensing_time(3, 2.0, 1.0, 0.5, k=2)
