"""Closed-form metrology analytics: Ramsey probabilities, Fisher information,
measurement uncertainty, optimal interrogation times and precision ratios for
GHZ probes, unentangled probes and probes protected by an auxiliary qubit.

Parameters to estimate are angular frequencies (rad/s), times are in seconds
and decoherence factors are dimensionless."""

import math
import warnings
from typing import NamedTuple, Optional

import numexpr
import numpy

from .dephasing import (
    BathTopology,
    DephasingLaw,
    FullyCorrelated,
    Markovian,
    NonMarkovian,
    PartiallyCorrelated,
    Uncorrelated,
    collective_weight,
    decoherence_factor,
)
from .errors import (
    DegenerateDetuningError,
    DegenerateDetuningWarning,
    DomainError,
    OptimizationError,
    PairingError,
    SingularProbabilityError,
    check_option,
)
from .estimation import IntervalSearch

schemes = ["entangled", "unentangled", "entangled_with_aux"]
resource_modes = ["per_qubit", "per_shot"]


class ProbeConfig:
    """A register of :math:`N` working qubits at frequency :math:`\\Omega_0`, optionally
    extended with an auxiliary qubit.

    :param N: number of working qubits
    :param omega0: working-qubit angular frequency, in rad/s
    :param aux: whether the probe carries an auxiliary qubit
    :param omega_a: auxiliary angular frequency, in rad/s
    :param K: ratio :math:`g^a_k / g_k` between the auxiliary and working couplings;
              defaults to :math:`N`, the value that cancels a fully correlated bath
    """

    def __init__(
        self,
        N: int,
        omega0: float,
        aux: bool = False,
        omega_a: float = 0.0,
        K: Optional[float] = None,
    ):
        if N < 1:
            raise DomainError("N must be at least 1, {0} was passed".format(N))
        if K is not None and not aux:
            raise DomainError("a coupling ratio only makes sense for probes with an auxiliary qubit")
        if aux:
            K = float(N) if K is None else float(K)
            if K <= 0:
                raise DomainError("K must be positive, {0} was passed".format(K))

        self._N = int(N)
        self._omega0 = float(omega0)
        self._aux = bool(aux)
        self._omega_a = float(omega_a) if aux else 0.0
        self._K = K

    def __str__(self):
        if self._aux:
            return "Probe (N={0}, Omega0={1}, omega_a={2}, K={3})".format(
                self._N, self._omega0, self._omega_a, self._K)
        return "Probe (N={0}, Omega0={1})".format(self._N, self._omega0)

    @property
    def N(self) -> int:
        """Number of working qubits."""
        return self._N

    @property
    def n(self) -> int:
        """Total resource count, the auxiliary qubit included."""
        return self._N + 1 if self._aux else self._N

    @property
    def has_aux(self) -> bool:
        return self._aux

    @property
    def omega0(self) -> float:
        return self._omega0

    @property
    def omega_a(self) -> float:
        return self._omega_a

    @property
    def K(self) -> Optional[float]:
        return self._K

    @property
    def signal_frequency(self) -> float:
        """Frequency of the relative phase between the two GHZ branches, :math:`N\\Omega_0 - \\omega_a`."""
        return self._N * self._omega0 - self._omega_a


class ExperimentBudget:
    """Total duration :math:`T` of an experiment split into shots of length :math:`t`."""

    def __init__(self, T: float, t: float):
        if not 0 < t <= T:
            raise DomainError(
                "interrogation time must satisfy 0 < t <= T, t={0} and T={1} were passed".format(t, T)
            )
        self._T = float(T)
        self._t = float(t)

    def __str__(self):
        return "Budget (T={0}, t={1})".format(self._T, self._t)

    @property
    def T(self) -> float:
        return self._T

    @property
    def t(self) -> float:
        return self._t

    @property
    def repetitions(self) -> float:
        return self._T / self._t


class PrecisionResult(NamedTuple):
    t_e: float
    variance: float
    r: Optional[float] = None


class OptimalTime(NamedTuple):
    t_e: float
    t_phase: Optional[float]
    method: str


def _check_nonnegative(name, value):
    if numpy.any(numpy.asarray(value) < 0):
        raise DomainError("{0} must be non-negative, {1} was passed".format(name, value))


def ghz_probability(n: int, phi: float, t, gamma_n):
    """Probability of finding an :math:`n`-qubit GHZ probe back in its initial state
    after free evolution and a final :math:`\\pi/2` pulse:

    .. math:: P = \\frac{1}{2}\\left[1 + \\cos(n\\phi t)\\,e^{-\\Gamma_n(t)}\\right]

    :param n: number of entangled qubits
    :param phi: the parameter, an angular frequency
    :param t: interrogation time, scalar or array
    :param gamma_n: collective decoherence factor at ``t``
    """
    _check_nonnegative("t", t)
    _check_nonnegative("gamma_n", gamma_n)
    return 0.5 * (1 + numpy.cos(n * phi * numpy.asarray(t)) * numpy.exp(-numpy.asarray(gamma_n)))


def ghz_probability_derivative(n: int, phi: float, t, gamma_n):
    """:math:`\\partial P / \\partial \\phi` of :py:func:`ghz_probability` at fixed decoherence."""
    t = numpy.asarray(t)
    return -0.5 * n * t * numpy.sin(n * phi * t) * numpy.exp(-numpy.asarray(gamma_n))


def aux_probability(N: int, omega0: float, omega_a: float, t):
    """Return probability of a probe whose auxiliary qubit cancels the collective noise,

    .. math:: P = \\frac{1}{2}\\left[1 + \\cos((N\\Omega_0 - \\omega_a) t)\\right]

    Emits a :py:class:`~metrosim.errors.DegenerateDetuningWarning` at zero detuning,
    where the probability no longer depends on the parameter."""
    _check_nonnegative("t", t)
    detuning = N * omega0 - omega_a
    if detuning == 0:
        warnings.warn(
            "N * Omega0 equals omega_a, the readout carries no information on Omega0",
            DegenerateDetuningWarning,
        )
    return 0.5 * (1 + numpy.cos(detuning * numpy.asarray(t)))


def fisher_information(P, dP_dphi):
    """Classical Fisher information of a two-outcome measurement,
    :math:`F = (\\partial P/\\partial\\phi)^2 / [P(1-P)]`.

    :raises SingularProbabilityError: when any :math:`P` equals 0 or 1
    """
    P = numpy.asarray(P, dtype=float)
    if numpy.any(P <= 0) or numpy.any(P >= 1):
        raise SingularProbabilityError(
            "Fisher information is undefined for P in {0, 1}; move phi * t off multiples of pi"
        )
    F = numpy.asarray(dP_dphi, dtype=float)**2 / (P * (1 - P))
    return F.item() if F.ndim == 0 else F


def ghz_fisher_information(n: int, phi: float, t, gamma_n):
    """Closed-form Fisher information of a GHZ probe,

    .. math:: F = \\frac{n^2 t^2 \\sin^2(n\\phi t)\\,e^{-2\\Gamma_n}}{1 - \\cos^2(n\\phi t)\\,e^{-2\\Gamma_n}}
    """
    _check_nonnegative("t", t)
    _check_nonnegative("gamma_n", gamma_n)
    t = numpy.asarray(t, dtype=float)
    g = numpy.broadcast_to(numpy.asarray(gamma_n, dtype=float), t.shape)
    x = n * phi * t
    denominator = numexpr.evaluate("1 - cos(x)**2 * exp(-2 * g)")
    if numpy.any(denominator <= 0):
        raise SingularProbabilityError(
            "Fisher information is undefined for a noiseless probe at n * phi * t in pi * Z"
        )
    F = numexpr.evaluate("n**2 * t**2 * sin(x)**2 * exp(-2 * g) / denominator")
    return F.item() if F.ndim == 0 else F


def uncertainty(F, n: int, T: float, t: float, resource_mode: str = "per_qubit"):
    """Variance of the estimated parameter after an experiment of duration ``T``,
    from the Cramér-Rao bound.

    ``"per_qubit"`` counts :math:`nT/t` independent repetitions, ``"per_shot"`` counts
    :math:`T/t`; the first suits single-qubit probes, the second GHZ probes, whose Fisher
    information already accounts for the :math:`n` qubits.

    :param F: Fisher information of one repetition
    :param n: number of qubits
    :param T: total duration of the experiment
    :param t: interrogation time of a single repetition, or an array of them
    :param resource_mode: one of `'per_qubit'` and `'per_shot'`
    """
    check_option("resource_mode", resource_mode, resource_modes)
    t = numpy.asarray(t, dtype=float)
    if t.ndim == 0:
        repetitions = ExperimentBudget(T, float(t)).repetitions
    else:
        if numpy.any(t <= 0) or numpy.any(t > T):
            raise DomainError(
                "interrogation times must satisfy 0 < t <= T, T={0} and t in [{1}, {2}] were passed".format(
                    T, t.min(initial=numpy.inf), t.max(initial=-numpy.inf)))
        repetitions = T / t
    F = numpy.asarray(F, dtype=float)
    if numpy.any(F <= 0):
        raise DomainError("Fisher information must be positive, {0} was passed".format(F))
    repetitions = repetitions * (n if resource_mode == "per_qubit" else 1)
    variance = 1 / (repetitions * F)
    return variance.item() if variance.ndim == 0 else variance


def _aux_weight(topology: BathTopology, N: int, K: float) -> float:
    # sum_ij c_ij - 2K sum_i c_ia + K^2, the auxiliary sitting next to working qubit N
    signs = numpy.append(numpy.ones(N), -K)
    return float(signs @ topology.matrix(N + 1) @ signs)


def scheme_factor(law: DephasingLaw, topology: BathTopology, n: int, t, scheme: str = "entangled",
                  K: Optional[float] = None):
    """Decoherence factor governing the readout coherence of each scheme.

    ``"entangled"`` is the GHZ factor :math:`\\Gamma_n`, ``"unentangled"`` the single-qubit
    factor and ``"entangled_with_aux"`` the factor of :math:`N = n - 1` working qubits and one
    auxiliary qubit coupled ``K`` (default :math:`N`) times more strongly."""
    check_option("scheme", scheme, schemes)
    gamma = numpy.asarray(decoherence_factor(law, t))
    if scheme == "entangled":
        weight = collective_weight(topology, n)
    elif scheme == "unentangled":
        weight = 1.0
    else:
        if n < 2:
            raise DomainError("an auxiliary-qubit probe needs n >= 2, {0} was passed".format(n))
        weight = _aux_weight(topology, n - 1, float(n - 1) if K is None else K)
    factor = weight * gamma
    return factor.item() if factor.ndim == 0 else factor


def envelope_uncertainty(law: DephasingLaw, topology: BathTopology, n: int, t, T: float = 1.0,
                         scheme: str = "entangled"):
    """Uncertainty of each scheme at its most favourable working phase:

    .. math:: \\delta\\phi^2|_e = \\frac{e^{2\\Gamma_n(t)}}{n^2 T t}, \\quad
              \\delta\\phi^2|_u = \\frac{e^{2\\Gamma(t)}}{n T t}, \\quad
              \\delta\\Omega_0^2|_a = \\frac{e^{2\\Gamma_a(t)}}{(n-1)^2 T t}

    where :math:`\\Gamma_a` vanishes for a fully correlated bath."""
    factor = numpy.asarray(scheme_factor(law, topology, n, t, scheme))
    t = numpy.asarray(t, dtype=float)
    if numpy.any(t <= 0) or numpy.any(t > T):
        raise DomainError("interrogation time must satisfy 0 < t <= T")
    effective = {"entangled": n**2, "unentangled": n, "entangled_with_aux": (n - 1)**2}[scheme]
    variance = numpy.exp(2 * factor) / (effective * T * t)
    return variance.item() if variance.ndim == 0 else variance


def phase_uncertainty(law: DephasingLaw, topology: BathTopology, n: int, phi: float, t, T: float = 1.0,
                      scheme: str = "entangled", omega_a: float = 0.0):
    """Uncertainty including the oscillating phase dependence, for interrogation-time sweeps.

    For ``"entangled_with_aux"``, ``phi`` is the working-qubit frequency :math:`\\Omega_0` and the
    readout oscillates at :math:`(n-1)\\Omega_0 - \\omega_a`."""
    check_option("scheme", scheme, schemes)
    factor = scheme_factor(law, topology, n, t, scheme)
    if scheme == "entangled":
        F = ghz_fisher_information(n, phi, t, factor)
        return uncertainty(F, n, T, t, "per_shot")
    if scheme == "unentangled":
        F = ghz_fisher_information(1, phi, t, factor)
        return uncertainty(F, n, T, t, "per_qubit")
    N = n - 1
    detuning = N * phi - omega_a
    if detuning == 0:
        raise DegenerateDetuningError("N * Omega0 equals omega_a, no signal to estimate")
    # the GHZ form with frequency detuning / N has derivative N t sin(...) with respect to Omega0
    F = ghz_fisher_information(N, detuning / N, t, factor)
    return uncertainty(F, n, T, t, "per_shot")


def phase_matched_time(frequency: float, target: float) -> float:
    """Interrogation time closest to ``target`` satisfying :math:`\\nu t = k\\pi/2` with odd
    :math:`k`, where :math:`\\nu` is the frequency of the readout oscillation."""
    if frequency == 0:
        raise DegenerateDetuningError("the readout does not oscillate at zero frequency")
    quarter = math.pi / (2 * abs(frequency))
    k = max(1, 2 * round((target / quarter - 1) / 2) + 1)
    return k * quarter


def _closed_form_time(law: DephasingLaw, weight: float) -> float:
    # stationarity of the envelope: 2 * weight * t * gamma(t) = 1
    if isinstance(law, Markovian):
        return 1 / (2 * weight * law.alpha) if law.alpha > 0 else float("inf")
    return 1 / (2 * math.sqrt(weight * law.beta)) if law.beta > 0 else float("inf")


def optimal_time(
    law: DephasingLaw,
    topology: BathTopology,
    n: int,
    phi: Optional[float] = None,
    scheme: str = "entangled",
    T: Optional[float] = None,
    omega_a: float = 0.0,
    method: str = "golden",
) -> OptimalTime:
    """Interrogation time minimizing the uncertainty of a scheme.

    Markovian and non-Markovian laws use the solution of the stationarity condition
    :math:`2ct\\gamma(t) = 1`, with :math:`c` the collective weight of the bath (:math:`n` when
    uncorrelated, :math:`n^2` when fully correlated, 1 for unentangled probes). Tabulated laws are
    minimized numerically on :math:`(0, T]`. With an auxiliary qubit and a cancelled bath only the
    phase condition is left, :math:`(N\\Omega_0 - \\omega_a)t = \\pi/2`.

    The phase condition :math:`\\nu t = k\\pi/2` generally conflicts with stationarity; the time
    satisfying it closest to the optimum is returned alongside as ``t_phase``.

    :param law: single-qubit dephasing law
    :param topology: spatial correlation of the bath
    :param n: number of qubits, the auxiliary one included
    :param phi: parameter value (:math:`\\Omega_0` for the auxiliary scheme), used for ``t_phase``
    :param scheme: one of `'entangled'`, `'unentangled'` and `'entangled_with_aux'`
    :param T: total duration, bounding the interrogation time
    :param omega_a: auxiliary-qubit frequency
    :param method: search method for numerical minimization, see :py:class:`IntervalSearch`
    """
    check_option("scheme", scheme, schemes)
    if n < 1:
        raise DomainError("n must be at least 1, {0} was passed".format(n))
    if phi is not None and phi == 0:
        raise DomainError("phi must be non-zero to locate a phase-matched time")

    readout = None
    if phi is not None:
        readout = {"entangled": n * phi, "unentangled": phi,
                   "entangled_with_aux": (n - 1) * phi - omega_a}[scheme]

    if scheme == "entangled_with_aux":
        if readout is None:
            raise DomainError("the auxiliary scheme needs phi (the working-qubit frequency)")
        if readout == 0:
            raise DegenerateDetuningError("N * Omega0 equals omega_a, no signal to estimate")
        weight = _aux_weight(topology, n - 1, float(n - 1))
        if weight < 1e-12:
            t_e = math.pi / (2 * abs(readout))
            if T is not None and t_e > T:
                raise OptimizationError(
                    "the first phase-matched time {0} exceeds T = {1}".format(t_e, T))
            return OptimalTime(t_e, t_e, "phase_condition")
    elif scheme == "entangled":
        weight = collective_weight(topology, n)
    else:
        weight = 1.0

    if isinstance(law, (Markovian, NonMarkovian)):
        t_e = _closed_form_time(law, weight)
        label = "closed_form"
        if T is not None and t_e > T:
            t_e, label = float(T), "closed_form_clipped"
        if math.isinf(t_e):
            raise OptimizationError("the uncertainty decreases forever without decoherence; pass T")
    else:
        horizon = law.horizon if T is None else T
        if math.isinf(horizon):
            raise OptimizationError("numerical minimization needs a finite total duration T")
        t_e = numeric_optimal_time(law, topology, n, horizon, scheme, method)
        label = "numeric"

    t_phase = phase_matched_time(readout, t_e) if readout is not None else None
    return OptimalTime(t_e, t_phase, label)


def numeric_optimal_time(law: DephasingLaw, topology: BathTopology, n: int, T: float,
                         scheme: str = "entangled", method: str = "golden") -> float:
    """Minimizes :py:func:`envelope_uncertainty` over :math:`(0, T]` with a bracket scan followed
    by an :py:class:`~metrosim.estimation.IntervalSearch` refinement."""
    search = IntervalSearch(method=method)
    return search.scan(lambda t: envelope_uncertainty(law, topology, n, t, T, scheme), T).x


def precision_ratio(law: DephasingLaw, topology: BathTopology, n: int,
                    T: Optional[float] = None) -> PrecisionResult:
    """Ratio :math:`r = \\delta\\phi|_u / \\delta\\phi|_e` between the optimal uncertainties of
    unentangled and entangled probes of :math:`n` qubits.

    :returns: the entangled optimum, its variance and :math:`r`
    """
    if n < 2:
        raise DomainError("a precision ratio needs n >= 2, {0} was passed".format(n))
    t_e = optimal_time(law, topology, n, scheme="entangled", T=T).t_e
    t_u = optimal_time(law, topology, n, scheme="unentangled", T=T).t_e
    horizon = max(t_e, t_u) if T is None else T
    variance_e = envelope_uncertainty(law, topology, n, t_e, horizon, "entangled")
    variance_u = envelope_uncertainty(law, topology, n, t_u, horizon, "unentangled")
    return PrecisionResult(t_e, variance_e, math.sqrt(variance_u / variance_e))


def tabulated_ratio(law: DephasingLaw, topology: BathTopology, n: int) -> float:
    """The precision ratio as printed in the reference table of the four law/bath cells,
    :math:`n^{-1/2}`, 1, 1 and :math:`n^{1/2}`.

    The last cell (non-Markovian, uncorrelated) differs from :py:func:`precision_ratio`,
    which gives :math:`n^{1/4}`; both are reported by the ratio scan."""
    correlated = isinstance(topology, FullyCorrelated) or (
        isinstance(topology, PartiallyCorrelated) and topology.x == 0)
    uncorrelated = isinstance(topology, Uncorrelated) or (
        isinstance(topology, PartiallyCorrelated) and math.isinf(topology.x))
    if not (correlated or uncorrelated) or not isinstance(law, (Markovian, NonMarkovian)):
        raise DomainError("tabulated ratios only exist for Markovian or non-Markovian laws "
                          "in uncorrelated or fully correlated baths")
    if isinstance(law, Markovian):
        return n**-0.5 if correlated else 1.0
    return 1.0 if correlated else n**0.5


def aux_scheme_uncertainty(N: int, T: float, t_e: float) -> float:
    """Uncertainty of :math:`\\Omega_0` with :math:`N` working qubits and a noise-cancelling
    auxiliary qubit, :math:`1/(N^2 T t_e)`."""
    if N < 1:
        raise DomainError("N must be at least 1, {0} was passed".format(N))
    ExperimentBudget(T, t_e)
    return 1 / (N**2 * T * t_e)


def unentangled_aux_uncertainty(n: int, T: float, t_u: float) -> float:
    """Uncertainty of :math:`\\Omega_0` when the :math:`n` qubits are split into :math:`n/2`
    unentangled working/auxiliary pairs, :math:`2/(n T t_u)`."""
    if n < 2 or n % 2:
        raise PairingError("each working qubit needs its own auxiliary, n must be even, {0} was passed".format(n))
    ExperimentBudget(T, t_u)
    return 2 / (n * T * t_u)


def aux_precision_ratio(n: int) -> float:
    """Ratio between the unentangled-pairs and entangled auxiliary schemes at a common
    interrogation time, :math:`\\sqrt{2(n-1)^2/n}`."""
    return math.sqrt(unentangled_aux_uncertainty(n, 1.0, 1.0) / aux_scheme_uncertainty(n - 1, 1.0, 1.0))


def _field_frequency(N: int, gamma0: float, gamma_a: float) -> float:
    frequency = N * gamma0 - gamma_a
    if frequency == 0:
        raise DegenerateDetuningError(
            "N * gamma0 equals gamma_a, the probe is insensitive to the field")
    return frequency


def field_sensing_probability(N: int, gamma0: float, gamma_a: float, B: float, t):
    """Readout probability of a field sensor whose auxiliary qubit has gyromagnetic ratio ``gamma_a``,
    :math:`\\frac{1}{2}[1 + \\cos((N\\gamma_0 - \\gamma_a) B t)]`."""
    _check_nonnegative("t", t)
    return 0.5 * (1 + numpy.cos(_field_frequency(N, gamma0, gamma_a) * B * numpy.asarray(t)))


def field_sensing_fisher_information(N: int, gamma0: float, gamma_a: float, t) -> float:
    return (_field_frequency(N, gamma0, gamma_a) * numpy.asarray(t))**2


def field_sensing_uncertainty(N: int, gamma0: float, gamma_a: float, T: float, t: float) -> float:
    """Uncertainty of a magnetic field estimate, :math:`\\delta B^2 = 1/[(N\\gamma_0 - \\gamma_a)^2 T t]`.

    :param N: number of working qubits
    :param gamma0: gyromagnetic ratio of the working qubits
    :param gamma_a: gyromagnetic ratio of the auxiliary qubit
    :param T: total duration of the experiment
    :param t: interrogation time
    """
    frequency = _field_frequency(N, gamma0, gamma_a)
    ExperimentBudget(T, t)
    return 1 / (frequency**2 * T * t)


def field_sensing_time(N: int, gamma0: float, gamma_a: float, B: float, k: int = 1) -> float:
    """Interrogation time satisfying :math:`(N\\gamma_0 - \\gamma_a) B t = k\\pi/2` for odd ``k``."""
    if k < 1 or k % 2 == 0:
        raise DomainError("k must be a positive odd integer, {0} was passed".format(k))
    if B == 0:
        raise DegenerateDetuningError("a vanishing field produces no phase")
    return k * math.pi / (2 * abs(_field_frequency(N, gamma0, gamma_a) * B))
