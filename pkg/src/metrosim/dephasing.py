"""Decoherence laws, spatial bath correlations and mode-sum spectral functions.

Two descriptions of pure dephasing live here. The phenomenological one pairs a
single-qubit decoherence factor :math:`\\Gamma(t)` (see :py:class:`DephasingLaw`)
with a spatial correlation structure (see :py:class:`BathTopology`). The
microscopic one starts from a discrete set of bosonic modes coupled to the qubits
(see :py:class:`ModeBath`) and evaluates the time correlation functions, the
Lamb-shift coefficients and the complex spectral functions that connect them:

.. math:: D_{ij}(0, t) = \\frac{1}{2} C_{ij}(0, t) + i F_{ij}(0, t)

Units follow :math:`\\hbar = k_B = 1`; frequencies are angular (rad/s) and
temperatures are expressed in the same units as the mode frequencies."""

from abc import ABCMeta, abstractmethod
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy

from .errors import DomainError, GridRangeError, check_option

ArrayLike = Union[float, Sequence[float], numpy.ndarray]


def _as_time(t: ArrayLike) -> numpy.ndarray:
    times = numpy.asarray(t, dtype=float)
    if numpy.any(times < 0) or numpy.any(numpy.isnan(times)):
        raise DomainError("time must be non-negative, {0} was passed".format(t))
    return times


def _output(values: numpy.ndarray, like: ArrayLike):
    """Returns a Python float for scalar queries and an array otherwise."""
    if numpy.ndim(like) == 0:
        return values.item()
    return values


class DephasingLaw(metaclass=ABCMeta):
    """Base class for single-qubit decoherence factors :math:`\\Gamma(t)`.

    Subclasses guarantee :math:`\\Gamma(0) = 0` and a non-decreasing factor, so
    that the dephasing rate :math:`\\gamma(t) = d\\Gamma/dt` is non-negative."""

    @abstractmethod
    def factor(self, t: numpy.ndarray) -> numpy.ndarray:
        """Decoherence factor at non-negative times ``t``."""
        pass

    @abstractmethod
    def rate(self, t: numpy.ndarray) -> numpy.ndarray:
        """Dephasing rate at non-negative times ``t``."""
        pass

    @property
    def horizon(self) -> float:
        """Largest time at which the law can be evaluated."""
        return float("inf")


class Markovian(DephasingLaw):
    """Markovian dephasing, :math:`\\Gamma(t) = \\alpha t`.

    :param alpha: dephasing rate, in 1/s"""

    def __init__(self, alpha: float):
        if alpha < 0:
            raise DomainError("alpha must be non-negative, {0} was passed".format(alpha))
        self._alpha = float(alpha)

    def __str__(self):
        return "Markovian (alpha={0})".format(self._alpha)

    @property
    def alpha(self) -> float:
        return self._alpha

    def factor(self, t):
        return self._alpha * t

    def rate(self, t):
        return numpy.full_like(t, self._alpha, dtype=float)


class NonMarkovian(DephasingLaw):
    """Non-Markovian (quadratic, Zeno-like) dephasing, :math:`\\Gamma(t) = \\beta t^2`.

    :param beta: curvature of the decoherence factor, in 1/s²"""

    def __init__(self, beta: float):
        if beta < 0:
            raise DomainError("beta must be non-negative, {0} was passed".format(beta))
        self._beta = float(beta)

    def __str__(self):
        return "Non-Markovian (beta={0})".format(self._beta)

    @property
    def beta(self) -> float:
        return self._beta

    def factor(self, t):
        return self._beta * t * t

    def rate(self, t):
        return 2 * self._beta * t


class Tabulated(DephasingLaw):
    """Decoherence factor sampled on a uniform time grid starting at zero.

    Values between grid points are linearly interpolated and the rate is the
    forward difference of the enclosing interval (the last interval is used at
    the end of the grid).

    :param values: :math:`\\Gamma(k\\,dt)` for :math:`k = 0, 1, \\ldots`
    :param dt: grid spacing, in seconds
    """

    def __init__(self, values: Sequence[float], dt: float):
        values = numpy.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise DomainError("a tabulated law needs at least two samples")
        if dt <= 0:
            raise DomainError("grid spacing must be positive, {0} was passed".format(dt))
        if abs(values[0]) > 1e-12:
            raise DomainError(
                "a decoherence factor must vanish at t = 0, {0} was passed".format(values[0])
            )
        if numpy.any(numpy.diff(values) < 0):
            raise DomainError("a decoherence factor must be non-decreasing on its grid")

        self._values = values
        self._dt = float(dt)
        self._times = numpy.arange(values.size) * self._dt

    def __str__(self):
        return "Tabulated ({0} samples, dt={1})".format(self._values.size, self._dt)

    @classmethod
    def from_samples(cls, times: Sequence[float], values: Sequence[float]) -> "Tabulated":
        """Builds a law from explicit sample times, which must be uniform and start at zero."""
        times = numpy.asarray(times, dtype=float)
        if times.size < 2 or times[0] != 0:
            raise DomainError("sample times must start at 0 and contain at least two points")
        steps = numpy.diff(times)
        if not numpy.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise DomainError("sample times must be uniformly spaced")
        return cls(values, float(steps[0]))

    @classmethod
    def from_mode_bath(cls, bath: "ModeBath", times: Sequence[float]) -> "Tabulated":
        """Integrates the single-qubit correlation function of a mode bath on a uniform grid.

        Uses the exact antiderivative

        .. math:: \\Gamma(t) = 2 \\sum_k g_k^2 [2\\bar{n}(\\omega_k, T) + 1]
                  \\frac{1 - \\cos \\omega_k t}{\\omega_k^2}

        and fails if the resulting factor is not monotone on the grid."""
        times = numpy.asarray(times, dtype=float)
        w = bath.frequencies
        weight = 2 * bath.couplings**2 * (2 * occupation(w, bath.temperature) + 1) / w**2
        values = (1 - numpy.cos(numpy.multiply.outer(times, w))) @ weight
        return cls.from_samples(times, values)

    @property
    def values(self) -> numpy.ndarray:
        return self._values

    @property
    def dt(self) -> float:
        return self._dt

    @property
    def horizon(self) -> float:
        return float(self._times[-1])

    def _check_range(self, t):
        if numpy.any(t > self.horizon * (1 + 1e-12)):
            raise GridRangeError(
                "tabulated law is defined up to t = {0}, {1} was requested".format(
                    self.horizon, numpy.max(t)
                )
            )

    def factor(self, t):
        self._check_range(t)
        return numpy.interp(t, self._times, self._values)

    def rate(self, t):
        self._check_range(t)
        slopes = numpy.diff(self._values) / self._dt
        # grid points, up to rounding, belong to the interval they open
        index = numpy.clip(numpy.searchsorted(self._times, t + 1e-9 * self._dt, side="right") - 1, 0, slopes.size - 1)
        return slopes[index]


def decoherence_factor(law: DephasingLaw, t: ArrayLike):
    """Single-qubit decoherence factor :math:`\\Gamma(t)`.

    :param law: the dephasing law
    :param t: one or more non-negative times, in seconds
    :returns: :math:`\\Gamma(t)`, a float for scalar ``t``

    >>> decoherence_factor(NonMarkovian(1), 2.0)
    4.0
    """
    times = _as_time(t)
    return _output(numpy.asarray(law.factor(times), dtype=float), t)


def decoherence_rate(law: DephasingLaw, t: ArrayLike):
    """Single-qubit dephasing rate :math:`\\gamma(t) = d\\Gamma/dt`."""
    times = _as_time(t)
    return _output(numpy.asarray(law.rate(times), dtype=float), t)


class BathTopology(metaclass=ABCMeta):
    """Spatial correlation structure of a bath seen by qubits on a linear array.

    A topology maps the distance between two array positions to the
    dimensionless factor multiplying :math:`\\gamma(t)` in the cross correlator."""

    @abstractmethod
    def correlation(self, distance: numpy.ndarray) -> numpy.ndarray:
        """Correlation factor for integer site distances (0 on the diagonal)."""
        pass

    def matrix(self, size: int) -> numpy.ndarray:
        """Correlation factors between all pairs of ``size`` consecutive sites."""
        positions = numpy.arange(size)
        return self.correlation(numpy.abs(numpy.subtract.outer(positions, positions)))


class Uncorrelated(BathTopology):
    """Every qubit sees an independent bath, :math:`C_{ij} = \\gamma\\delta_{ij}`."""

    def __str__(self):
        return "Uncorrelated"

    def correlation(self, distance):
        return (numpy.asarray(distance) == 0).astype(float)


class FullyCorrelated(BathTopology):
    """Every qubit sees the same bath, :math:`C_{ij} = \\gamma`; the origin of superdecoherence."""

    def __str__(self):
        return "Fully correlated"

    def correlation(self, distance):
        return numpy.ones_like(distance, dtype=float)


class PartiallyCorrelated(BathTopology):
    """Exponentially decaying spatial correlations, :math:`C_{ij} = e^{-x|i-j|}\\gamma`.

    :param x: ratio between the site spacing and the correlation length of the bath;
              ``x = 0`` is the fully correlated limit and ``x = inf`` the uncorrelated one
    """

    def __init__(self, x: float):
        if not x >= 0:
            raise DomainError("x must be non-negative, {0} was passed".format(x))
        self._x = float(x)

    def __str__(self):
        return "Partially correlated (x={0})".format(self._x)

    @property
    def x(self) -> float:
        return self._x

    def correlation(self, distance):
        distance = numpy.asarray(distance, dtype=float)
        # x = inf would give inf * 0 on the diagonal
        with numpy.errstate(invalid="ignore"):
            return numpy.where(distance == 0, 1.0, numpy.exp(-self._x * distance))


def collective_weight(topology: BathTopology, n: int) -> float:
    """Sum of the correlation factors of ``n`` adjacent qubits, :math:`\\sum_{i,j} c_{ij}`.

    Equals :math:`n` for an uncorrelated bath and :math:`n^2` for a fully correlated one."""
    if n < 1:
        raise DomainError("the number of qubits must be at least 1, {0} was passed".format(n))
    return float(numpy.sum(topology.matrix(n)))


def collective_factor(law: DephasingLaw, topology: BathTopology, n: int, t: ArrayLike):
    """Decoherence factor of the coherence between the two branches of an ``n``-qubit GHZ state.

    .. math:: \\Gamma_n(t) = \\Gamma(t) \\sum_{i,j=1}^{n} e^{-x|i-j|}

    :param law: single-qubit dephasing law
    :param topology: spatial correlation of the bath
    :param n: number of qubits
    :param t: one or more non-negative times
    """
    weight = collective_weight(topology, n)
    times = _as_time(t)
    return _output(weight * numpy.asarray(law.factor(times), dtype=float), t)


summation_ranges = ["working", "total"]


class PartialCorrelationSums(NamedTuple):
    a: float
    b: float


def partial_corr_sums(N: int, x: float, summation: str = "working") -> PartialCorrelationSums:
    """The sums :math:`a = \\sum_i e^{-x(N+1-i)}` and :math:`b = \\sum_{i,j} e^{-x|i-j|}`.

    :param N: number of working qubits; the auxiliary qubit sits at position :math:`N+1`
    :param x: dimensionless inverse correlation length
    :param summation: ``"working"`` sums over the :math:`N` working positions,
                      ``"total"`` over all :math:`N+1` positions
    """
    if N < 1:
        raise DomainError("N must be at least 1, {0} was passed".format(N))
    check_option("summation", summation, summation_ranges)
    topology = PartiallyCorrelated(x)
    size = N if summation == "working" else N + 1
    positions = numpy.arange(1, size + 1)
    a = float(numpy.sum(topology.correlation(N + 1 - positions)))
    b = float(numpy.sum(topology.matrix(size)))
    return PartialCorrelationSums(a, b)


def partial_corr_factor(N: int, x: float, K: float, summation: str = "working") -> float:
    """Total dephasing factor of the working qubits plus one auxiliary qubit in a
    partially correlated bath:

    .. math:: A(N, x) = (K - a)^2 + b - a^2

    :param N: number of working qubits
    :param x: dimensionless inverse correlation length
    :param K: ratio between the auxiliary and working couplings to the bath
    :param summation: see :py:func:`partial_corr_sums`
    """
    a, b = partial_corr_sums(N, x, summation)
    return (K - a)**2 + b - a**2


class AuxCoupling(NamedTuple):
    K: float
    A_min: float


def optimal_aux_coupling(N: int, x: float, summation: str = "working") -> AuxCoupling:
    """Coupling ratio minimizing :py:func:`partial_corr_factor`; the vertex of the parabola in K.

    >>> optimal_aux_coupling(5, 0)
    AuxCoupling(K=5.0, A_min=0.0)
    """
    a, b = partial_corr_sums(N, x, summation)
    return AuxCoupling(a, b - a**2)


def occupation(omega: ArrayLike, temperature: float) -> numpy.ndarray:
    """Bose-Einstein occupation :math:`\\bar{n}(\\omega, T) = 1/(e^{\\omega/T} - 1)`; exactly 0 at T = 0."""
    omega = numpy.asarray(omega, dtype=float)
    if temperature < 0:
        raise DomainError("temperature must be non-negative, {0} was passed".format(temperature))
    if temperature == 0:
        return numpy.zeros_like(omega)
    return 1 / numpy.expm1(omega / temperature)


class ModeBath:
    """Discrete bosonic bath of a spin-boson model of pure dephasing.

    :param frequencies: angular frequencies of the modes, all strictly positive
    :param couplings: coupling of each mode to a reference qubit, in rad/s
    :param temperature: bath temperature in frequency units (:math:`k_B = \\hbar = 1`)
    :param multipliers: per-qubit coupling multipliers, :math:`g_k^{(i)} = m_i g_k`;
                        qubits without an entry couple with multiplier 1
    """

    def __init__(
        self,
        frequencies: Sequence[float],
        couplings: Sequence[float],
        temperature: float = 0.0,
        multipliers: Optional[Sequence[float]] = None,
    ):
        frequencies = numpy.asarray(frequencies, dtype=float).reshape(-1)
        couplings = numpy.asarray(couplings, dtype=float).reshape(-1)
        if frequencies.shape != couplings.shape:
            raise DomainError("each mode needs exactly one frequency and one coupling")
        if numpy.any(frequencies <= 0):
            raise DomainError("mode frequencies must be strictly positive")
        if temperature < 0:
            raise DomainError("temperature must be non-negative, {0} was passed".format(temperature))

        self._frequencies = frequencies
        self._couplings = couplings
        self._temperature = float(temperature)
        self._multipliers = numpy.asarray(multipliers if multipliers is not None else [], dtype=float)

    def __str__(self):
        return "Mode bath ({0} modes, T={1})".format(self._frequencies.size, self._temperature)

    @classmethod
    def from_dict(cls, data: dict) -> "ModeBath":
        """Builds a bath from a configuration mapping with keys ``modes`` (a list of
        ``[frequency, coupling]`` pairs), ``temperature`` and ``multipliers``."""
        modes = numpy.asarray(data.get("modes", []), dtype=float).reshape(-1, 2)
        return cls(
            modes[:, 0],
            modes[:, 1],
            data.get("temperature", 0.0),
            data.get("multipliers"),
        )

    def to_dict(self) -> dict:
        return {
            "modes": numpy.column_stack([self._frequencies, self._couplings]).tolist(),
            "temperature": self._temperature,
            "multipliers": self._multipliers.tolist(),
        }

    @property
    def frequencies(self) -> numpy.ndarray:
        return self._frequencies

    @property
    def couplings(self) -> numpy.ndarray:
        return self._couplings

    @property
    def temperature(self) -> float:
        return self._temperature

    def multiplier(self, qubit: int) -> float:
        if qubit < 0:
            raise DomainError("qubit ids are non-negative, {0} was passed".format(qubit))
        if qubit < self._multipliers.size:
            return float(self._multipliers[qubit])
        return 1.0

    def pair_weight(self, A: int, B: int) -> float:
        return self.multiplier(A) * self.multiplier(B)

    def _mode_sum(self, t: ArrayLike, kernel: Callable[[numpy.ndarray, numpy.ndarray], numpy.ndarray],
                  thermal: bool) -> numpy.ndarray:
        times = _as_time(t)
        if self._frequencies.size == 0:
            return numpy.zeros_like(times)
        weight = self._couplings**2
        if thermal:
            weight = weight * (2 * occupation(self._frequencies, self._temperature) + 1)
        return kernel(numpy.multiply.outer(times, self._frequencies), self._frequencies) @ weight

    def correlation_sum(self, t: ArrayLike) -> numpy.ndarray:
        """Correlation function of a qubit with unit multiplier,
        :math:`2 \\sum_k g_k^2 [2\\bar{n}(\\omega_k, T) + 1] \\sin(\\omega_k t)/\\omega_k`."""
        return 2 * self._mode_sum(t, lambda wt, w: numpy.sin(wt) / w, True)

    def lamb_shift_sum(self, t: ArrayLike) -> numpy.ndarray:
        """Lamb-shift coefficient of a qubit with unit multiplier,
        :math:`\\sum_k g_k^2 (\\cos \\omega_k t - 1)/\\omega_k`."""
        return self._mode_sum(t, lambda wt, w: (numpy.cos(wt) - 1) / w, False)


def mode_correlation(bath: ModeBath, A: int, B: int, t: ArrayLike):
    """Time correlation function of the pure-dephasing channel,

    .. math:: C_{AB}(0, t) = 2 \\sum_k g_k^A g_k^B [2\\bar{n}(\\omega_k, T) + 1]
              \\frac{\\sin \\omega_k t}{\\omega_k}

    summed over every mode of the bath.

    :param bath: the mode bath
    :param A: id of the first qubit
    :param B: id of the second qubit
    :param t: one or more non-negative times
    """
    values = bath.pair_weight(A, B) * bath.correlation_sum(t)
    return _output(values, t)


def lamb_shift_coeff(bath: ModeBath, A: int, B: int, t: ArrayLike):
    """Lamb-shift coefficient :math:`F_{AB}(0, t) = \\sum_k g_k^A g_k^B (\\cos \\omega_k t - 1)/\\omega_k`."""
    values = bath.pair_weight(A, B) * bath.lamb_shift_sum(t)
    return _output(values, t)


def spectral_function(bath: ModeBath, i: int, j: int, t: ArrayLike):
    """Complex spectral function of the pure-dephasing channel,

    .. math:: D_{ij}(0, t) = \\sum_k g_k^{(i)} g_k^{(j)} \\left[2\\bar{n}(\\omega_k, T)
              \\frac{\\sin \\omega_k t}{\\omega_k} + \\frac{1 - e^{-i\\omega_k t}}{i\\omega_k}\\right]

    Its real part is half of :py:func:`mode_correlation` and its imaginary part is
    :py:func:`lamb_shift_coeff`."""
    times = _as_time(t)
    if bath.frequencies.size == 0:
        return _output(numpy.zeros_like(times, dtype=complex), t)
    w = bath.frequencies
    wt = numpy.multiply.outer(times, w)
    terms = 2 * occupation(w, bath.temperature) * numpy.sin(wt) / w + (1 - numpy.exp(-1j * wt)) / (1j * w)
    return _output(bath.pair_weight(i, j) * (terms @ bath.couplings**2), t)


class CorrelationKernel:
    """Cross correlators :math:`C_{pq}(0, t)` between the qubits of a probe.

    The kernel factorizes as :math:`C_{pq}(t) = W_{pq}\\,\\gamma(t)`, with a symmetric
    weight matrix and a single-qubit rate. Qubits are indexed from 0; the working
    qubits come first and the auxiliary qubit, when present, is the last index,
    which is also its position on the linear array.

    :param weights: symmetric weight matrix :math:`W`
    :param rate: callable returning :math:`\\gamma(t)` for an array of times
    """

    def __init__(self, weights: numpy.ndarray, rate: Callable[[numpy.ndarray], numpy.ndarray]):
        weights = numpy.asarray(weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise DomainError("kernel weights must form a square matrix")
        if not numpy.allclose(weights, weights.T, rtol=0, atol=1e-15):
            raise DomainError("kernel weights must be symmetric")
        self._weights = weights
        self._rate = rate

    @classmethod
    def from_law(
        cls,
        law: DephasingLaw,
        topology: BathTopology,
        n_working: int,
        aux_coupling: Optional[float] = None,
    ) -> "CorrelationKernel":
        """Kernel of ``n_working`` qubits and an optional auxiliary qubit coupled ``aux_coupling``
        times more strongly to the bath.

        :math:`C_{ij} = c(|i-j|)\\gamma`, :math:`C_{ia} = K c(N+1-i)\\gamma` and
        :math:`C_{aa} = K^2\\gamma`, where :math:`c` is the topology's correlation factor."""
        if n_working < 1:
            raise DomainError("n_working must be at least 1, {0} was passed".format(n_working))
        size = n_working if aux_coupling is None else n_working + 1
        multipliers = numpy.ones(size)
        if aux_coupling is not None:
            multipliers[-1] = aux_coupling
        weights = numpy.outer(multipliers, multipliers) * topology.matrix(size)
        return cls(weights, lambda t: numpy.asarray(law.rate(t), dtype=float))

    @classmethod
    def for_probe(cls, law: DephasingLaw, topology: BathTopology, probe) -> "CorrelationKernel":
        """Kernel for a :py:class:`metrosim.metrology.ProbeConfig`."""
        return cls.from_law(law, topology, probe.N, probe.K if probe.has_aux else None)

    @classmethod
    def from_mode_bath(cls, bath: ModeBath, size: int) -> "CorrelationKernel":
        """Kernel whose entries are :py:func:`mode_correlation` values for qubit ids ``0 .. size-1``."""
        multipliers = numpy.array([bath.multiplier(q) for q in range(size)])
        return cls(
            numpy.outer(multipliers, multipliers),
            bath.correlation_sum,
        )

    @property
    def size(self) -> int:
        return self._weights.shape[0]

    @property
    def weights(self) -> numpy.ndarray:
        return self._weights

    def rate(self, t: ArrayLike):
        times = _as_time(t)
        return _output(numpy.asarray(self._rate(times), dtype=float), t)

    def matrix(self, t: float) -> numpy.ndarray:
        """All correlators at a single time."""
        return self._weights * self.rate(float(t))

    def __call__(self, i: int, j: int, t: ArrayLike):
        if not (0 <= i < self.size and 0 <= j < self.size):
            raise DomainError("qubit indexes must lie in [0, {0}), ({1}, {2}) was passed".format(
                self.size, i, j))
        times = _as_time(t)
        return _output(self._weights[i, j] * numpy.asarray(self._rate(times), dtype=float), t)
