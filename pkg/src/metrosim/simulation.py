"""Monte Carlo simulation of engineered dephasing noise.

Classical multi-tone fields with random phases are imposed on the working and
auxiliary qubits,

.. math:: \\beta_c(t) = b_c \\sum_{j=1}^{J} \\omega_j F(j) \\cos(\\omega_j t + \\psi_{cj}),

and the relative phase :math:`\\phi_B(t)` accumulated between the two GHZ branches
is integrated exactly, tone by tone. Averaging over many phase draws reproduces the
Ramsey signal of a probe in a dephasing bath with the same power spectrum."""

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Union

import numexpr
import numpy
import tqdm
from numpy.random import Generator, Philox, SeedSequence
from scipy.stats import linregress

from .errors import DomainError, NoiseFloorWarning, check_option

phase_policies = ["working_shared_aux_matched", "shared_all_qubits", "independent_per_qubit"]
channels = ["working", "auxiliary"]
scenarios = ["superdecoherence_no_aux", "with_aux", "uncorrelated_per_qubit"]


def white_shape(j: numpy.ndarray) -> numpy.ndarray:
    """White noise, :math:`F(j) = 1/j`, so that every tone has amplitude :math:`\\omega_0`."""
    return 1 / numpy.asarray(j, dtype=float)


shapes = {"white": white_shape}


class NoiseSpec:
    """Engineered multi-tone noise.

    :param b1: amplitude of the noise on each working qubit
    :param b2: amplitude of the noise on the auxiliary qubit
    :param omega0: base angular frequency, in rad/s; tone :math:`j` sits at :math:`j\\omega_0`
    :param J: number of tones, the cutoff being :math:`J\\omega_0`
    :param shape: spectral shape :math:`F(j)`, a name from :py:data:`shapes` or a callable
    :param phase_policy: how random phases are shared between qubits, one of
                         `'working_shared_aux_matched'`, `'shared_all_qubits'` and
                         `'independent_per_qubit'`
    :param seed: seed of the per-trajectory random streams
    """

    def __init__(
        self,
        b1: float,
        b2: float,
        omega0: float,
        J: int,
        shape: Union[str, Callable[[numpy.ndarray], numpy.ndarray]] = "white",
        phase_policy: str = "working_shared_aux_matched",
        seed: int = 0,
    ):
        if omega0 <= 0:
            raise DomainError("omega0 must be positive, {0} was passed".format(omega0))
        if J < 1 or int(J) != J:
            raise DomainError("J must be a positive integer, {0} was passed".format(J))
        if isinstance(shape, str):
            self._shape_name = check_option("shape", shape, list(shapes))
            shape = shapes[shape]
        else:
            self._shape_name = getattr(shape, "__name__", "custom")
        if seed < 0:
            raise DomainError("seed must be non-negative, {0} was passed".format(seed))

        self._b1 = float(b1)
        self._b2 = float(b2)
        self._omega0 = float(omega0)
        self._J = int(J)
        self._shape = shape
        self._phase_policy = check_option("phase_policy", phase_policy, phase_policies)
        self._seed = int(seed)

        self._tones = numpy.arange(1, self._J + 1)
        self._weights = numpy.asarray(shape(self._tones), dtype=float)

    def __str__(self):
        return "Noise (b1={0}, b2={1}, omega0={2}, J={3}, {4}, {5})".format(
            self._b1, self._b2, self._omega0, self._J, self._shape_name, self._phase_policy)

    @classmethod
    def from_hz(cls, base_hz: float, cutoff_hz: float, b1: float = 1.0, b2: float = 0.0,
                **kwargs) -> "NoiseSpec":
        """Builds a spec from a base frequency and a cutoff given in Hz; the number of tones
        is the rounded ratio of the two."""
        if base_hz <= 0 or cutoff_hz < base_hz:
            raise DomainError("frequencies must satisfy 0 < base <= cutoff, {0} and {1} were passed".format(
                base_hz, cutoff_hz))
        return cls(b1, b2, 2 * math.pi * base_hz, int(round(cutoff_hz / base_hz)), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseSpec":
        return cls(
            data["b1"], data["b2"], data["omega0"], data["J"],
            data.get("shape", "white"), data.get("phase_policy", "working_shared_aux_matched"),
            data.get("seed", 0),
        )

    def to_dict(self) -> dict:
        return {
            "b1": self._b1,
            "b2": self._b2,
            "omega0": self._omega0,
            "J": self._J,
            "shape": self._shape_name,
            "phase_policy": self._phase_policy,
            "seed": self._seed,
        }

    def replace(self, **changes) -> "NoiseSpec":
        """A copy of this spec with some fields changed."""
        fields = {
            "b1": self._b1, "b2": self._b2, "omega0": self._omega0, "J": self._J,
            "shape": self._shape if self._shape_name not in shapes else self._shape_name,
            "phase_policy": self._phase_policy, "seed": self._seed,
        }
        fields.update(changes)
        return NoiseSpec(**fields)

    @property
    def b1(self) -> float:
        return self._b1

    @property
    def b2(self) -> float:
        return self._b2

    @property
    def omega0(self) -> float:
        return self._omega0

    @property
    def J(self) -> int:
        return self._J

    @property
    def phase_policy(self) -> str:
        return self._phase_policy

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def frequencies(self) -> numpy.ndarray:
        """Tone frequencies :math:`\\omega_j = j\\omega_0`."""
        return self._tones * self._omega0

    @property
    def tones(self) -> numpy.ndarray:
        return self._tones

    @property
    def shape_values(self) -> numpy.ndarray:
        """:math:`F(j)` for every tone."""
        return self._weights

    def phase_rows(self, N: int) -> int:
        """Number of independent phase rows drawn per trajectory."""
        return {"working_shared_aux_matched": 1, "shared_all_qubits": 2,
                "independent_per_qubit": N + 1}[self._phase_policy]

    def phase_coefficients(self, N: int) -> numpy.ndarray:
        """Weight of each phase row in :math:`2\\phi_B`; the auxiliary row always comes last."""
        if self._phase_policy == "working_shared_aux_matched":
            return numpy.array([N * self._b1 - self._b2])
        if self._phase_policy == "shared_all_qubits":
            return numpy.array([N * self._b1, -self._b2])
        return numpy.append(numpy.full(N, self._b1), -self._b2)


class PhaseSet:
    """Random tone phases of one trajectory, one row per independent noise channel.

    Rows are laid out as described by :py:meth:`NoiseSpec.phase_coefficients`."""

    def __init__(self, psi: numpy.ndarray, policy: str):
        self._psi = numpy.asarray(psi, dtype=float)
        self._policy = policy

    @staticmethod
    def generator(seed: int, index: int) -> Generator:
        """Counter-based stream of trajectory ``index``, independent of every other trajectory."""
        return Generator(Philox(SeedSequence(entropy=seed, spawn_key=(index,))))

    @classmethod
    def draw(cls, spec: NoiseSpec, N: int, index: int) -> "PhaseSet":
        psi = cls.generator(spec.seed, index).random((spec.phase_rows(N), spec.J)) * (2 * math.pi)
        psi[psi >= 2 * math.pi] = 0.0
        return cls(psi, spec.phase_policy)

    @property
    def psi(self) -> numpy.ndarray:
        return self._psi

    def row(self, channel: str, qubit: int = 0) -> numpy.ndarray:
        check_option("channel", channel, channels)
        if self._policy == "working_shared_aux_matched":
            return self._psi[0]
        if channel == "auxiliary":
            return self._psi[-1]
        if self._policy == "shared_all_qubits":
            return self._psi[0]
        if not 0 <= qubit < self._psi.shape[0] - 1:
            raise DomainError("qubit must lie in [0, {0}), {1} was passed".format(self._psi.shape[0] - 1, qubit))
        return self._psi[qubit]


def _as_grid(t) -> numpy.ndarray:
    times = numpy.asarray(t, dtype=float)
    if numpy.any(times < 0):
        raise DomainError("time must be non-negative, {0} was passed".format(t))
    return times


def noise_amplitude(spec: NoiseSpec, phases: PhaseSet, channel: str, t, qubit: int = 0):
    """Instantaneous noise amplitude :math:`\\beta_1(t)` (working) or :math:`\\beta_2(t)` (auxiliary)
    by direct summation of the tones."""
    times = _as_grid(t)
    psi = phases.row(channel, qubit)
    amplitude = spec.b1 if channel == "working" else spec.b2
    w = spec.frequencies
    values = amplitude * (numpy.cos(numpy.multiply.outer(times, w) + psi) @ (w * spec.shape_values))
    return values.item() if values.ndim == 0 else values


def accumulated_phase(spec: NoiseSpec, phases: PhaseSet, N: int, t):
    """Relative phase between the GHZ branches of one trajectory,

    .. math:: \\phi_B(t) = \\frac{1}{2}\\left[N\\int_0^t \\beta_1 - \\int_0^t \\beta_2\\right],

    using :math:`\\int_0^t \\cos(\\omega_j\\tau + \\psi)d\\tau = [\\sin(\\omega_j t + \\psi) - \\sin\\psi]/\\omega_j`.
    With independent phases per qubit the working integral is the sum of the :math:`N` per-qubit
    integrals."""
    times = _as_grid(t)
    coefficients = spec.phase_coefficients(N)
    F = spec.shape_values
    w = spec.frequencies
    wt = numpy.multiply.outer(times, w)
    total = numpy.zeros_like(times)
    for c, psi in zip(coefficients, phases.psi):
        if c == 0:
            continue
        total = total + c * ((numpy.sin(wt + psi) - numpy.sin(psi)) @ F)
    values = 0.5 * total
    return values.item() if numpy.ndim(values) == 0 else values


class EnsembleResult(NamedTuple):
    t_grid: numpy.ndarray
    mean_cos: numpy.ndarray
    mean_sin: numpy.ndarray
    P0: numpy.ndarray
    stderr: numpy.ndarray
    M: int
    envelope_stderr: numpy.ndarray


def time_grid(end: float, step: float) -> numpy.ndarray:
    """Uniform grid from 0 to ``end`` inclusive."""
    if end <= 0 or step <= 0:
        raise DomainError("grid end and step must be positive")
    return numpy.linspace(0.0, end, int(round(end / step)) + 1)


def _phase_chunk(spec: NoiseSpec, N: int, rotations: numpy.ndarray, start: int, stop: int) -> numpy.ndarray:
    coefficients = spec.phase_coefficients(N)[:, None]
    F = spec.shape_values
    amplitudes = numpy.empty((stop - start, spec.J), dtype=complex)
    for row, index in enumerate(range(start, stop)):
        psi = PhaseSet.draw(spec, N, index).psi
        amplitudes[row] = numexpr.evaluate("coefficients * F * exp(1j * psi)").sum(axis=0)
    # sum_j F_j c [sin(w_j t + psi) - sin(psi)] = Im(A_j e^{i w_j t}) - Im(A_j)
    return 0.5 * ((amplitudes @ rotations.T).imag - amplitudes.imag.sum(axis=1)[:, None])


def sample_phases(spec: NoiseSpec, N: int, t_grid: Sequence[float], M: int, threads: int = 1,
                  chunk_size: int = 250, verbose: bool = False) -> numpy.ndarray:
    """Relative phases :math:`\\phi_B` of ``M`` trajectories on a time grid.

    Trajectories are processed in fixed chunks, optionally in parallel threads, and written
    into their own rows, so results do not depend on ``threads``.

    :returns: an ``(M, len(t_grid))`` array
    """
    if M < 1:
        raise DomainError("M must be at least 1, {0} was passed".format(M))
    if threads < 1:
        raise DomainError("threads must be at least 1, {0} was passed".format(threads))
    times = _as_grid(t_grid)
    w = spec.frequencies
    wt = numpy.multiply.outer(times, w)
    rotations = numexpr.evaluate("exp(1j * wt)")

    phases = numpy.empty((M, times.size))
    bounds = [(start, min(start + chunk_size, M)) for start in range(0, M, chunk_size)]

    def work(bound):
        start, stop = bound
        phases[start:stop] = _phase_chunk(spec, N, rotations, start, stop)

    if verbose:
        pbar = tqdm.tqdm(total=len(bounds))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for _ in pool.map(work, bounds):
            if verbose:
                pbar.update()
    if verbose:
        pbar.close()
    return phases


def run_ensemble(spec: NoiseSpec, N: int, omega0: float, omega_a: float, t_grid: Sequence[float], M: int,
                 threads: int = 1, verbose: bool = False) -> EnsembleResult:
    """Ensemble-averaged probability of finding the probe in its initial state,

    .. math:: P_0(t) = \\frac{1}{2}\\left[1 + \\cos 2\\phi_A \\langle\\cos 2\\phi_B\\rangle
              - \\sin 2\\phi_A \\langle\\sin 2\\phi_B\\rangle\\right],
              \\quad \\phi_A = \\frac{1}{2}(N\\Omega_0 - \\omega_a)t

    :param spec: the engineered noise
    :param N: number of working qubits
    :param omega0: working-qubit frequency
    :param omega_a: auxiliary-qubit frequency
    :param t_grid: ascending evaluation times
    :param M: number of trajectories, at least 2
    :param threads: number of worker threads
    :param verbose: whether to show a progress bar
    """
    if M < 2:
        raise DomainError("an ensemble needs at least 2 realizations, {0} was passed".format(M))
    times = _as_grid(t_grid)
    if times.ndim != 1 or times.size == 0 or numpy.any(numpy.diff(times) < 0):
        raise DomainError("the time grid must be a non-empty ascending sequence")

    # rows are times, so every mean is a pairwise sum over a contiguous row
    phi_B = numpy.ascontiguousarray(sample_phases(spec, N, times, M, threads, verbose=verbose).T)
    cos2 = numpy.cos(2 * phi_B)
    sin2 = numpy.sin(2 * phi_B)
    phi_A = 0.5 * (N * omega0 - omega_a) * times
    probabilities = 0.5 * (1 + numpy.cos(2 * phi_A[:, None] + 2 * phi_B))

    mean_cos = cos2.sum(axis=1) / M
    mean_sin = sin2.sum(axis=1) / M
    P0 = 0.5 * (1 + numpy.cos(2 * phi_A) * mean_cos - numpy.sin(2 * phi_A) * mean_sin)
    stderr = probabilities.std(axis=1, ddof=1) / math.sqrt(M)
    envelope_stderr = numpy.sqrt((cos2.var(axis=1, ddof=1) + sin2.var(axis=1, ddof=1)) / M)
    return EnsembleResult(times, mean_cos, mean_sin, P0, stderr, M, envelope_stderr)


def _tone_sum(spec: NoiseSpec, t) -> numpy.ndarray:
    # sum_j F(j)^2 sin^2(w_j t / 2)
    times = _as_grid(t)
    return numpy.sin(numpy.multiply.outer(times, spec.frequencies) / 2)**2 @ spec.shape_values**2


def analytic_chi(spec: NoiseSpec, N: int, t, scenario: str = "superdecoherence_no_aux"):
    """Gaussian-limit decoherence function :math:`\\chi(t) = \\langle\\phi_B^2(t)\\rangle`,

    .. math:: \\chi(t) = \\frac{c^2}{2}\\sum_j F(j)^2 \\sin^2\\frac{\\omega_j t}{2}

    with :math:`c = Nb_1` without auxiliary qubit, :math:`c = Nb_1 - b_2` with a matched auxiliary
    qubit and :math:`c^2 = Nb_1^2` when every working qubit sees its own noise.

    :param scenario: one of `'superdecoherence_no_aux'`, `'with_aux'` and `'uncorrelated_per_qubit'`
    """
    check_option("scenario", scenario, scenarios)
    c2 = {
        "superdecoherence_no_aux": (N * spec.b1)**2,
        "with_aux": (N * spec.b1 - spec.b2)**2,
        "uncorrelated_per_qubit": N * spec.b1**2,
    }[scenario]
    values = 0.5 * c2 * _tone_sum(spec, t)
    return values.item() if values.ndim == 0 else values


def ensemble_chi(spec: NoiseSpec, N: int, t):
    """Gaussian-limit :math:`\\chi(t)` of the ensemble :py:func:`run_ensemble` draws for ``spec``,
    following its phase policy and both amplitudes."""
    c2 = float(numpy.sum(spec.phase_coefficients(N)**2))
    values = 0.5 * c2 * _tone_sum(spec, t)
    return values.item() if values.ndim == 0 else values


def gaussian_probability(spec: NoiseSpec, N: int, omega0: float, omega_a: float, t):
    """:math:`P_0(t) = \\frac{1}{2}[1 + \\cos 2\\phi_A\\, e^{-2\\chi(t)}]` for Gaussian phase noise."""
    times = _as_grid(t)
    return 0.5 * (1 + numpy.cos((N * omega0 - omega_a) * times) * numpy.exp(-2 * ensemble_chi(spec, N, times)))


def calibrate_amplitude(spec: NoiseSpec, N: int, t_target: float) -> float:
    """Working-noise amplitude :math:`b_1` for which an unprotected GHZ probe of :math:`N` qubits
    has decoherence factor :math:`2\\chi(t_{target}) = 1`."""
    if t_target <= 0:
        raise DomainError("the calibration time must be positive, {0} was passed".format(t_target))
    tone_sum = float(_tone_sum(spec, t_target))
    if tone_sum <= 0:
        raise DomainError("the noise spectrum has no weight at t = {0}".format(t_target))
    return 1 / (N * math.sqrt(tone_sum))


class DecoherenceFit(NamedTuple):
    t_grid: numpy.ndarray
    gamma: numpy.ndarray
    truncated: bool


class PowerLawFit(NamedTuple):
    exponent: float
    prefactor: float
    rvalue: float


def fit_decoherence_factor(ensemble: EnsembleResult, floor: float = 5.0) -> DecoherenceFit:
    """Decoherence factor estimated from the modulus of :math:`\\langle e^{2i\\phi_B}\\rangle`,

    .. math:: \\hat\\Gamma(t) = -\\ln\\sqrt{\\langle\\cos 2\\phi_B\\rangle^2 + \\langle\\sin 2\\phi_B\\rangle^2}

    which does not depend on the signal phase. The series stops at the first time where the
    modulus is smaller than ``floor`` standard errors, with a
    :py:class:`~metrosim.errors.NoiseFloorWarning`."""
    modulus = numpy.hypot(ensemble.mean_cos, ensemble.mean_sin)
    below = numpy.nonzero(modulus < floor * ensemble.envelope_stderr)[0]
    end = int(below[0]) if below.size else modulus.size
    if below.size:
        warnings.warn(
            "decoherence factor truncated at t = {0}, where the signal reaches the noise floor".format(
                ensemble.t_grid[end]),
            NoiseFloorWarning,
        )
    with numpy.errstate(divide="ignore"):
        gamma = -numpy.log(modulus[:end])
    return DecoherenceFit(ensemble.t_grid[:end], gamma, bool(below.size))


def fit_power_law(t, gamma, t_min: float = 0.0, t_max: float = float("inf")) -> PowerLawFit:
    """Least-squares fit of :math:`\\Gamma(t) = C t^p` in log-log scale over ``[t_min, t_max]``."""
    t = numpy.asarray(t, dtype=float)
    gamma = numpy.asarray(gamma, dtype=float)
    mask = (t >= t_min) & (t <= t_max) & (t > 0) & (gamma > 0)
    if numpy.count_nonzero(mask) < 2:
        raise DomainError("a power-law fit needs at least two positive points in the window")
    fit = linregress(numpy.log(t[mask]), numpy.log(gamma[mask]))
    return PowerLawFit(fit.slope, math.exp(fit.intercept), fit.rvalue)


# noise settings of each simulated scheme, relative to a base spec
ensemble_schemes = {
    "superdecoherence_no_aux": lambda spec, N: spec.replace(b2=0.0, phase_policy="working_shared_aux_matched"),
    "with_aux": lambda spec, N: spec.replace(b2=N * spec.b1, phase_policy="working_shared_aux_matched"),
    "uncorrelated_per_qubit": lambda spec, N: spec.replace(b2=0.0, phase_policy="independent_per_qubit"),
}


class EnsembleSimulator:
    """Runs the Monte Carlo ensemble of several noise schemes on a common time grid.

    :param spec: base noise; each scheme overrides its auxiliary amplitude and phase policy
    :param N: number of working qubits
    :param omega0: working-qubit frequency
    :param omega_a: auxiliary-qubit frequency
    :param t_grid: evaluation times

    >>> spec = NoiseSpec.from_hz(0.2, 140, b1=0.05)
    >>> simulator = EnsembleSimulator(spec, 4, 2 * math.pi * 5, 0.0, time_grid(1.0, 5e-3))
    >>> results = simulator.simulate(M=200)
    """

    def __init__(self, spec: NoiseSpec, N: int, omega0: float, omega_a: float, t_grid: Sequence[float]):
        if N < 1:
            raise DomainError("N must be at least 1, {0} was passed".format(N))
        self._spec = spec
        self._N = N
        self._omega0 = omega0
        self._omega_a = omega_a
        self._t_grid = _as_grid(t_grid)
        self._results: Dict[str, EnsembleResult] = {}
        self._specs: Dict[str, NoiseSpec] = {}
        self._durations: Dict[str, float] = {}
        self._duration = 0.0

    def __str__(self):
        return "Ensemble simulator ({0}, N={1})".format(self._spec, self._N)

    @property
    def results(self) -> Dict[str, EnsembleResult]:
        return self._results

    @property
    def specs(self) -> Dict[str, NoiseSpec]:
        """Noise actually simulated for each scheme."""
        return self._specs

    @property
    def durations(self) -> Dict[str, float]:
        return self._durations

    @property
    def duration(self) -> float:
        """Duration of the last simulation, in seconds."""
        return self._duration

    def simulate(self, schemes: Optional[List[str]] = None, M: int = 2000, threads: int = 1,
                 verbose: bool = False) -> Dict[str, EnsembleResult]:
        """Simulates every requested scheme, by default all of :py:data:`ensemble_schemes`."""
        schemes = list(ensemble_schemes) if schemes is None else schemes
        for scheme in schemes:
            check_option("scheme", scheme, list(ensemble_schemes))

        if verbose:
            print("Starting simulation: {0}, {1} realizations, schemes {2}".format(self, M, schemes))
        start_time = time.time()

        for scheme in schemes:
            spec = ensemble_schemes[scheme](self._spec, self._N)
            scheme_start = time.time()
            self._specs[scheme] = spec
            self._results[scheme] = run_ensemble(
                spec, self._N, self._omega0, self._omega_a, self._t_grid, M, threads, verbose)
            self._durations[scheme] = time.time() - scheme_start

        self._duration = time.time() - start_time
        if verbose:
            print("Simulation took {0} seconds".format(self._duration))
        return self._results
