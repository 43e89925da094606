"""Numerical integration of the pure-dephasing master equation of a few qubits.

The generator

.. math:: \\dot\\rho = i[\\rho, H_S + H_{LS}] + \\frac{1}{2}\\sum_{p,q} C_{pq}(0, t)
          \\left(\\sigma_z^{(q)}\\rho\\sigma_z^{(p)} - \\frac{1}{2}\\{\\sigma_z^{(p)}\\sigma_z^{(q)}, \\rho\\}\\right)

is diagonal in the computational basis, so every element evolves on its own:

.. math:: \\dot\\rho_{mn} = [i(E_n - E_m) - \\Lambda_{mn}(t)]\\rho_{mn},
          \\quad \\Lambda_{mn} = \\frac{1}{4}\\sum_{p,q} C_{pq}\\Delta_p\\Delta_q,
          \\quad \\Delta_p = s_p(m) - s_p(n)

with :math:`s_p = -1` for :math:`|0\\rangle` and :math:`+1` for :math:`|1\\rangle`. The constant
system energies are applied exactly, in a rotating frame, and a fixed-step fourth-order
Runge-Kutta scheme integrates the rest. Results serve as an independent check of the closed-form
decay laws of :py:mod:`metrosim.dephasing` and :py:mod:`metrosim.metrology`.

Basis strings list the auxiliary qubit first, then the working qubits:
``"0111"`` is :math:`|0_a\\rangle|111\\rangle`."""

import math
import time
from typing import Callable, List, Optional, Sequence, Tuple

import numpy
import tqdm

from .dephasing import BathTopology, CorrelationKernel, DephasingLaw, ModeBath, decoherence_factor, lamb_shift_coeff
from .errors import BasisIndexError, DomainError, StepSizeError
from .metrology import ProbeConfig


class DensityMatrix:
    """Density matrix of a register of qubits in the computational basis.

    :param entries: a :math:`2^q \\times 2^q` complex matrix
    :param validate: whether to check hermiticity, trace and populations on construction
    """

    def __init__(self, entries: numpy.ndarray, validate: bool = True):
        entries = numpy.asarray(entries, dtype=complex)
        dim = entries.shape[0] if entries.ndim == 2 else 0
        if entries.ndim != 2 or entries.shape[1] != dim or dim < 2 or dim & (dim - 1):
            raise DomainError("a density matrix must be square with a power-of-two dimension")
        self._entries = entries
        if validate:
            self.check()

    def __str__(self):
        return "Density matrix ({0} qubits)".format(self.n_qubits)

    @property
    def entries(self) -> numpy.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def check(self, hermitian_tol: float = 1e-12, trace_tol: float = 1e-10):
        """Raises :py:class:`~metrosim.errors.DomainError` unless this is a valid density matrix."""
        if numpy.max(numpy.abs(self._entries - self._entries.conj().T)) >= hermitian_tol:
            raise DomainError("density matrix is not Hermitian")
        if abs(numpy.trace(self._entries) - 1) >= trace_tol:
            raise DomainError("density matrix trace is {0}, not 1".format(numpy.trace(self._entries)))
        populations = numpy.diag(self._entries).real
        if numpy.any(populations < -trace_tol) or numpy.any(populations > 1 + trace_tol):
            raise DomainError("populations must lie in [0, 1]")

    def is_valid(self) -> bool:
        try:
            self.check()
        except DomainError:
            return False
        return True

    def element(self, bra: str, ket: str) -> complex:
        """:math:`\\langle bra|\\rho|ket\\rangle` for two basis strings."""
        return complex(self._entries[basis_index(bra, self.n_qubits), basis_index(ket, self.n_qubits)])


def basis_index(bits: str, n_qubits: int) -> int:
    """Row of the basis state written as a string of 0s and 1s."""
    if len(bits) != n_qubits or set(bits) - {"0", "1"}:
        raise BasisIndexError(
            "{0!r} does not address a basis state of {1} qubits".format(bits, n_qubits)
        )
    return int(bits, 2)


def ghz_pair(probe: ProbeConfig) -> Tuple[str, str]:
    """The two branches of the probe state, :math:`|0_a\\rangle|1\\rangle^{\\otimes N}` and
    :math:`|1_a\\rangle|0\\rangle^{\\otimes N}`, or :math:`|1\\rangle^{\\otimes n}` and
    :math:`|0\\rangle^{\\otimes n}` without an auxiliary qubit."""
    if probe.has_aux:
        return "0" + "1" * probe.N, "1" + "0" * probe.N
    return "1" * probe.N, "0" * probe.N


def ghz_density_matrix(probe: ProbeConfig) -> DensityMatrix:
    """Equal-weight superposition of the two branches of :py:func:`ghz_pair`."""
    bra, ket = ghz_pair(probe)
    entries = numpy.zeros((2**probe.n, 2**probe.n), dtype=complex)
    indexes = [basis_index(bra, probe.n), basis_index(ket, probe.n)]
    entries[numpy.ix_(indexes, indexes)] = 0.5
    return DensityMatrix(entries)


def _spins(n_qubits: int, aux: bool) -> numpy.ndarray:
    # rows are basis states, columns follow the kernel order (working qubits, then auxiliary)
    bits = (numpy.arange(2**n_qubits)[:, None] >> numpy.arange(n_qubits - 1, -1, -1)) & 1
    if aux:
        bits = numpy.roll(bits, -1, axis=1)
    return 2.0 * bits - 1


class DephasingGenerator:
    """Generator of the pure-dephasing master equation of a qubit register.

    :param kernel: cross correlators between the qubits, working qubits first
    :param frequencies: transition frequency of each qubit, in kernel order
    :param aux: whether the last qubit of the kernel is an auxiliary qubit, which
                basis strings then list first
    :param lamb_shift: optional callable returning the matrix :math:`F_{pq}(0, t)` of
                       Lamb-shift coefficients, in kernel order
    :param prefactor: weight of the dissipator; 1/2 for the collective equation, 1 reproduces
                      the single-qubit form :math:`C(0,t)(\\sigma_z\\rho\\sigma_z - \\rho)`
    """

    def __init__(
        self,
        kernel: CorrelationKernel,
        frequencies: Sequence[float],
        aux: bool = False,
        lamb_shift: Optional[Callable[[float], numpy.ndarray]] = None,
        prefactor: float = 0.5,
    ):
        frequencies = numpy.asarray(frequencies, dtype=float)
        if frequencies.shape != (kernel.size,):
            raise DomainError("one frequency per qubit of the kernel is needed, {0} were passed".format(
                frequencies.size))
        if prefactor <= 0:
            raise DomainError("prefactor must be positive, {0} was passed".format(prefactor))
        self._kernel = kernel
        self._frequencies = frequencies
        self._aux = aux
        self._lamb_shift = lamb_shift
        self._spins = _spins(kernel.size, aux)

        delta = self._spins[:, None, :] - self._spins[None, :, :]
        self._decay_weights = prefactor / 2 * numpy.einsum("mnp,pq,mnq->mn", delta, kernel.weights, delta)
        energies = 0.5 * self._spins @ frequencies
        self._transition = energies[None, :] - energies[:, None]

    def __str__(self):
        return "Dephasing generator ({0} qubits{1})".format(
            self._kernel.size, ", Lamb shift" if self._lamb_shift is not None else "")

    @classmethod
    def for_probe(cls, law: DephasingLaw, topology: BathTopology, probe: ProbeConfig,
                  prefactor: float = 0.5) -> "DephasingGenerator":
        kernel = CorrelationKernel.for_probe(law, topology, probe)
        frequencies = [probe.omega0] * probe.N + ([probe.omega_a] if probe.has_aux else [])
        return cls(kernel, frequencies, probe.has_aux, prefactor=prefactor)

    @classmethod
    def from_mode_bath(cls, bath: ModeBath, probe: ProbeConfig, lamb_shift: bool = False) -> "DephasingGenerator":
        """Generator of a probe coupled to a discrete mode bath; qubit ``p`` of the probe is qubit
        ``p`` of the bath, the auxiliary qubit being qubit ``N``."""
        size = probe.n
        kernel = CorrelationKernel.from_mode_bath(bath, size)
        frequencies = [probe.omega0] * probe.N + ([probe.omega_a] if probe.has_aux else [])

        def lamb(t):
            return numpy.array([[lamb_shift_coeff(bath, p, q, t) for q in range(size)] for p in range(size)])

        return cls(kernel, frequencies, probe.has_aux, lamb if lamb_shift else None)

    @property
    def kernel(self) -> CorrelationKernel:
        return self._kernel

    @property
    def n_qubits(self) -> int:
        return self._kernel.size

    @property
    def has_aux(self) -> bool:
        return self._aux

    @property
    def spins(self) -> numpy.ndarray:
        """:math:`\\sigma_z` eigenvalue of each qubit (columns) in each basis state (rows)."""
        return self._spins

    @property
    def transition_frequencies(self) -> numpy.ndarray:
        """:math:`E_n - E_m` for every element."""
        return self._transition

    def decay_rates(self, t: float) -> numpy.ndarray:
        """:math:`\\Lambda_{mn}(t)` for every element."""
        return self._decay_weights * self._kernel.rate(float(t))

    def decay_weight(self, bra: str, ket: str) -> float:
        """Decay rate of one element in units of :math:`\\gamma(t)`."""
        return float(self._decay_weights[basis_index(bra, self.n_qubits), basis_index(ket, self.n_qubits)])

    def _rotating_rates(self, t: float) -> numpy.ndarray:
        rates = -self.decay_rates(t).astype(complex)
        if self._lamb_shift is not None:
            shift = numpy.einsum("mp,pq,mq->m", self._spins, self._lamb_shift(t), self._spins)
            rates += 1j * (shift[None, :] - shift[:, None])
        return rates

    def derivative(self, t: float, rho: numpy.ndarray) -> numpy.ndarray:
        """:math:`\\dot\\rho` in the rotating frame of the system Hamiltonian."""
        return self._rotating_rates(t) * rho


def _rk4_step(generator: DephasingGenerator, t: float, rho: numpy.ndarray, h: float) -> numpy.ndarray:
    k1 = generator.derivative(t, rho)
    k2 = generator.derivative(t + h / 2, rho + h / 2 * k1)
    k3 = generator.derivative(t + h / 2, rho + h / 2 * k2)
    k4 = generator.derivative(t + h, rho + h * k3)
    return rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    generator: DephasingGenerator,
    rho0: DensityMatrix,
    t_grid: Sequence[float],
    step: float = 1e-3,
    local_tolerance: Optional[float] = 1e-8,
    verbose: bool = False,
) -> List[DensityMatrix]:
    """Integrates the master equation from :math:`t_0` = ``t_grid[0]`` over the grid.

    Each interval of the grid is split in equal substeps no longer than ``step``. Every substep is
    compared with two half substeps and the integration stops if they differ by more than
    ``local_tolerance`` (``None`` disables the check).

    :param generator: the dephasing generator
    :param rho0: state at the first grid time
    :param t_grid: ascending output times
    :param step: largest integration step, in seconds
    :param local_tolerance: largest accepted local error estimate
    :param verbose: whether to show a progress bar
    :returns: the state at every grid time
    """
    times = numpy.asarray(t_grid, dtype=float)
    if times.ndim != 1 or times.size == 0 or numpy.any(numpy.diff(times) < 0) or times[0] < 0:
        raise DomainError("the time grid must be a non-empty ascending sequence of non-negative times")
    if step <= 0:
        raise DomainError("step must be positive, {0} was passed".format(step))
    if rho0.n_qubits != generator.n_qubits:
        raise DomainError("the state has {0} qubits, the generator {1}".format(rho0.n_qubits, generator.n_qubits))

    start_time = time.time()
    if verbose:
        print("Starting integration: {0}, {1} grid points, step {2}".format(generator, times.size, step))
        pbar = tqdm.tqdm(total=times.size - 1)

    rho = rho0.entries.copy()
    states = [DensityMatrix(rho.copy(), validate=False)]
    for t_start, t_end in zip(times[:-1], times[1:]):
        substeps = max(1, int(math.ceil((t_end - t_start) / step - 1e-9)))
        h = (t_end - t_start) / substeps
        t = t_start
        for _ in range(substeps):
            full = _rk4_step(generator, t, rho, h)
            if local_tolerance is not None:
                halves = _rk4_step(generator, t + h / 2, _rk4_step(generator, t, rho, h / 2), h / 2)
                error = numpy.max(numpy.abs(full - halves))
                if error > local_tolerance:
                    raise StepSizeError(
                        "local error {0} at t = {1} exceeds {2}; reduce the step below {3}".format(
                            error, t, local_tolerance, h)
                    )
            rho = full
            t += h
        # back to the laboratory frame at the grid time
        states.append(DensityMatrix(rho * numpy.exp(1j * generator.transition_frequencies * (t_end - times[0])),
                                    validate=False))
        if verbose:
            pbar.update()

    if verbose:
        pbar.close()
        print("Integration took {0} seconds".format(time.time() - start_time))
    return states


def offdiagonal_trace(states: Sequence[DensityMatrix], bra: str, ket: str) -> numpy.ndarray:
    """Time series of :math:`\\rho_{bra,ket}` along integrated states."""
    if not states:
        return numpy.empty(0, dtype=complex)
    n_qubits = states[0].n_qubits
    m, n = basis_index(bra, n_qubits), basis_index(ket, n_qubits)
    return numpy.array([state.entries[m, n] for state in states])


def closed_form_coherence(law: DephasingLaw, weight: float, t, initial: float = 0.5):
    """Modulus of a coherence decaying as :math:`\\rho(0)\\,e^{-A\\Gamma(t)}`, where ``weight`` is
    :math:`A`, e.g. :py:func:`~metrosim.dephasing.partial_corr_factor` for the auxiliary scheme."""
    return initial * numpy.exp(-weight * numpy.asarray(decoherence_factor(law, t)))


def max_relative_error(values, reference) -> float:
    values = numpy.asarray(values)
    reference = numpy.asarray(reference)
    return float(numpy.max(numpy.abs(values - reference) / numpy.abs(reference)))
