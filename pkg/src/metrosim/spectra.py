"""Power spectral densities of the engineered noise.

A finite sum of tones has a line spectrum. Combs are stored by their positive
frequencies only; every weight stands for the pair of lines at :math:`\\pm\\omega_j`."""

import math
from typing import NamedTuple

import numpy

from .errors import DomainError, PolicyError, check_option
from .simulation import NoiseSpec

pairs = ["S11", "S12", "S21", "S22"]


class PSDComb(NamedTuple):
    frequencies: numpy.ndarray
    weights: numpy.ndarray


def _line_weights(spec: NoiseSpec) -> numpy.ndarray:
    return math.pi * spec.omega0**2 / 2 * spec.tones**2 * spec.shape_values**2


def psd_components(spec: NoiseSpec, pair: str, allow_uncorrelated: bool = False) -> PSDComb:
    """Auto and cross spectra of the working (1) and auxiliary (2) noises,

    .. math:: S_{ab}(\\omega) = \\frac{\\pi b_a b_b \\omega_0^2}{2} \\sum_j j^2 F(j)^2
              [\\delta(\\omega - \\omega_j) + \\delta(\\omega + \\omega_j)]

    Cross spectra only exist when the working and auxiliary noises share their phases.

    :param spec: the engineered noise
    :param pair: one of `'S11'`, `'S12'`, `'S21'` and `'S22'`
    :param allow_uncorrelated: return an empty comb instead of failing for a cross spectrum
                               of independent noises
    """
    check_option("pair", pair, pairs)
    if pair in ("S12", "S21") and spec.phase_policy != "working_shared_aux_matched":
        if allow_uncorrelated:
            return PSDComb(numpy.empty(0), numpy.empty(0))
        raise PolicyError(
            "{0} vanishes under the {1!r} phase policy; pass allow_uncorrelated=True "
            "for an empty comb".format(pair, spec.phase_policy)
        )
    amplitude = {"S11": spec.b1**2, "S12": spec.b1 * spec.b2,
                 "S21": spec.b1 * spec.b2, "S22": spec.b2**2}[pair]
    return PSDComb(spec.frequencies, amplitude * _line_weights(spec))


def total_psd(spec: NoiseSpec, N: int) -> PSDComb:
    """Spectrum of the relative phase velocity :math:`\\dot\\phi_B`,

    .. math:: S(\\omega) = \\frac{1}{4}[c_w S_{11} - N S_{12} - N S_{21} + S_{22}]

    with :math:`c_w = N^2` when the working qubits share their noise and :math:`N` when they
    do not. With matched phases and :math:`b_2 = Nb_1` every line vanishes."""
    if N < 1:
        raise DomainError("N must be at least 1, {0} was passed".format(N))
    if spec.phase_policy == "working_shared_aux_matched":
        amplitude = (N * spec.b1 - spec.b2)**2
    elif spec.phase_policy == "shared_all_qubits":
        amplitude = (N * spec.b1)**2 + spec.b2**2
    else:
        amplitude = N * spec.b1**2 + spec.b2**2
    return PSDComb(spec.frequencies, amplitude * _line_weights(spec) / 4)


def chi_from_psd(comb: PSDComb, t):
    """Decoherence function of a line spectrum,

    .. math:: \\chi(t) = \\frac{4}{2\\pi}\\int_{-\\infty}^{\\infty}\\frac{d\\omega}{\\omega^2}
              S(\\omega)\\sin^2\\frac{\\omega t}{2}
              = \\frac{4}{2\\pi}\\sum_j \\frac{2 w_j}{\\omega_j^2}\\sin^2\\frac{\\omega_j t}{2}
    """
    times = numpy.asarray(t, dtype=float)
    if numpy.any(times < 0):
        raise DomainError("time must be non-negative, {0} was passed".format(t))
    if comb.frequencies.size == 0:
        values = numpy.zeros_like(times)
    else:
        w = comb.frequencies
        values = numpy.sin(numpy.multiply.outer(times, w) / 2)**2 @ (2 * comb.weights / w**2)
        values = 4 / (2 * math.pi) * values
    return values.item() if values.ndim == 0 else values
