"""Exceptions and warnings raised by :mod:`metrosim`.

Every error is a :py:class:`ValueError`, so callers that only care about
"bad input" can keep catching that."""

from typing import Dict, Optional


class MetrosimError(ValueError):
    """Base class for every error raised by the package."""


class DomainError(MetrosimError):
    """An argument lies outside the domain of the requested operation."""


class GridRangeError(DomainError):
    """A tabulated quantity was queried past the end of its grid."""


class SingularProbabilityError(MetrosimError):
    """The Fisher information is undefined because :math:`P \\in \\{0, 1\\}`."""


class DegenerateDetuningError(MetrosimError):
    """The signal frequency vanishes, so the measurement carries no information."""


class PairingError(MetrosimError):
    """Unentangled probes with auxiliaries need an even number of qubits."""


class PolicyError(MetrosimError):
    """The requested quantity does not exist under the chosen phase policy."""


class OptimizationError(MetrosimError):
    """A one-dimensional minimization could not locate a minimum."""


class StepSizeError(MetrosimError):
    """The integrator step is too coarse for the requested local tolerance."""


class BasisIndexError(MetrosimError, IndexError):
    """A basis string does not address an element of the density matrix."""


class ConfigError(MetrosimError):
    """A run configuration failed validation.

    :param message: summary of the failure
    :param fields: mapping from configuration field to the problem found in it
    """

    def __init__(self, message: str, fields: Optional[Dict[str, str]] = None):
        super().__init__(message)
        self.fields = dict(fields or {})

    def __str__(self):
        base = super().__str__()
        if not self.fields:
            return base
        details = "\n".join("  {0}: {1}".format(k, v) for k, v in sorted(self.fields.items()))
        return "{0}\n{1}".format(base, details)


class DegenerateDetuningWarning(UserWarning):
    """The probe is operated at zero detuning; the readout is insensitive to the parameter."""


class NoiseFloorWarning(UserWarning):
    """A fitted series was truncated because the signal fell below the statistical noise floor."""


def check_option(name: str, value: str, options) -> str:
    """Validates a string option against the accepted values.

    :param name: name of the argument, used in the error message
    :param value: the value that was passed
    :param options: the accepted values
    :returns: ``value`` unchanged
    """
    if value not in options:
        raise DomainError("{0} must be one of {1}, {2!r} was passed".format(name, list(options), value))
    return value
