"""Exception hierarchy shared by all modules."""


class WitnessError(Exception):
    """Base class for every error raised by this package."""

    #: pipeline stage that raised, filled in by :func:`run_witness`
    stage = None


class InvalidInputError(WitnessError, ValueError):
    """An argument is outside its documented domain (non-finite, negative, ...)."""


class TruncationError(WitnessError, ValueError):
    """The Fock truncation is too small for the requested state."""


class NormalizationError(WitnessError, ValueError):
    """A sampled distribution does not carry unit mass within tolerance."""


class ConfigurationError(WitnessError, ValueError):
    """Numerical configuration cannot deliver the promised accuracy."""


class PurityError(WitnessError, ValueError):
    """A pure-state-only criterion was requested for a mixed state."""


class SpecError(WitnessError, ValueError):
    """A state-spec or scan description could not be parsed.

    ``key`` names the offending entry.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
