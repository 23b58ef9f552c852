"""Exception hierarchy shared across the toolkit."""


class LosboError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(LosboError, ValueError):
    """An argument violates a documented precondition."""


class NumericalFailure(LosboError, RuntimeError):
    """A matrix factorization kept failing after jitter escalation."""


class SeedUnsafe(LosboError, RuntimeError):
    """No initial observation satisfies the safety condition."""


class ParseError(LosboError, ValueError):
    """A file or payload could not be parsed."""


class InvalidMap(LosboError, ValueError):
    """A loaded embedding map fails its orthonormality check."""


class ConflictError(LosboError, RuntimeError):
    """A session operation was attempted in the wrong protocol state."""


class NotFound(LosboError, KeyError):
    """Unknown session or resource id."""


class DegenerateDataWarning(UserWarning):
    """Data rank is lower than the requested latent dimension."""
