"""Exception hierarchy shared by every normlab module."""


class NormlabError(Exception):
    """Base class for errors raised by normlab."""


class InvalidArgument(NormlabError, ValueError):
    """An argument violates an operation's precondition."""


class DomainError(NormlabError, ValueError):
    """A point lies outside the domain of a step function or space."""


class ResourceBoundError(NormlabError):
    """A construction or enumeration would exceed its configured size bound."""


class InvalidSubspace(NormlabError, ValueError):
    """A basis is rank deficient or its Gram matrix is singular."""


class InvalidSamplingSet(NormlabError, ValueError):
    """A sampling set annihilates a nonzero vector of the subspace.

    ``witness`` holds the coefficient vector of such a vector.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InternalInconsistency(NormlabError, AssertionError):
    """A postcondition that the mathematics guarantees did not hold."""


class ConfigError(NormlabError):
    """Malformed experiment configuration."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
