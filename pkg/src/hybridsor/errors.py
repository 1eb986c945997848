"""Exception hierarchy shared by every hybridsor module."""


class HybridSorError(Exception):
    """Base class for all errors raised by hybridsor."""


class InvalidArgumentError(HybridSorError, ValueError):
    """An argument violates a documented precondition."""


class SingularBlockError(HybridSorError, ArithmeticError):
    """A diagonal block (or a block handed to a backend) is singular."""

    def __init__(self, message, block_index=None):
        super().__init__(message)
        self.block_index = block_index


class NumericalFailureError(HybridSorError, ArithmeticError):
    """An iterative numerical procedure did not converge.

    ``estimate`` carries the best value available when the procedure gave up.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DivergenceError(HybridSorError, ArithmeticError):
    """The block SOR iteration blew up; ``report`` holds the partial trace."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SweepError(HybridSorError):
    """A backend failed while solving one block of a sweep."""

    def __init__(self, message, block_index, diagnostic=None):
        super().__init__(message)
        self.block_index = block_index
        self.diagnostic = diagnostic


class CapacityError(HybridSorError):
    """A problem exceeds a hard size limit (e.g. brute-force enumeration)."""


class FormatError(HybridSorError, ValueError):
    """A file or document does not follow its documented format."""


class ConfigError(FormatError):
    """A run configuration failed to parse or validate.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class RemoteError(HybridSorError):
    """Base class for failures talking to a remote sampler."""


class RemoteConnectionError(RemoteError):
    """The remote endpoint could not be reached."""


class RemoteTimeoutError(RemoteError):
    """The remote endpoint did not answer within the timeout."""


class ProtocolError(RemoteError):
    """The remote endpoint answered with a non-200 status."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class MalformedResponseError(RemoteError):
    """The remote response body does not follow the wire format."""


class EnergyInconsistencyError(RemoteError):
    """A reported sample energy disagrees with local evaluation."""
