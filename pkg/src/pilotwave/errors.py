"""Exception types shared across the package."""


class PilotwaveError(Exception):
    """Base class for errors raised by this package."""


class PropagationDivergedError(PilotwaveError):
    """Propagation produced a non-finite amplitude."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"propagation diverged at step {step}")


class StabilityBoundError(PilotwaveError):
    """A requested time step violates an explicit stability bound."""


class NodeCollisionError(PilotwaveError):
    """A computation entered a node neighbourhood where it is undefined."""


class EnvelopeAcceptanceError(PilotwaveError):
    """Rejection sampling acceptance rate dropped below the practical floor."""


class NotAsymptoticError(PilotwaveError, ValueError):
    """An input was expected to be in an asymptotic regime and is not.

    Raised by the Gaussian complexion limit when an expected occupation
    is too small, and by the collision-time check when higher map modes
    still carry weight; the message says what to do instead.
    """


class IllConditionedFitError(PilotwaveError, ValueError):
    """A least-squares basis fit is too ill-conditioned to trust."""


class ConfigError(PilotwaveError, ValueError):
    """A scenario configuration is missing or malformed.

    The message always names the offending field and, when the file
    contains it, the line it sits on.  ``field``, ``line`` and ``path``
    are attached as attributes when the raiser knows them.
    """

    def __init__(self, message, field=None, line=None, path=None):
        self.field = field
        self.line = line
        self.path = path
        super().__init__(message)
