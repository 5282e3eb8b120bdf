class DomainError(ValueError):
    """Raised when an input falls outside the domain of an operation."""


class SamplerError(RuntimeError):
    """Raised when the MCMC engine hits a non-finite density or a runaway slice."""

    def __init__(self, message, state=None):
        if state is not None:
            message = f"{message}; state dump: {state!r}"
        super().__init__(message)
        self.state = state
