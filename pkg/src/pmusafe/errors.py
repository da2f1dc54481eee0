"""Exception types.

Every error carries a short ``kind`` string (e.g. ``"not-psd"``) so callers
and the CLI can branch on the failure without parsing messages.
"""


class PMUError(Exception):
    kind = "error"

    def __init__(self, message, kind=None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind


class InputSetError(PMUError, ValueError):
    kind = "invalid-inputs"


class ModelError(PMUError, ValueError):
    kind = "model-error"


class DomainError(ModelError):
    kind = "domain-error"


class SingularityError(ModelError):
    kind = "singularity"


class PropagationError(PMUError):
    kind = "propagation-error"


class SafetyError(PMUError, ValueError):
    kind = "safety-error"


class StreamError(PMUError, ValueError):
    kind = "malformed-record"


class ConfigError(PMUError, ValueError):
    kind = "config-invalid"
