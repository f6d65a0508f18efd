"""Exception types shared across the package."""


class PdmmError(Exception):
    """Base class for all library errors."""


class InvalidParameter(PdmmError):
    """A scalar argument is outside its admissible range."""


class ConditionViolated(PdmmError):
    """A step-length condition failed for the requested parameters."""

    def __init__(self, condition, message=""):
        self.condition = condition
        super().__init__(message or f"step-length condition violated: {condition}")


class PreconditionViolated(PdmmError):
    """A planner or builder precondition does not hold for the given data."""


class Degenerate(PdmmError):
    """The requested construction collapses (e.g. zero mismatch makes the
    auto planner's modulus fraction vanish); use a different planner."""


class KappaOutOfRange(PdmmError):
    """kappa exceeds the admissible range of the simple planner."""

    def __init__(self, binding_bound, bound_value, message=""):
        self.binding_bound = binding_bound
        self.bound_value = bound_value
        super().__init__(
            message
            or f"kappa exceeds bound {binding_bound} = {bound_value:.6g}"
        )


class SingularSystem(PdmmError):
    """The linear system defining a fixed point is numerically singular."""


class SolveFailed(PdmmError):
    """A dense solve produced a residual above tolerance."""


class InsufficientData(PdmmError):
    """Not enough usable samples for the requested estimate."""


class NonFiniteIterate(PdmmError):
    """An iterate contains NaN or Inf; carries the partial trace if any."""

    def __init__(self, message="iterate contains NaN/Inf", trace=None):
        self.trace = trace
        super().__init__(message)


class GeometryError(PdmmError):
    """Degenerate projection geometry."""


class BehaviorMismatch(PdmmError):
    """A scenario did not exhibit its documented behavior (library bug signal)."""


class Unavailable(PdmmError):
    """The scenario lacks the requested optional component."""
