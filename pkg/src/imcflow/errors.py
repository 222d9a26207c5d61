"""Exception types shared across the package."""


class FlowError(Exception):
    """Base class for every error raised by imcflow."""


class NotPositiveDefinite(FlowError):
    def __init__(self, point, message="metric is not positive definite"):
        self.point = tuple(int(p) for p in point)
        super().__init__(f"{message} at grid point {self.point}")


class DegenerateMetric(FlowError):
    pass


class PositivityLost(FlowError):
    def __init__(self, t, point):
        self.t = t
        self.point = tuple(int(p) for p in point)
        super().__init__(f"g lost positive-definiteness at t={t:.6g}, point {self.point}")


class Instability(FlowError):
    def __init__(self, t, what="state"):
        self.t = t
        super().__init__(f"non-finite values in {what} at t={t:.6g}")


class MapLeftDomain(FlowError):
    def __init__(self, point, excursion):
        self.point = tuple(int(p) for p in point)
        self.excursion = float(excursion)
        super().__init__(
            f"diffeomorphism left the patch at grid point {self.point} "
            f"(excursion {self.excursion:.3g} cells)"
        )


class NonpositiveH(FlowError):
    def __init__(self, point, value):
        self.point = tuple(int(p) for p in point)
        self.value = float(value)
        super().__init__(f"mean curvature H={value:.3g} <= 0 at grid point {self.point}")


class ClosedIntegralOnPatch(FlowError):
    """Raised when a closed-manifold integral is requested on a bounded patch."""


class EnvelopeViolation(FlowError):
    def __init__(self, t, which, margin):
        self.t = t
        self.which = which
        self.margin = margin
        super().__init__(f"envelope '{which}' violated at t={t:.6g} (margin {margin:.3e})")


class ZeroSecondFundamentalForm(FlowError):
    pass


class OutsideChart(FlowError):
    pass


class InsufficientLevels(FlowError):
    pass


class ParseError(FlowError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}")


class ValidationError(FlowError):
    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class ScenarioError(FlowError):
    """Aggregate of every problem found in a scenario document."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(str(e) for e in self.errors))


class CheckpointError(FlowError):
    pass
