"""Exception hierarchy. Domain errors map to CLI exit status 1."""


class BenchError(Exception):
    """Base class for all domain errors raised by the package."""


class OutOfRange(BenchError):
    def __init__(self, axis: str, value: float, lo: float, hi: float):
        self.axis = axis
        self.value = value
        self.lo = lo
        self.hi = hi
        super().__init__(f"{axis}: {value:.6g} outside [{lo:.6g}, {hi:.6g}]")


class Infeasible(BenchError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NotHomed(BenchError):
    pass


class BehindCamera(BenchError):
    pass


class NearParallelRays(BenchError):
    pass


class DegenerateConfiguration(BenchError):
    pass


class MarkersNotVisible(BenchError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("markers not visible: " + ", ".join(self.missing))


class NonMonotone(BenchError):
    def __init__(self, axis: str, detail: str = ""):
        self.axis = axis
        super().__init__(f"non-monotone stations on {axis} {detail}".strip())


class InsufficientConfigurations(BenchError):
    pass


class MissingAxis(BenchError):
    def __init__(self, axes):
        self.axes = list(axes)
        super().__init__("missing axes: " + ", ".join(self.axes))


class MissingDirection(BenchError):
    pass


class ProtocolError(BenchError):
    """Emulator answered with ERR, or the transport broke mid-exchange."""
