"""Exception hierarchy shared by every stage of the simulator."""


class LDVError(Exception):
    """Base class for all simulator errors."""


class InvalidProfileError(LDVError, ValueError):
    pass


class SamplingViolationError(LDVError, ValueError):
    pass


class InvalidConfigError(LDVError, ValueError):
    pass


class InvalidInputError(LDVError, ValueError):
    pass


class DesignFailureError(LDVError, RuntimeError):
    pass


class ScenarioError(LDVError):
    """A module error re-raised with the name of the scenario that hit it."""

    def __init__(self, scenario: str, cause: Exception):
        super().__init__(f"scenario {scenario!r}: {cause}")
        self.scenario = scenario
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.scenario, self.cause)


class ReportIOError(LDVError, OSError):
    def __init__(self, path, cause: Exception):
        super().__init__(f"cannot write {path}: {cause}")
        self.path = path
        self.cause = cause

    def __reduce__(self):
        return type(self), (self.path, self.cause)
