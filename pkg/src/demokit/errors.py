"""Exception hierarchy shared by all demokit modules."""


class DemoKitError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DemoKitError):
    """Input data violates a documented precondition or invariant."""


class ParseError(DemoKitError):
    """A file could not be parsed. Carries the offending path and line."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class ConfigError(DemoKitError):
    """A configuration value is unusable (bad flag, bad config file entry)."""


class FramingError(DemoKitError):
    """A wire frame violates framing rules (e.g. oversized length prefix)."""


class ProtocolError(DemoKitError):
    """A wire message is structurally invalid or arrived out of sequence."""


class TransportError(DemoKitError):
    """The TCP transport failed (refused, reset, timed out)."""


class WorkspaceError(DemoKitError):
    """A task waypoint lies outside the reachable workspace of the arm."""


class JointLimitError(DemoKitError):
    """One or more joint values fall outside the arm's limits."""

    def __init__(self, joint_indexes, message=None):
        self.joint_indexes = tuple(int(i) for i in joint_indexes)
        if message is None:
            message = f"joint limit violated at joints {list(self.joint_indexes)}"
        super().__init__(message)
