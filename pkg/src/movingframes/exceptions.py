"""Exception hierarchy shared by all modules."""


class MovingFramesError(Exception):
    """Base class for every error raised by the package."""


class FrameSuperluminal(MovingFramesError, ValueError):
    """A frame velocity with magnitude >= c was supplied."""


class AmbiguousOrdering(MovingFramesError):
    """Two events are simultaneous (within tolerance) in some measuring frame."""


class ConfigInvalid(MovingFramesError, ValueError):
    pass


class MissingModelParams(ConfigInvalid):
    """A FINITE_SPEED model was requested without preferred frame or v_qi."""


class FitDegenerate(MovingFramesError):
    """Fringe fit impossible: too few bins, phase span below one period, or rank deficiency."""


class ParseError(MovingFramesError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(ConfigInvalid):
    """Collects every violation found while validating a configuration.

    ``errors`` is a list of ``(field_path, message)`` tuples.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.errors))
