"""Exception hierarchy shared by the pipeline stages."""


class AmigoError(Exception):
    """Base class for every error raised by this package."""


class InvalidMesh(AmigoError):
    pass


class ParseError(InvalidMesh):
    pass


class NotClosed(InvalidMesh):
    pass


class NonManifold(InvalidMesh):
    pass


class DegenerateFace(InvalidMesh):
    pass


class DegenerateStar(AmigoError):
    pass


class NotConverged(AmigoError):
    def __init__(self, message, remaining=0):
        super().__init__(message)
        self.remaining = remaining


class SolverFailure(AmigoError):
    pass


class NoPath(AmigoError):
    pass


class EmptyRow(AmigoError):
    pass


class EmptyJointRow(AmigoError):
    pass


class NotCoupled(AmigoError):
    pass


class PatternSyntaxError(AmigoError):
    pass


class StitchCountMismatch(AmigoError):
    def __init__(self, round_number, expected, actual):
        super().__init__(
            f"round {round_number}: expected {expected} bases consumed, got {actual}"
        )
        self.round_number = round_number
        self.expected = expected
        self.actual = actual


class Diverged(AmigoError):
    pass
