class RegularityError(Exception):
    """Base class for every error raised by the correspondence toolkit."""

    exit_code = 2


class DataError(RegularityError):
    """Input data is malformed or inconsistent with the requested operation."""

    exit_code = 2


class UsageError(RegularityError):
    exit_code = 1


class ConfigError(RegularityError):
    exit_code = 1


class ParseError(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class AlignmentMismatch(DataError):
    def __init__(self, row_id, message: str = "alignment does not match tokens"):
        self.row_id = row_id
        super().__init__(f"row {row_id}: {message}")


class InvalidSegment(DataError):
    pass


class InvalidSample(DataError):
    pass


class UnknownDoculect(DataError):
    pass


class UnknownMember(DataError):
    pass


class EmptyCognateSet(DataError):
    pass


class InconsistentReport(DataError):
    pass


class TooSmall(DataError):
    pass


class InjectionImpossible(DataError):
    def __init__(self, cogid: int, message: str = "no alternative phone available"):
        self.cogid = cogid
        super().__init__(f"cognate set {cogid}: {message}")


class TrialSkipped(DataError):
    def __init__(self, run: int, message: str = "no eligible cognate set"):
        self.run = run
        super().__init__(f"run {run}: {message}")
