"""Exception types. Each carries a stable ``code`` used by the CLI diagnostics."""


class OptAssignError(Exception):
    code = "ERROR"


class InstanceError(OptAssignError, ValueError):
    code = "INSTANCE_INVALID"


class UnknownIdError(OptAssignError, KeyError):
    code = "UNKNOWN_ID"

    def __str__(self):
        return Exception.__str__(self)


class UnrankedPairError(OptAssignError, ValueError):
    code = "UNRANKED_PAIR"


class IncompletePreferencesError(OptAssignError, ValueError):
    code = "INCOMPLETE_PREFERENCES"


class MatchingError(OptAssignError, ValueError):
    code = "MATCHING_INVALID"


class ProfileShapeMismatch(OptAssignError, ValueError):
    code = "PROFILE_SHAPE_MISMATCH"


class ZTooLargeError(OptAssignError, ValueError):
    code = "Z_TOO_LARGE"


class WeightOverflowError(OptAssignError, OverflowError):
    code = "WEIGHT_OVERFLOW"


class InvalidWeightFnError(OptAssignError, ValueError):
    code = "INVALID_WEIGHT_FN"


class ShapeError(OptAssignError, ValueError):
    code = "SHAPE_ERROR"


class InstanceTooLargeError(OptAssignError, ValueError):
    code = "INSTANCE_TOO_LARGE"


class ConfigError(OptAssignError, ValueError):
    code = "CONFIG_INVALID"


class ReportIOError(OptAssignError, OSError):
    code = "IO_ERROR"
