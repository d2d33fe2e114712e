"""Exception hierarchy.

Every error carries the process exit code the CLI should use for it:
2 for configuration problems, 3 for data problems, 4 for numeric failures.
"""


class AuditODError(Exception):
    exit_code = 1


class ConfigError(AuditODError):
    exit_code = 2


class DataError(AuditODError):
    exit_code = 3


class NumericError(AuditODError):
    exit_code = 4


class MissingHeader(DataError):
    def __init__(self, name):
        super().__init__(f"column {name!r} not found in CSV header")
        self.name = name


class EmptyTable(DataError):
    pass


class AllMissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"column {name!r} has no non-missing values")
        self.name = name


class NonFiniteInput(DataError):
    pass


class DuplicateRecordId(DataError):
    def __init__(self, duplicates):
        shown = ", ".join(sorted(duplicates)[:10])
        super().__init__(f"duplicate record ids: {shown}")
        self.duplicates = sorted(duplicates)


class UnknownRecordId(DataError):
    def __init__(self, record_id):
        super().__init__(f"record id {record_id!r} not present in the input")
        self.record_id = record_id


class EmptyLabels(DataError):
    pass


class DegenerateLabels(DataError):
    pass


class EigenFailure(NumericError):
    pass


class DegenerateCovariance(NumericError):
    pass


class NonFiniteLoss(NumericError):
    pass
