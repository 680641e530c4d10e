"""Exception hierarchy shared by all fieldseg modules."""


class FieldsegError(Exception):
    """Base class for all errors raised by fieldseg."""


class DataError(FieldsegError):
    """Input data is missing, malformed, or inconsistent."""


class InvariantError(FieldsegError):
    """A domain-type invariant was violated."""


class BadMagicError(DataError):
    """File does not start with the FBT1 magic bytes."""


class TruncatedFileError(DataError):
    """File ends before the sample buffer promised by its header."""


class HeaderOverflowError(DataError):
    """A header field does not fit in its fixed-width encoding."""


class MissingPredictionsError(DataError):
    """One or more prediction files required for evaluation are absent."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(
            "missing prediction files: " + ", ".join(str(p) for p in self.missing)
        )
