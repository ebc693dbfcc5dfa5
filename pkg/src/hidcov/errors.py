"""Exception hierarchy shared by every module."""


class HidcovError(ValueError):
    """Base class for all errors raised by hidcov."""


class InvalidInputError(HidcovError):
    """Input data is malformed (non-finite, wrong shape, bad parameter)."""


class SampleSizeError(HidcovError):
    """Too few observations for the requested estimator."""


class DegenerateStudentizerError(HidcovError):
    """The variance estimate used to studentize a statistic is not positive."""


class DegenerateBandwidthError(HidcovError):
    """All pairwise distances of a component are zero."""


class DataParseError(HidcovError):
    """A dataset file could not be parsed.

    ``row`` and ``column`` are 1-based positions in the file.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
