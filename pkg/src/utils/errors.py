"""
Domain errors.

Every error is a ValueError so callers that only know about invalid values
(the CLI layer, pydantic validators) can still catch them uniformly.
"""


class InvalidArgumentError(ValueError):
    pass


class InvalidConfigurationError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


class UndefinedMetricError(ValueError):
    pass


class DataParseError(ValueError):
    """Raised when a dataset file cannot be parsed. Carries the offending row and column when known."""

    def __init__(self, message: str, row: int = None, column: str = None):
        super().__init__(message)
        self.row = row
        self.column = column


class DivergedError(ValueError):
    """
    Raised by the gradient trainer when the loss becomes non-finite or exceeds the divergence threshold.

    Attributes:
        epoch (int): Epoch at which the divergence was detected.
        loss (float): The offending loss value.
        history (list): Per-epoch rows recorded before the divergence.
    """

    def __init__(self, epoch: int, loss: float, history: list = None):
        super().__init__(f'Training diverged at epoch {epoch} (loss={loss})')
        self.epoch = epoch
        self.loss = loss
        self.history = history or []


class SweepTooLargeError(ValueError):
    def __init__(self, count: int, limit: int):
        super().__init__(f'Sweep grid has {count} runs, the limit is {limit}')
        self.count = count
        self.limit = limit


class RunFailedError(RuntimeError):
    """
    Raised when a run ends without status ok, or when sweep jobs never produced a record.

    Attributes:
        run_ids (list[str]): The runs concerned.
        records (list): Records that did complete, for sweeps.
    """

    def __init__(self, message: str, run_ids: list = None, records: list = None):
        super().__init__(message)
        self.run_ids = list(run_ids or [])
        self.records = list(records or [])


class DegenerateGeometryWarning(RuntimeWarning):
    """Emitted when coincident points make a distance-derived quantity undefined."""
