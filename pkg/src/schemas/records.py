import math
from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from src.schemas.types import RunStatus


class ClassificationMetrics(BaseModel):
    """
    Classification metrics of one model on one split.

    Attributes:
        bacc (float): Balanced accuracy.
        sensitivity (float): Sensitivity (macro one-vs-rest for more than 2 classes).
        specificity (float): Specificity (macro one-vs-rest for more than 2 classes).
        confusion (list[list[int]]): Confusion matrix, rows are true classes.
    """
    bacc: float
    sensitivity: float
    specificity: float
    confusion: List[List[int]]

    def is_finite(self) -> bool:
        return all(math.isfinite(value) for value in (self.bacc, self.sensitivity, self.specificity))


class CurveRow(BaseModel):
    """One epoch (GD) or generation (GA) of a training curve."""
    epoch: int
    phase: Optional[str] = None
    loss: float
    mean_loss: Optional[float] = None
    train_bacc: Optional[float] = None
    test_bacc: Optional[float] = None


class RunRecord(BaseModel):
    """
    The result of one (optimizer, configuration, seed) run.

    Attributes:
        run_id (str): Stable identifier derived from the config snapshot and seed.
        grid_index (int): Position of the configuration in its sweep grid.
        dataset (str), optimizer (str): Grouping keys for reports.
        seed (int): Seed of the run.
        config (dict): Full configuration snapshot, enough to replay the run.
        status (RunStatus): ok, diverged or failed.
        train_metrics, test_metrics (ClassificationMetrics | None): Final metrics, present when status is ok.
        curves (list[CurveRow]): Per-epoch or per-generation rows.
        duration_seconds (float): Wall-clock training time.
        error (str | None): Error message for failed and diverged runs.
        run_dir (str | None): Directory holding the run artifacts.
    """
    run_id: str
    grid_index: int = 0
    dataset: str
    optimizer: str
    seed: int
    config: dict
    status: RunStatus = RunStatus.OK
    train_metrics: Optional[ClassificationMetrics] = None
    test_metrics: Optional[ClassificationMetrics] = None
    curves: List[CurveRow] = Field(default_factory=list)
    duration_seconds: float = 0.0
    error: Optional[str] = None
    run_dir: Optional[str] = None

    @model_validator(mode='after')
    def check_status(self):
        if self.status == RunStatus.OK:
            if self.train_metrics is None or self.test_metrics is None:
                raise ValueError('A successful run needs train and test metrics')
            if not (self.train_metrics.is_finite() and self.test_metrics.is_finite()):
                raise ValueError('A successful run needs finite metrics')
        return self


class SweepStats(BaseModel):
    """Summary of the BAcc values of a group of runs; std uses the N-1 denominator (0 for one run)."""
    count: int
    mean: float
    median: float
    std: float
    min: float
    max: float
