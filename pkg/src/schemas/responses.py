from datetime import datetime
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field, field_validator

from src.schemas.records import ClassificationMetrics
from src.schemas.types import RunStatus


class ValidationErrorResponse(BaseModel):
    status: Optional[str] = Field('error', examples=['error'])
    details: List[Dict[str, str]] = Field(..., examples=[[]])
    error_type: Optional[str] = Field('ValidationError', examples=['ValidationError'])
    timestamp: Optional[str] = Field(default_factory=lambda: datetime.now().isoformat(), examples=['2021-01-01T00:00:00'])

    @field_validator('details', mode='before')
    def construct_details(cls, value):
        return [
            {'field': '.'.join(str(part) for part in error['loc']) or '__root__', 'message': error['msg']}
            for error in value
        ]


class CommandResponse(BaseModel):
    """
    Envelope of every command's stdout.

    Attributes:
        success (bool): Whether the command reached its goal.
        message (str): Human readable outcome.
        timestamp (str): ISO time of the response.
    """
    success: Optional[bool] = Field(True, examples=[True])
    message: Optional[str] = Field('Operation successful', examples=['Operation successful'])
    timestamp: Optional[str] = Field(default_factory=lambda: datetime.now().isoformat(), examples=['2021-01-01T00:00:00'])


class SuccessResponse(CommandResponse):
    data: Optional[Union[list, dict]] = Field({}, examples=[{}])


class BadResponse(CommandResponse):
    message: Optional[str] = Field('Operation failed', examples=['Operation failed'])
    success: Optional[bool] = Field(False, examples=[False])
    detail: Optional[Union[list, dict]] = Field({}, examples=[{}])


class RunSummary(BaseModel):
    """A run record without its curve rows, plus the parameter counts of the trained network."""
    run_id: str
    grid_index: int = 0
    dataset: str
    optimizer: str
    seed: int
    config: dict
    status: RunStatus
    train_metrics: Optional[ClassificationMetrics] = None
    test_metrics: Optional[ClassificationMetrics] = None
    duration_seconds: float = 0.0
    error: Optional[str] = None
    run_dir: Optional[str] = None
    epochs_recorded: int = 0
    parameter_count: Optional[int] = None
    classical_parameter_count: Optional[int] = None


class SweepSummary(BaseModel):
    runs: int
    status: Dict[str, int]
    run_ids: List[str]
    incomplete: List[str] = Field(default_factory=list)


class RunResponse(SuccessResponse):
    data: RunSummary


class SweepResponse(SuccessResponse):
    data: SweepSummary
