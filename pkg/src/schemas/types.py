from enum import Enum
from pydantic import AfterValidator
from typing import Annotated, List, Union

from src.schemas.validators import validate_widths, validate_population, validate_probability, validate_non_negative


class _CaseInsensitiveEnum(str, Enum):

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value.lower() == value.strip().lower():
                    return member
        return None


class MappingKind(_CaseInsensitiveEnum):
    GAUSSIAN = 'gaussian'
    INVERSE = 'inverse'


class ActivationKind(_CaseInsensitiveEnum):
    SIGMOID = 'sigmoid'
    TANH = 'tanh'
    RELU = 'relu'


class InitScheme(_CaseInsensitiveEnum):
    RANDOM = 'random'
    ONION = 'onion'
    SINGULARITY = 'singularity'


class Optimizer(_CaseInsensitiveEnum):
    GA = 'GA'
    GD = 'GD'


class DerivativeMode(_CaseInsensitiveEnum):
    EXACT = 'exact'
    LINEAR_SURROGATE = 'linear_surrogate'


class GroupNormBackward(_CaseInsensitiveEnum):
    DIAGONAL = 'diagonal'
    FULL = 'full'


class ClassWeighting(_CaseInsensitiveEnum):
    INVERSE_FREQUENCY = 'inverse_frequency'
    UNIFORM = 'uniform'


class RunStatus(_CaseInsensitiveEnum):
    OK = 'ok'
    DIVERGED = 'diverged'
    FAILED = 'failed'


WidthList = Annotated[List[int], AfterValidator(validate_widths)]

PopulationCount = Annotated[Union[int, str], AfterValidator(validate_population)]

Probability = Annotated[float, AfterValidator(validate_probability)]

NonNegativeFloat = Annotated[float, AfterValidator(validate_non_negative)]
