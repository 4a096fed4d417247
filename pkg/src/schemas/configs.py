import itertools
import json
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.schemas.types import (
    ActivationKind,
    ClassWeighting,
    DerivativeMode,
    GroupNormBackward,
    InitScheme,
    MappingKind,
    NonNegativeFloat,
    Optimizer,
    PopulationCount,
    Probability,
    WidthList,
)
from src.utils.errors import InvalidConfigurationError


class NetworkSpec(BaseModel):
    """
    Untrained architecture description of a distance-encoded network.

    Attributes:
        input_dim (int): Number of input features (input neurons, axon terminals only).
        hidden_widths (list[int]): Neurons per hidden layer, 1 to 3 layers.
        output_dim (int): Number of classes (output neurons, somas only), at least 2.
        mapping (MappingKind): Distance-to-weight mapping.
        sigma (float): Gaussian mapping width, in normalized space units.
        activation (ActivationKind): Activation applied to every non-input layer.
        init (InitScheme): Coordinate initialization scheme.
        groupnorm (bool): Whether GroupNorm is applied after the activation.
        group_size (int | None): GroupNorm group size m; None means one group per layer.
        weight_standardization (bool): Whether mapped weight rows are standardized.
        l1 (float), l2 (float): Penalties on the mapped weights.
    """
    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(..., gt=0)
    hidden_widths: WidthList
    output_dim: int = Field(..., ge=2)
    mapping: MappingKind = MappingKind.GAUSSIAN
    sigma: float = Field(0.5, gt=0)
    activation: ActivationKind = ActivationKind.SIGMOID
    init: InitScheme = InitScheme.RANDOM
    groupnorm: bool = True
    group_size: Optional[int] = Field(None, gt=0)
    weight_standardization: bool = False
    l1: NonNegativeFloat = 0.0
    l2: NonNegativeFloat = 0.0

    @model_validator(mode='after')
    def check_layer_compatibility(self):
        if self.groupnorm and self.group_size is not None:
            for width in self.hidden_widths:
                if width % self.group_size != 0:
                    raise ValueError(f'group_size {self.group_size} does not divide hidden width {width}')
        if self.weight_standardization and min(self.layer_widths[:-1]) < 2:
            raise ValueError('Weight standardization needs at least 2 neurons in every emitting layer')
        return self

    @property
    def layer_widths(self) -> List[int]:
        return [self.input_dim, *self.hidden_widths, self.output_dim]

    @property
    def layer_count(self) -> int:
        return len(self.hidden_widths) + 2

    def group_size_for(self, width: int) -> int:
        if self.group_size is None or width % self.group_size != 0:
            return width
        return self.group_size


class GAConfig(BaseModel):
    population: PopulationCount = 'AUTO'
    generations: int = Field(200, ge=0)
    tournament_size: int = Field(3, ge=2)
    mutation_rate: Probability = 0.05
    mutation_scale: float = Field(0.1, gt=0)
    crossover_prob: float = Field(0.5, ge=0.5, le=0.5)
    elitism_count: int = Field(1, ge=1)
    workers: int = Field(1, ge=1)
    rng_seed: int = 0

    @model_validator(mode='after')
    def check_population(self):
        if isinstance(self.population, int):
            if self.tournament_size > self.population:
                raise ValueError('tournament_size cannot exceed the population')
            if self.elitism_count >= self.population:
                raise ValueError('elitism_count must be smaller than the population')
        return self


class GDConfig(BaseModel):
    learning_rate: NonNegativeFloat = 0.1
    epochs: int = Field(250, ge=1)
    derivative_mode: Optional[DerivativeMode] = None
    groupnorm_backward: GroupNormBackward = GroupNormBackward.DIAGONAL
    batch_size: Optional[int] = Field(None, gt=0)
    divergence_threshold: float = Field(1e6, gt=0)
    rng_seed: int = 0

    def resolved_derivative_mode(self, mapping: MappingKind) -> DerivativeMode:
        if self.derivative_mode is not None:
            return self.derivative_mode
        if mapping == MappingKind.GAUSSIAN:
            return DerivativeMode.LINEAR_SURROGATE
        return DerivativeMode.EXACT


GD_ONLY_FIELDS = ('learning_rate', 'epochs', 'derivative_mode', 'groupnorm_backward', 'batch_size')
GA_ONLY_FIELDS = ('population', 'generations', 'tournament_size', 'mutation_rate', 'mutation_scale', 'elitism_count')
NON_SWEEPABLE_FIELDS = ('name', 'seeds', 'sweep')


class ExperimentConfig(BaseModel):
    """
    One experiment: dataset selection, optimizer, network and trainer hyperparameters, seeds and sweep axes.

    Sweep axes map a field name to the list of values to try; the Cartesian product of all axes,
    in declaration order, defines the grid. Options that only make sense for one optimizer
    are rejected when they are set to a non-default value for the other one.
    """
    name: str = 'experiment'

    dataset: str = 'two_moons'
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    label_column: str = 'label'
    class_names: Optional[List[str]] = None
    n_train: int = Field(800, gt=0)
    n_test: int = Field(200, gt=0)
    noise_std: NonNegativeFloat = 0.1
    data_seed: int = 0

    optimizer: Optimizer = Optimizer.GA

    hidden_widths: WidthList = [16, 16]
    mapping: MappingKind = MappingKind.GAUSSIAN
    sigma: float = Field(0.5, gt=0)
    activation: ActivationKind = ActivationKind.SIGMOID
    init: InitScheme = InitScheme.RANDOM
    groupnorm: bool = True
    group_size: Optional[int] = Field(None, gt=0)
    weight_standardization: bool = False
    l1: NonNegativeFloat = 0.0
    l2: NonNegativeFloat = 0.0
    class_weighting: ClassWeighting = ClassWeighting.INVERSE_FREQUENCY

    population: PopulationCount = 'AUTO'
    generations: int = Field(200, ge=0)
    tournament_size: int = Field(3, ge=2)
    mutation_rate: Probability = 0.05
    mutation_scale: float = Field(0.1, gt=0)
    elitism_count: int = Field(1, ge=1)

    learning_rate: NonNegativeFloat = 0.1
    epochs: int = Field(250, ge=1)
    derivative_mode: Optional[DerivativeMode] = None
    groupnorm_backward: GroupNormBackward = GroupNormBackward.DIAGONAL
    batch_size: Optional[int] = Field(None, gt=0)

    seeds: List[int] = [0]
    sweep: Dict[str, List[Any]] = {}

    @model_validator(mode='after')
    def check_optimizer_options(self):
        defaults = {name: field.default for name, field in type(self).model_fields.items()}
        if self.optimizer == Optimizer.GD:
            if self.init == InitScheme.SINGULARITY:
                raise ValueError('Singularity initialization is only applicable with the genetic algorithm')
            foreign = [name for name in GA_ONLY_FIELDS if getattr(self, name) != defaults[name]]
        else:
            foreign = [name for name in GD_ONLY_FIELDS if getattr(self, name) != defaults[name]]
        foreign += [name for name in self.sweep if name in (GA_ONLY_FIELDS if self.optimizer == Optimizer.GD else GD_ONLY_FIELDS)]
        if foreign:
            raise ValueError(f'Options {sorted(set(foreign))} do not apply to optimizer {self.optimizer.value}')
        return self

    @model_validator(mode='after')
    def check_dataset_and_axes(self):
        if self.dataset != 'two_moons' and (not self.train_path or not self.test_path):
            raise ValueError(f"Dataset '{self.dataset}' needs train_path and test_path")
        if len(self.seeds) == 0:
            raise ValueError('At least one seed is required')
        for axis, values in self.sweep.items():
            if axis not in type(self).model_fields or axis in NON_SWEEPABLE_FIELDS:
                raise ValueError(f"Unknown sweep axis '{axis}'")
            if not isinstance(values, list) or len(values) == 0:
                raise ValueError(f"Sweep axis '{axis}' should be a non-empty list")
        return self

    def grid_size(self) -> int:
        size = len(self.seeds)
        for values in self.sweep.values():
            size *= len(values)
        return size

    def grid(self) -> List['ExperimentConfig']:
        """
        Expand the sweep axes into validated grid points, in declaration order.

        Returns:
            list[ExperimentConfig]: One config per grid point, each without sweep axes.
        """
        base = self.model_dump(exclude={'sweep'}, exclude_unset=True)
        axes = list(self.sweep.items())
        points = []
        for values in itertools.product(*[axis_values for _, axis_values in axes]):
            update = {name: value for (name, _), value in zip(axes, values)}
            points.append(ExperimentConfig.model_validate({**base, **update}))
        return points

    def snapshot(self) -> dict:
        return self.model_dump(mode='json', exclude={'sweep', 'seeds'})

    def network_spec(self, input_dim: int, output_dim: int) -> NetworkSpec:
        return NetworkSpec(
            input_dim=input_dim,
            hidden_widths=self.hidden_widths,
            output_dim=output_dim,
            mapping=self.mapping,
            sigma=self.sigma,
            activation=self.activation,
            init=self.init,
            groupnorm=self.groupnorm,
            group_size=self.group_size,
            weight_standardization=self.weight_standardization,
            l1=self.l1,
            l2=self.l2,
        )

    def ga_config(self, seed: int, workers: int = 1) -> GAConfig:
        return GAConfig(
            population=self.population,
            generations=self.generations,
            tournament_size=self.tournament_size,
            mutation_rate=self.mutation_rate,
            mutation_scale=self.mutation_scale,
            elitism_count=self.elitism_count,
            workers=workers,
            rng_seed=seed,
        )

    def gd_config(self, seed: int) -> GDConfig:
        return GDConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            derivative_mode=self.derivative_mode,
            groupnorm_backward=self.groupnorm_backward,
            batch_size=self.batch_size,
            rng_seed=seed,
        )


def _decode_value(raw):
    if raw is None:
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_config_values(values: dict) -> dict:
    """
    Turn flat key/value pairs into ExperimentConfig input.

    Values are decoded as JSON when possible and kept as strings otherwise.
    Keys starting with 'sweep_' become sweep axes.
    """
    parsed = {}
    sweep = {}
    for key, raw in values.items():
        name = key.strip().lower()
        value = _decode_value(raw) if isinstance(raw, str) or raw is None else raw
        if name.startswith('sweep_'):
            sweep[name[len('sweep_'):]] = value
        else:
            parsed[name] = value
    if sweep:
        parsed['sweep'] = {**parsed.get('sweep', {}), **sweep}
    return parsed


def load_experiment_config(path: Optional[str] = None, base: Optional[dict] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """
    Load an experiment configuration.

    Args:
        path (str | None): A flat key=value config file (dotenv syntax).
        base (dict | None): Values applied first, e.g. a preset.
        overrides (dict | None): Values applied last, e.g. command line flags. None values are ignored.

    Returns:
        ExperimentConfig: The validated configuration.

    Raises:
        InvalidConfigurationError: If the config file does not exist.
        pydantic.ValidationError: If the merged values do not validate.
    """
    values = dict(base or {})
    if path is not None:
        file_values = dotenv_values(path)
        if not file_values:
            raise InvalidConfigurationError(f'Config file {path} is missing or empty')
        file_parsed = parse_config_values(file_values)
        if 'sweep' in file_parsed and 'sweep' in values:
            file_parsed['sweep'] = {**values['sweep'], **file_parsed['sweep']}
        values.update(file_parsed)
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    return ExperimentConfig.model_validate(values)
