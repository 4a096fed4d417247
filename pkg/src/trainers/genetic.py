"""
Genetic algorithm over flat coordinate chromosomes.

A genome lists every soma coordinate (layers 1..L-1), every axon coordinate
(layers 0..L-2), then the gammas and the betas of every non-input layer.
Spatial genes always come first, so `spatial_length` separates the genes
clamped to the unit cube from the unbounded normalization genes.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.data.datasets import Dataset, require_all_classes
from src.evaluation.metrics import bacc_score
from src.network.forward import forward, predict_from_probabilities
from src.network.geometry import NetworkGeometry, init_geometry, norm_parameter_count, parameter_count
from src.network.loss import ClassWeights, class_weights_from_counts, l1_l2_penalty, weighted_cross_entropy
from src.schemas.configs import GAConfig, NetworkSpec
from src.schemas.records import CurveRow
from src.schemas.types import InitScheme, Optimizer
from src.utils.errors import InvalidArgumentError, InvalidConfigurationError
from src.utils.logger import Logger


class GenomeLayout:
    """Block structure of the genome of one NetworkSpec."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        widths = spec.layer_widths
        last = len(widths) - 1
        self.blocks = (
            [('somas', layer, (widths[layer], 3)) for layer in range(1, last + 1)]
            + [('axons', layer, (widths[layer], 3)) for layer in range(0, last)]
            + [('gammas', layer, (widths[layer],)) for layer in range(1, last + 1)]
            + [('betas', layer, (widths[layer],)) for layer in range(1, last + 1)]
        )
        self.spatial_length = parameter_count(spec)
        self.length = self.spatial_length + norm_parameter_count(spec)

    def encode(self, geom: NetworkGeometry) -> np.ndarray:
        if geom.spec != self.spec:
            raise InvalidArgumentError('Geometry spec does not match the genome layout')
        return np.concatenate([np.ravel(getattr(geom, kind)[layer]) for kind, layer, _ in self.blocks])

    def decode(self, genome) -> NetworkGeometry:
        genome = np.asarray(genome, dtype=float)
        if genome.ndim != 1 or genome.size != self.length:
            raise InvalidArgumentError(f'Genome should have {self.length} genes, got {genome.size}')
        parts = {kind: [None] * self.spec.layer_count for kind in ('somas', 'axons', 'gammas', 'betas')}
        offset = 0
        for kind, layer, shape in self.blocks:
            size = int(np.prod(shape))
            parts[kind][layer] = genome[offset:offset + size].reshape(shape)
            offset += size
        return NetworkGeometry(self.spec, tuple(parts['somas']), tuple(parts['axons']), tuple(parts['gammas']), tuple(parts['betas']))


def encode(geom: NetworkGeometry) -> np.ndarray:
    return GenomeLayout(geom.spec).encode(geom)


def decode(genome, spec: NetworkSpec) -> NetworkGeometry:
    return GenomeLayout(spec).decode(genome)


def geometry_fitness(geom: NetworkGeometry, features, labels, class_weights: ClassWeights) -> float:
    p, _ = forward(geom, features)
    return weighted_cross_entropy(p, labels, class_weights) + l1_l2_penalty(geom, geom.spec.l1, geom.spec.l2)


def fitness(genome, spec: NetworkSpec, features, labels, class_weights: ClassWeights) -> float:
    """Weighted cross-entropy on the batch plus the weight penalties; lower is better."""
    return geometry_fitness(decode(genome, spec), features, labels, class_weights)


def tournament_select(population, fitnesses, k: int, rng: np.random.Generator) -> int:
    """
    Index of the fittest of k distinct uniformly drawn individuals; ties go to the lowest index.
    """
    size = len(population)
    if not 1 <= k <= size:
        raise InvalidArgumentError(f'Tournament size {k} should lie in [1, {size}]')
    candidates = rng.choice(size, size=k, replace=False)
    return int(min(candidates, key=lambda index: (fitnesses[index], index)))


def crossover(first, second, rng: np.random.Generator, probability: float = 0.5) -> np.ndarray:
    """Uniform crossover: each gene comes from `first` with `probability`, else from `second`."""
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    if first.shape != second.shape:
        raise InvalidArgumentError(f'Parents have different lengths ({first.size} vs {second.size})')
    return np.where(rng.random(first.size) < probability, first, second)


def mutate(genome, rate: float, scale: float, rng: np.random.Generator, spatial_length: int = 0) -> np.ndarray:
    """
    Add N(0, scale^2) noise to each gene with probability `rate`.

    Mutated genes among the first `spatial_length` are clamped to [0, 1]; the others are left unbounded.
    """
    if not 0.0 <= rate <= 1.0:
        raise InvalidArgumentError(f'Mutation rate should lie in [0, 1], got {rate}')
    if not scale > 0:
        raise InvalidArgumentError(f'Mutation scale should be positive, got {scale}')
    child = np.array(genome, dtype=float)
    mask = rng.random(child.size) < rate
    if mask.any():
        child[mask] += rng.normal(0.0, scale, int(mask.sum()))
        spatial = mask.copy()
        spatial[spatial_length:] = False
        child[spatial] = np.clip(child[spatial], 0.0, 1.0)
    return child


def auto_population_size(genome_length: int) -> int:
    if genome_length <= 0:
        raise InvalidArgumentError('Genome length should be positive')
    return max(50, int(round(2.0 * np.sqrt(genome_length))))


@dataclass
class GAResult:
    geometry: NetworkGeometry
    fitness: float
    history: List[CurveRow]
    population_size: int
    evaluations: int


def _resolve_population(config: GAConfig, layout: GenomeLayout) -> int:
    size = auto_population_size(layout.length) if config.population == 'AUTO' else int(config.population)
    if config.tournament_size > size:
        raise InvalidConfigurationError(f'tournament_size {config.tournament_size} exceeds the population of {size}')
    if config.elitism_count >= size:
        raise InvalidConfigurationError(f'elitism_count {config.elitism_count} should be smaller than the population of {size}')
    return size


def _initial_population(spec: NetworkSpec, layout: GenomeLayout, config: GAConfig, seeds) -> List[np.ndarray]:
    population = []
    for index, seed in enumerate(seeds):
        init_seed, diversify_seed = seed.spawn(2)
        genome = layout.encode(init_geometry(spec, rng_seed=int(init_seed.generate_state(1)[0]), trainer=Optimizer.GA))
        if spec.init == InitScheme.SINGULARITY and index > 0:
            rng = np.random.default_rng(diversify_seed)
            spatial = layout.spatial_length
            genome[:spatial] = np.clip(genome[:spatial] + rng.normal(0.0, config.mutation_scale, spatial), 0.0, 1.0)
        population.append(genome)
    return population


def train_ga(spec: NetworkSpec, train: Dataset, config: GAConfig, test: Optional[Dataset] = None,
             class_weights: Optional[ClassWeights] = None) -> GAResult:
    """
    Evolve a population of geometries and return the best individual ever evaluated.

    Each individual is initialized from its own seed spawned from `config.rng_seed`; under
    Singularity initialization every individual but the first gets all its spatial genes
    perturbed once so the population is not made of clones. Every generation keeps the
    `elitism_count` fittest genomes unchanged and fills the rest by tournament selection,
    uniform crossover and mutation. Fitness is evaluated on the full training split.

    Args:
        spec (NetworkSpec): Architecture.
        train (Dataset): Standardized training split.
        config (GAConfig): Hyperparameters.
        test (Dataset | None): Held-out split for the per-generation test BAcc.
        class_weights (ClassWeights | None): Defaults to inverse class frequency of `train`.

    Returns:
        GAResult: Best geometry, its fitness and one history row per generation (0 = initial population).
    """
    layout = GenomeLayout(spec)
    size = _resolve_population(config, layout)
    if train.n_features != spec.input_dim or train.class_count != spec.output_dim:
        raise InvalidConfigurationError('Dataset dimensions do not match the network spec')
    if class_weights is None:
        class_weights = class_weights_from_counts(require_all_classes(train))

    context = f'[train] [GA] [seed={config.rng_seed}]'
    Logger().log('INFO', f'{context} population {size}, {config.generations} generations, genome length {layout.length}')

    seeds = np.random.SeedSequence(config.rng_seed).spawn(size + 1)
    rng = np.random.default_rng(seeds[-1])

    def objective(genome) -> float:
        value = fitness(genome, spec, train.features, train.labels, class_weights)
        return value if np.isfinite(value) else np.inf

    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None

    def evaluate(genomes) -> List[float]:
        if pool is None:
            return [objective(genome) for genome in genomes]
        return list(pool.map(objective, genomes))

    try:
        population = _initial_population(spec, layout, config, seeds[:-1])
        fitnesses = np.asarray(evaluate(population))
        evaluations = size

        best_index = int(np.lexsort((np.arange(size), fitnesses))[0])
        best_genome, best_fitness = population[best_index].copy(), float(fitnesses[best_index])
        scores = _scores(layout.decode(best_genome), train, test)
        history = [_history_row(0, best_fitness, fitnesses, scores)]

        for generation in range(1, config.generations + 1):
            ranked = np.lexsort((np.arange(size), fitnesses))
            elites = ranked[:config.elitism_count]
            offspring = [population[index].copy() for index in elites]
            while len(offspring) < size:
                first = tournament_select(population, fitnesses, config.tournament_size, rng)
                second = tournament_select(population, fitnesses, config.tournament_size, rng)
                child = crossover(population[first], population[second], rng, config.crossover_prob)
                offspring.append(mutate(child, config.mutation_rate, config.mutation_scale, rng, layout.spatial_length))

            fitnesses = np.concatenate([fitnesses[elites], evaluate(offspring[config.elitism_count:])])
            population = offspring
            evaluations += size - config.elitism_count

            generation_best = int(np.lexsort((np.arange(size), fitnesses))[0])
            if fitnesses[generation_best] < best_fitness:
                best_genome, best_fitness = population[generation_best].copy(), float(fitnesses[generation_best])
                scores = _scores(layout.decode(best_genome), train, test)
            history.append(_history_row(generation, best_fitness, fitnesses, scores))
            Logger().log('DEBUG', f'{context} generation {generation} best fitness {best_fitness:.6f} train BAcc {scores[0]:.4f}')
    finally:
        if pool is not None:
            pool.shutdown()

    Logger().log('INFO', f'{context} finished, best fitness {best_fitness:.6f} after {evaluations} evaluations')
    return GAResult(layout.decode(best_genome), best_fitness, history, size, evaluations)


def _scores(geom: NetworkGeometry, train: Dataset, test: Optional[Dataset]):
    train_bacc = bacc_score(train.labels, predict_from_probabilities(forward(geom, train.features)[0]), train.class_count)
    if test is None:
        return train_bacc, None
    return train_bacc, bacc_score(test.labels, predict_from_probabilities(forward(geom, test.features)[0]), test.class_count)


def _history_row(generation: int, best_fitness: float, fitnesses: np.ndarray, scores) -> CurveRow:
    finite = fitnesses[np.isfinite(fitnesses)]
    return CurveRow(
        epoch=generation,
        loss=best_fitness,
        mean_loss=float(finite.mean()) if finite.size else float('inf'),
        train_bacc=scores[0],
        test_bacc=scores[1],
    )
