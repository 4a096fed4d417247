"""
Datasets: the two-moons generator, CSV ingestion and export, and train-fit standardization.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.datasets import make_moons
from sklearn.preprocessing import StandardScaler

from src.utils.errors import DataParseError, InvalidArgumentError, InvalidConfigurationError
from src.utils.logger import Logger

TWO_MOONS_CLASSES = ['upper_arc', 'lower_arc']
# Class-0 shares reproducing 406/394 (train) and 106/94 (test) at the default sizes.
TWO_MOONS_TRAIN_CLASS0_FRACTION = 406 / 800
TWO_MOONS_TEST_CLASS0_FRACTION = 106 / 200


@dataclass(frozen=True)
class Dataset:
    """
    A labelled feature matrix.

    Attributes:
        features (np.ndarray): (N, D) finite real features.
        labels (np.ndarray): (N,) integer labels in [0, M).
        class_names (list[str]): Name of every class, index = label.
        feature_names (list[str]): Name of every feature column.
        split (str): 'train' or 'test'.
        name (str): Dataset name.
    """
    features: np.ndarray
    labels: np.ndarray
    class_names: List[str]
    feature_names: List[str] = field(default_factory=list)
    split: str = 'train'
    name: str = ''

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        labels = np.array(self.labels, dtype=int).ravel()
        if features.ndim != 2 or features.shape[0] == 0:
            raise InvalidArgumentError(f'Features should be a non-empty (N, D) matrix, got shape {features.shape}')
        if labels.size != features.shape[0]:
            raise InvalidArgumentError(f'{labels.size} labels for {features.shape[0]} samples')
        if not np.all(np.isfinite(features)):
            raise InvalidArgumentError('Features should be finite')
        if len(self.class_names) < 2:
            raise InvalidArgumentError('A dataset needs at least 2 classes')
        if labels.min() < 0 or labels.max() >= len(self.class_names):
            raise InvalidArgumentError(f'Labels should lie in [0, {len(self.class_names)})')
        feature_names = list(self.feature_names) or [f'x{index}' for index in range(features.shape[1])]
        if len(feature_names) != features.shape[1]:
            raise InvalidArgumentError(f'{len(feature_names)} feature names for {features.shape[1]} features')
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'class_names', [str(name) for name in self.class_names])
        object.__setattr__(self, 'feature_names', feature_names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.class_names)

    def with_features(self, features: np.ndarray) -> 'Dataset':
        return Dataset(features, self.labels, self.class_names, self.feature_names, self.split, self.name)

    def subset(self, index) -> 'Dataset':
        return Dataset(self.features[index], self.labels[index], self.class_names, self.feature_names, self.split, self.name)

    def equals(self, other: 'Dataset') -> bool:
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.class_names == other.class_names
            and self.feature_names == other.feature_names
        )


def _class_split(count: int, class0_fraction: float) -> Tuple[int, int]:
    first = int(np.clip(round(count * class0_fraction), 0, count))
    return first, count - first


def gen_two_moons(n_train: int = 800, n_test: int = 200, noise_std: float = 0.1, rng_seed: int = 0) -> Tuple[Dataset, Dataset]:
    """
    Generate the two interleaving half circles.

    Class 0 is the upper arc (unit radius around the origin), class 1 the lower arc
    centered at (1, 0.5). Coordinates get isotropic Gaussian noise of std `noise_std`.
    Train and test splits use independent streams derived from `rng_seed`.

    Returns:
        tuple[Dataset, Dataset]: train and test splits.
    """
    if n_train <= 0 or n_test <= 0:
        raise InvalidArgumentError('Sample counts should be positive')
    if noise_std < 0:
        raise InvalidArgumentError('noise_std should be non-negative')
    train_seed, test_seed = (int(child.generate_state(1)[0]) for child in np.random.SeedSequence(rng_seed).spawn(2))

    splits = []
    for split, count, fraction, seed in (
        ('train', n_train, TWO_MOONS_TRAIN_CLASS0_FRACTION, train_seed),
        ('test', n_test, TWO_MOONS_TEST_CLASS0_FRACTION, test_seed),
    ):
        features, labels = make_moons(n_samples=_class_split(count, fraction), shuffle=True, noise=noise_std or None, random_state=seed)
        splits.append(Dataset(features, labels, TWO_MOONS_CLASSES, ['x', 'y'], split, 'two_moons'))
    return splits[0], splits[1]


def moon_arcs(points_per_arc: int = 2000) -> Tuple[np.ndarray, np.ndarray]:
    """Noise-free points on the upper (class 0) and lower (class 1) generative arcs."""
    t = np.linspace(0.0, np.pi, points_per_arc)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    return upper, lower


def _label_key(value) -> str:
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return str(int(value))
    return str(value).strip()


def load_csv(path, label_column: str = 'label', class_names: Optional[Sequence[str]] = None, split: str = 'train', name: str = '') -> Dataset:
    """
    Read a comma-delimited file with a header row.

    Every column except `label_column` is a numeric feature. Labels are mapped to integers
    in the order of `class_names`; without class names the sorted distinct label values are used.

    Raises:
        DataParseError: On a missing or empty file, a missing label column, an unknown label
            or a non-numeric feature cell. Errors name the (0-based) data row and the column.
    """
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except FileNotFoundError:
        raise DataParseError(f'Dataset file {path} does not exist')
    except pd.errors.EmptyDataError:
        raise DataParseError(f'Dataset file {path} is empty')
    if frame.empty:
        raise DataParseError(f'Dataset file {path} has no data rows')
    if label_column not in frame.columns:
        raise DataParseError(f'Dataset file {path} has no label column {label_column!r}', column=label_column)

    raw_labels = frame[label_column]
    keys = [None if pd.isna(value) else _label_key(value) for value in raw_labels]
    if class_names is None:
        class_names = sorted({key for key in keys if key is not None}, key=lambda key: (len(key), key))
    lookup = {str(class_name): index for index, class_name in enumerate(class_names)}
    labels = np.empty(len(keys), dtype=int)
    for row, key in enumerate(keys):
        if key not in lookup:
            raise DataParseError(f'Row {row} of {path}: unknown label {raw_labels.iloc[row]!r} in column {label_column!r}', row=row, column=label_column)
        labels[row] = lookup[key]

    feature_frame = frame.drop(columns=[label_column])
    if feature_frame.shape[1] == 0:
        raise DataParseError(f'Dataset file {path} has no feature columns')
    for column in feature_frame.columns:
        values = pd.to_numeric(feature_frame[column], errors='coerce')
        bad = ~np.isfinite(values.to_numpy(dtype=float))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataParseError(
                f'Row {row} of {path}: non-numeric value {feature_frame[column].iloc[row]!r} in column {column!r}',
                row=row,
                column=str(column),
            )
        feature_frame[column] = values

    return Dataset(feature_frame.to_numpy(dtype=float), labels, list(class_names), [str(column) for column in feature_frame.columns], split, name)


def export_csv(dataset: Dataset, path, label_column: str = 'label') -> None:
    frame = pd.DataFrame(dataset.features, columns=dataset.feature_names)
    frame[label_column] = [dataset.class_names[label] for label in dataset.labels]
    frame.to_csv(path, index=False)


@dataclass(frozen=True)
class StandardizationParams:
    """Per-feature mean and scale fit on a training split; constant features keep a scale of 1."""
    mean: np.ndarray
    scale: np.ndarray
    feature_names: List[str] = field(default_factory=list)

    def transform(self, dataset: Dataset) -> Dataset:
        return dataset.with_features((dataset.features - self.mean) / self.scale)

    def transform_features(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) / self.scale

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'feature': self.feature_names, 'mean': self.mean, 'scale': self.scale})

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> 'StandardizationParams':
        return cls(frame['mean'].to_numpy(dtype=float), frame['scale'].to_numpy(dtype=float), frame['feature'].astype(str).tolist())


def standardize(train: Dataset, test: Optional[Dataset] = None):
    """
    Z-score features with statistics fit on the training split only.

    Returns:
        tuple: (train', test' or None, StandardizationParams).
    """
    scaler = StandardScaler().fit(train.features)
    constant = [train.feature_names[index] for index in np.flatnonzero(scaler.var_ == 0)]
    if constant:
        Logger().log('WARNING', f'[data] [standardize] constant features {constant} keep a scale of 1')
    params = StandardizationParams(scaler.mean_.copy(), scaler.scale_.copy(), list(train.feature_names))
    return params.transform(train), (params.transform(test) if test is not None else None), params


def class_counts(dataset: Dataset) -> np.ndarray:
    return np.bincount(dataset.labels, minlength=dataset.class_count)


def require_all_classes(dataset: Dataset) -> np.ndarray:
    """
    Raises:
        InvalidConfigurationError: If a class has no sample in the dataset.
    """
    counts = class_counts(dataset)
    missing = [dataset.class_names[index] for index in np.flatnonzero(counts == 0)]
    if missing:
        raise InvalidConfigurationError(f'Classes {missing} have no samples in the {dataset.split} split of {dataset.name or "the dataset"}')
    return counts
