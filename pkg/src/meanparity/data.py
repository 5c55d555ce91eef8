"""Dataset containers, synthetic generation, CSV ingestion, and splitting.

Randomness: every operation derives its own PCG64 stream from the master seed
via a SeedSequence spawn key (stream tag, attempt counter), so the synthetic
draw, the split, and the subsample never share or reuse a stream, and a
coverage retry advances only its own attempt counter.
"""

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DimensionError, MissingGroupError, SchemaError, SplitError
from .kernels import Samples
from .linalg import as_vector

log = logging.getLogger(__name__)

STREAM_SYNTHETIC = 0
STREAM_SPLIT = 1
STREAM_SUBSAMPLE = 2

MAX_COVERAGE_RETRIES = 100


def derived_rng(seed: int, stream: int, attempt: int = 0) -> np.random.Generator:
    """Independent generator for (master seed, operation stream, attempt)."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(stream, attempt))
    )


@dataclass(frozen=True)
class SyntheticConfig:
    """Gaussian features, random +/-0.1 sensitive coordinates, linear or sine link."""

    n: int
    d: int
    e: int = 1
    noise_sd: float = 0.0
    link: str = "linear"

    def __post_init__(self):
        if self.n < 2 or self.d < 1 or self.e < 1:
            raise ValueError(
                f"need n >= 2, d >= 1, e >= 1, got {self.n}, {self.d}, {self.e}"
            )
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if self.link not in ("linear", "sine"):
            raise ValueError(f"link must be 'linear' or 'sine', got {self.link!r}")


@dataclass(frozen=True)
class CsvSchema:
    """Column roles for load_csv.

    feature_columns = None takes every remaining column whose values all parse
    as numbers. binarize_rules maps a sensitive column name to a threshold;
    values strictly above it become 1. Sensitive columns without a rule must
    already hold 0/1 values. With several sensitive columns the first listed
    is the most significant base-2 bit of the group code.
    """

    target_column: str
    sensitive_columns: tuple
    feature_columns: Optional[tuple] = None
    binarize_rules: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sensitive_columns", tuple(self.sensitive_columns))
        if self.feature_columns is not None:
            object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        if not self.sensitive_columns:
            raise SchemaError("at least one sensitive column is required")
        if self.target_column in self.sensitive_columns:
            raise SchemaError("target column cannot be sensitive")
        if self.feature_columns is not None:
            feats = set(self.feature_columns)
            if self.target_column in feats:
                raise SchemaError("target column cannot be a feature")
            overlap = feats & set(self.sensitive_columns)
            if overlap:
                raise SchemaError(f"columns {sorted(overlap)} are both feature and sensitive")
        unknown = set(self.binarize_rules) - set(self.sensitive_columns)
        if unknown:
            raise SchemaError(f"binarize rules for non-sensitive columns {sorted(unknown)}")


@dataclass(frozen=True)
class DataSet:
    """Samples with targets, the group count k, and how it all came to be."""

    samples: Samples
    y: np.ndarray
    k: int
    feature_names: tuple
    provenance: dict

    def __post_init__(self):
        y = as_vector(self.y, "y")
        if y.shape[0] != len(self.samples):
            raise DimensionError(
                f"y length {y.shape[0]} != sample count {len(self.samples)}"
            )
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if len(self.samples) and self.samples.s_code.max() >= self.k:
            raise ValueError(
                f"group code {self.samples.s_code.max()} out of range for k={self.k}"
            )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return len(self.samples)

    def take(self, idx, **provenance_updates) -> "DataSet":
        idx = np.asarray(idx)
        return DataSet(
            self.samples.take(idx),
            self.y[idx],
            self.k,
            self.feature_names,
            {**self.provenance, **provenance_updates},
        )


def _codes_from_bits(bits: np.ndarray) -> np.ndarray:
    """Base-2 group code, first column most significant."""
    e = bits.shape[1]
    weights = 1 << np.arange(e - 1, -1, -1)
    return (bits.astype(np.intp) * weights).sum(axis=1)


def _covers_all_groups(codes: np.ndarray, k: int) -> bool:
    return np.unique(codes).size == k


def gen_synthetic(config: SyntheticConfig, seed: int) -> DataSet:
    """Draw a synthetic regression problem with 2**e sensitive groups.

    y = z @ w + noise under the linear link and sin(z @ w) + noise under the
    sine link, where z stacks the features and the raw +/-0.1 sensitive
    coordinates. Redraws with a fresh derived stream until every group is
    populated. With e = 1 the raw coordinate doubles as the scalar sensitive
    value; with e > 1 the group code does.
    """
    k = 2**config.e
    for attempt in range(MAX_COVERAGE_RETRIES):
        rng = derived_rng(seed, STREAM_SYNTHETIC, attempt)
        x = rng.standard_normal((config.n, config.d))
        w = rng.standard_normal(config.d + config.e)
        s_raw = np.where(rng.random((config.n, config.e)) < 0.5, -0.1, 0.1)
        signal = x @ w[: config.d] + s_raw @ w[config.d :]
        if config.link == "sine":
            signal = np.sin(signal)
        y = signal + config.noise_sd * rng.standard_normal(config.n)
        codes = _codes_from_bits(s_raw > 0)
        if _covers_all_groups(codes, k):
            break
    else:
        raise SplitError(
            f"could not populate all {k} groups in {MAX_COVERAGE_RETRIES} draws (n={config.n})"
        )
    s_value = s_raw[:, 0] if config.e == 1 else codes.astype(np.float64)
    samples = Samples(x, codes, s_value)
    return DataSet(
        samples=samples,
        y=y,
        k=k,
        feature_names=tuple(f"x{i + 1}" for i in range(config.d)),
        provenance={
            "kind": "synthetic",
            "n": config.n,
            "d": config.d,
            "e": config.e,
            "noise_sd": config.noise_sd,
            "link": config.link,
            "seed": seed,
            "attempt": attempt,
            "s_value_source": "raw" if config.e == 1 else "code",
        },
    )


def _parse_float(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


def load_csv(path: Union[str, Path], schema: CsvSchema) -> DataSet:
    """Read a comma-separated file with a header row into a DataSet."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    used = [schema.target_column, *schema.sensitive_columns]
    if schema.feature_columns is not None:
        used.extend(schema.feature_columns)
    for name in used:
        if header.count(name) > 1:
            raise SchemaError(f"{path}: column {name!r} appears more than once")
        if name not in header:
            raise SchemaError(f"{path}: column {name!r} not found in header")
    col = {name: header.index(name) for name in header}

    # File line numbers for error messages: header is line 1.
    def parse_column(name, lines_bad):
        out = np.empty(len(rows))
        for i, row in enumerate(rows):
            value = _parse_float(row[col[name]]) if col[name] < len(row) else None
            if value is None:
                lines_bad.append(i + 2)
            else:
                out[i] = value
        return out

    bad_lines: list[int] = []
    y = parse_column(schema.target_column, bad_lines)
    if bad_lines:
        raise SchemaError(
            f"{path}: target column {schema.target_column!r} is not numeric "
            f"on lines {bad_lines[:20]}"
        )

    bits = np.empty((len(rows), len(schema.sensitive_columns)), dtype=np.intp)
    for j, name in enumerate(schema.sensitive_columns):
        raw = parse_column(name, bad_lines)
        if bad_lines:
            raise SchemaError(
                f"{path}: sensitive column {name!r} is not numeric on lines {bad_lines[:20]}"
            )
        if name in schema.binarize_rules:
            bits[:, j] = raw > schema.binarize_rules[name]
        else:
            if not np.all((raw == 0.0) | (raw == 1.0)):
                culprits = [i + 2 for i in np.flatnonzero((raw != 0.0) & (raw != 1.0))]
                raise SchemaError(
                    f"{path}: sensitive column {name!r} has no binarize rule but "
                    f"non-binary values on lines {culprits[:20]}"
                )
            bits[:, j] = raw.astype(np.intp)

    if schema.feature_columns is not None:
        feature_names = list(schema.feature_columns)
        columns = []
        for name in feature_names:
            parsed = parse_column(name, bad_lines)
            if bad_lines:
                raise SchemaError(
                    f"{path}: feature column {name!r} is not numeric on lines {bad_lines[:20]}"
                )
            columns.append(parsed)
    else:
        reserved = {schema.target_column, *schema.sensitive_columns}
        feature_names, columns = [], []
        for name in header:
            if name in reserved:
                continue
            probe: list[int] = []
            parsed = parse_column(name, probe)
            if not probe:
                feature_names.append(name)
                columns.append(parsed)
    if not columns:
        raise SchemaError(f"{path}: no usable feature columns")

    codes = _codes_from_bits(bits)
    k = 2 ** len(schema.sensitive_columns)
    if not _covers_all_groups(codes, k):
        missing = sorted(set(range(k)) - set(int(c) for c in np.unique(codes)))
        raise MissingGroupError(f"{path}: groups {missing} have no samples (k={k})")

    samples = Samples(np.column_stack(columns), codes, codes.astype(np.float64))
    return DataSet(
        samples=samples,
        y=y,
        k=k,
        feature_names=tuple(feature_names),
        provenance={
            "kind": "csv",
            "path": str(path),
            "target_column": schema.target_column,
            "sensitive_columns": list(schema.sensitive_columns),
            "binarize_rules": dict(schema.binarize_rules),
            "s_value_source": "code",
        },
    )


def split(dataset: DataSet, fraction: float, seed: int) -> tuple:
    """Random train/test split; retries until train holds every group.

    A test side missing some group is allowed and logged, since metrics on
    that split simply range over the groups present.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = len(dataset)
    if n < 2:
        raise DimensionError(f"cannot split {n} samples")
    n_train = min(max(int(round(fraction * n)), 1), n - 1)
    for attempt in range(MAX_COVERAGE_RETRIES):
        rng = derived_rng(seed, STREAM_SPLIT, attempt)
        perm = rng.permutation(n)
        train_idx, test_idx = perm[:n_train], perm[n_train:]
        if _covers_all_groups(dataset.samples.s_code[train_idx], dataset.k):
            break
    else:
        raise SplitError(
            f"no train split of size {n_train} covered all {dataset.k} groups "
            f"in {MAX_COVERAGE_RETRIES} tries"
        )
    test_codes = dataset.samples.s_code[test_idx]
    if not _covers_all_groups(test_codes, dataset.k):
        absent = sorted(set(range(dataset.k)) - set(int(c) for c in np.unique(test_codes)))
        log.warning("test split is missing groups %s", absent)
    train = dataset.take(train_idx, split_role="train", split_seed=seed)
    test = dataset.take(test_idx, split_role="test", split_seed=seed)
    return train, test


def center_targets(train: DataSet, test: DataSet) -> tuple:
    """Subtract the train-target mean from both splits; returns it as well."""
    mean = float(train.y.mean())
    return (
        replace(train, y=train.y - mean),
        replace(test, y=test.y - mean),
        mean,
    )


def subsample(dataset: DataSet, n: int, seed: int) -> DataSet:
    """Draw n rows without replacement, keeping every group populated."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > len(dataset):
        raise DimensionError(f"cannot draw {n} from {len(dataset)} rows")
    for attempt in range(MAX_COVERAGE_RETRIES):
        rng = derived_rng(seed, STREAM_SUBSAMPLE, attempt)
        idx = rng.choice(len(dataset), size=n, replace=False)
        if _covers_all_groups(dataset.samples.s_code[idx], dataset.k):
            return dataset.take(idx, subsample_n=n, subsample_seed=seed)
    raise SplitError(
        f"no subsample of size {n} covered all {dataset.k} groups "
        f"in {MAX_COVERAGE_RETRIES} tries"
    )
