"""Kernel specifications and Gram matrix assembly.

A kernel spec is a small frozen dataclass. Linear and Rbf act on the feature
vector x; Polynomial and DeltaGroup act on the scalar sensitive value or the
integer group code; ComposedXS combines one of each over the joint sample.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError
from .linalg import as_matrix, as_vector


@dataclass(frozen=True)
class SampleRow:
    """One observation: features, group code, and the scalar the s-kernel sees."""

    x: np.ndarray
    s_code: int
    s_value: float


@dataclass(frozen=True)
class Samples:
    """Column-major bundle of sample rows.

    x is (n, d) float64, s_code is (n,) non-negative integers, s_value is (n,)
    float64. All kernel routines take Samples; SampleRow exists for pairwise
    evaluation and tests.
    """

    x: np.ndarray
    s_code: np.ndarray
    s_value: np.ndarray

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        code = np.asarray(self.s_code)
        if code.ndim != 1 or not np.issubdtype(code.dtype, np.integer):
            raise DimensionError("s_code must be a 1-D integer array")
        value = as_vector(self.s_value, "s_value")
        if not (x.shape[0] == code.shape[0] == value.shape[0]):
            raise DimensionError(
                f"row counts disagree: x {x.shape[0]}, s_code {code.shape[0]}, "
                f"s_value {value.shape[0]}"
            )
        if code.size and code.min() < 0:
            raise ValueError("group codes must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "s_code", code.astype(np.intp))
        object.__setattr__(self, "s_value", value)

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def row(self, i: int) -> SampleRow:
        return SampleRow(self.x[i], int(self.s_code[i]), float(self.s_value[i]))

    def take(self, idx) -> "Samples":
        idx = np.asarray(idx)
        return Samples(self.x[idx], self.s_code[idx], self.s_value[idx])

    @staticmethod
    def from_rows(rows) -> "Samples":
        return Samples(
            np.stack([np.asarray(r.x, dtype=np.float64) for r in rows]),
            np.array([r.s_code for r in rows], dtype=np.intp),
            np.array([r.s_value for r in rows], dtype=np.float64),
        )

    @staticmethod
    def empty(n_features: int = 0) -> "Samples":
        return Samples(
            np.zeros((0, n_features)), np.zeros(0, dtype=np.intp), np.zeros(0)
        )


@dataclass(frozen=True)
class Linear:
    """k(a, b) = a.x @ b.x"""


@dataclass(frozen=True)
class Rbf:
    """k(a, b) = exp(-gamma * ||a.x - b.x||^2)"""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class Polynomial:
    """k(a, b) = (offset + a.s_value * b.s_value) ** degree"""

    degree: int
    offset: float = 1.0

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")


@dataclass(frozen=True)
class DeltaGroup:
    """k(a, b) = 1 if a.s_code == b.s_code else 0"""


@dataclass(frozen=True)
class ComposedXS:
    """Joint-sample kernel built from a feature part and a sensitive part.

    mode "sum" adds the two parts; mode "ignore_s" evaluates the feature part
    only (the sensitive part is kept for subspace construction elsewhere).
    """

    x_part: Union[Linear, Rbf]
    s_part: Union[Polynomial, DeltaGroup]
    mode: str = "sum"

    def __post_init__(self):
        if not isinstance(self.x_part, (Linear, Rbf)):
            raise TypeError(f"x_part must be Linear or Rbf, got {self.x_part!r}")
        if not isinstance(self.s_part, (Polynomial, DeltaGroup)):
            raise TypeError(
                f"s_part must be Polynomial or DeltaGroup, got {self.s_part!r}"
            )
        if self.mode not in ("sum", "ignore_s"):
            raise ValueError(f"mode must be 'sum' or 'ignore_s', got {self.mode!r}")


KernelSpec = Union[Linear, Rbf, Polynomial, DeltaGroup, ComposedXS]


def eval_kernel(spec: KernelSpec, a: SampleRow, b: SampleRow) -> float:
    """Evaluate the kernel on a single pair of rows."""
    if isinstance(spec, Linear):
        ax, bx = np.asarray(a.x, dtype=float), np.asarray(b.x, dtype=float)
        if ax.shape != bx.shape:
            raise DimensionError(f"feature shapes differ: {ax.shape} vs {bx.shape}")
        return float(ax @ bx)
    if isinstance(spec, Rbf):
        ax, bx = np.asarray(a.x, dtype=float), np.asarray(b.x, dtype=float)
        if ax.shape != bx.shape:
            raise DimensionError(f"feature shapes differ: {ax.shape} vs {bx.shape}")
        d = ax - bx
        return float(np.exp(-spec.gamma * (d @ d)))
    if isinstance(spec, Polynomial):
        return float((spec.offset + a.s_value * b.s_value) ** spec.degree)
    if isinstance(spec, DeltaGroup):
        return 1.0 if a.s_code == b.s_code else 0.0
    if isinstance(spec, ComposedXS):
        kx = eval_kernel(spec.x_part, a, b)
        if spec.mode == "ignore_s":
            return kx
        return kx + eval_kernel(spec.s_part, a, b)
    raise TypeError(f"unknown kernel spec: {spec!r}")


def _sq_dists(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    sq = (
        (xa * xa).sum(axis=1)[:, None]
        + (xb * xb).sum(axis=1)[None, :]
        - 2.0 * (xa @ xb.T)
    )
    return np.maximum(sq, 0.0)


def _pairwise(spec: KernelSpec, a: Samples, b: Samples) -> np.ndarray:
    if isinstance(spec, Linear):
        return a.x @ b.x.T
    if isinstance(spec, Rbf):
        return np.exp(-spec.gamma * _sq_dists(a.x, b.x))
    if isinstance(spec, Polynomial):
        return (spec.offset + np.outer(a.s_value, b.s_value)) ** spec.degree
    if isinstance(spec, DeltaGroup):
        return (a.s_code[:, None] == b.s_code[None, :]).astype(np.float64)
    if isinstance(spec, ComposedXS):
        kx = _pairwise(spec.x_part, a, b)
        if spec.mode == "ignore_s":
            return kx
        return kx + _pairwise(spec.s_part, a, b)
    raise TypeError(f"unknown kernel spec: {spec!r}")


def gram(spec: KernelSpec, rows: Samples) -> np.ndarray:
    """Symmetric PSD Gram matrix of the kernel over the given rows."""
    if len(rows) == 0:
        raise DimensionError("gram needs at least one row")
    if isinstance(spec, ComposedXS) and spec.mode == "sum":
        return gram(spec.x_part, rows) + gram(spec.s_part, rows)
    if isinstance(spec, ComposedXS):
        return gram(spec.x_part, rows)
    k = _pairwise(spec, rows, rows)
    return (k + k.T) / 2.0


def cross_gram(spec: KernelSpec, train: Samples, test: Samples) -> np.ndarray:
    """|test| x |train| kernel matrix between two row sets."""
    if len(train) == 0 or len(test) == 0:
        raise DimensionError("cross_gram needs non-empty row sets")
    if isinstance(spec, (Linear, Rbf, ComposedXS)) and train.n_features != test.n_features:
        raise DimensionError(
            f"feature widths differ: train {train.n_features}, test {test.n_features}"
        )
    return _pairwise(spec, test, train)


def default_sensitive_kernel(k: int, flavor: str = "delta") -> KernelSpec:
    """Sensitive-part kernel for k groups.

    "delta" gives the group indicator kernel. "polynomial" gives
    Polynomial(degree=k-1, offset=1), with the degree clamped to 1 when k == 1.
    Either choice spans the k-dimensional space of functions of the group,
    which is what the fairness subspace construction needs.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if flavor == "delta":
        return DeltaGroup()
    if flavor == "polynomial":
        return Polynomial(degree=max(k - 1, 1), offset=1.0)
    raise ValueError(f"unknown flavor {flavor!r}, expected 'delta' or 'polynomial'")
