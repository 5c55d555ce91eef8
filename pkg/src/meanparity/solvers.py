"""Regression solvers over a fixed Gram matrix.

Closed-form fits minimize ||y - K w||^2 + lam * w^T K w, optionally restricted
to the fair coefficient subspace via its projector P, optionally with a
quadratic parity penalty. The gradient fit optimizes an arbitrary loss while
staying inside the fair subspace at every iterate by parameterizing w = P v.

Targets are assumed centered; the intercept lives in FittedModel and is added
back at prediction time.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DimensionError, DivergenceError, NumericError
from .kernels import KernelSpec, Samples, cross_gram
from .linalg import DEFAULT_RTOL, as_matrix, as_vector, pinv
from .subspace import FairBasis


@dataclass(frozen=True)
class SquaredLoss:
    """l(y, p) = (p - y)^2"""

    def values(self, y: np.ndarray, p: np.ndarray) -> np.ndarray:
        return (p - y) ** 2

    def grads(self, y: np.ndarray, p: np.ndarray) -> np.ndarray:
        return 2.0 * (p - y)


@dataclass(frozen=True)
class SmoothL1Loss:
    """Quadratic within beta of the target, linear with unit slope outside."""

    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def values(self, y: np.ndarray, p: np.ndarray) -> np.ndarray:
        r = np.abs(p - y)
        return np.where(r < self.beta, 0.5 * r * r / self.beta, r - 0.5 * self.beta)

    def grads(self, y: np.ndarray, p: np.ndarray) -> np.ndarray:
        return np.clip((p - y) / self.beta, -1.0, 1.0)


LossSpec = Union[SquaredLoss, SmoothL1Loss]


@dataclass(frozen=True)
class FixedStepGradient:
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")


@dataclass(frozen=True)
class AdaptiveMoment:
    """First/second moment adaptive steps with bias correction."""

    step: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class OptimizerConfig:
    method: Union[FixedStepGradient, AdaptiveMoment]
    max_iters: int
    grad_tol: float = 0.0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.grad_tol < 0:
            raise ValueError(f"grad_tol must be >= 0, got {self.grad_tol}")


@dataclass(frozen=True)
class FittedModel:
    """Weights plus everything needed to reproduce predictions.

    An empty weight vector denotes the constant model: prediction is the
    intercept everywhere and the kernel is unused.
    """

    train_rows: Samples
    weights: np.ndarray
    kernel: Optional[KernelSpec]
    lam: float
    intercept: float
    variant: str

    def __post_init__(self):
        w = as_vector(self.weights, "weights")
        if w.shape[0] != len(self.train_rows):
            raise DimensionError(
                f"weights length {w.shape[0]} != train rows {len(self.train_rows)}"
            )
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class GradientFit:
    """Result of fit_gradient: projected weights and the optimization trace."""

    weights: np.ndarray
    objective: np.ndarray
    iterations: int
    converged: bool
    max_group_residual_rel: Optional[float]


@dataclass(frozen=True)
class MseBoundTerms:
    fair_mse: float
    unconstrained_mse: float
    violation_term: float

    @property
    def slack(self) -> float:
        return self.unconstrained_mse + self.violation_term - self.fair_mse


def _check_kernel_system(gram_xs, y, lam):
    gram_xs = as_matrix(gram_xs, "gram_xs")
    y = as_vector(y, "y")
    n = gram_xs.shape[0]
    if gram_xs.shape != (n, n):
        raise DimensionError(f"gram must be square, got {gram_xs.shape}")
    if y.shape[0] != n:
        raise DimensionError(f"y length {y.shape[0]} != gram size {n}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    return gram_xs, y


def _solve_projected(gram_xs, y, lam, projector, penalty=None, rtol=DEFAULT_RTOL):
    """Minimum-norm solution of the projected regularized normal equations."""
    kp = gram_xs @ projector
    system = kp.T @ kp + lam * (projector.T @ kp)
    if penalty is not None:
        system = system + penalty
    system = (system + system.T) / 2.0
    inner = pinv(system, rtol) @ (kp.T @ y)
    return projector @ inner


def fit_unconstrained(gram_xs, y, lam, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """w = (K K + lam K)^+ K y, the ridge solution over the full span."""
    gram_xs, y = _check_kernel_system(gram_xs, y, lam)
    return _solve_projected(gram_xs, y, lam, np.eye(gram_xs.shape[0]), rtol=rtol)


def fit_fair(gram_xs, y, lam, projector, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Ridge solution restricted to coefficients in the fair subspace."""
    gram_xs, y = _check_kernel_system(gram_xs, y, lam)
    projector = as_matrix(projector, "projector")
    if projector.shape != gram_xs.shape:
        raise DimensionError(
            f"projector shape {projector.shape} != gram shape {gram_xs.shape}"
        )
    return _solve_projected(gram_xs, y, lam, projector, rtol=rtol)


def fit_tradeoff(w_fair, w_star, alpha: float) -> np.ndarray:
    """Interpolated weights (1 - alpha) * w_fair + alpha * w_star."""
    w_fair, w_star = as_vector(w_fair, "w_fair"), as_vector(w_star, "w_star")
    if w_fair.shape != w_star.shape:
        raise DimensionError("w_fair and w_star must have equal length")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return (1.0 - alpha) * w_fair + alpha * w_star


def fit_fpr(gram_xs, y, lam, zeta, basis: FairBasis, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Penalized fit: parity violations cost zeta instead of being forbidden.

    Solves (K K + lam K + zeta K C C^T K)^+ K y. zeta = 0 runs the exact
    unconstrained code path; zeta -> infinity approaches the projected fit.
    """
    gram_xs, y = _check_kernel_system(gram_xs, y, lam)
    if zeta < 0:
        raise ValueError(f"zeta must be >= 0, got {zeta}")
    if basis.n != gram_xs.shape[0]:
        raise DimensionError(f"basis built for n={basis.n}, gram has n={gram_xs.shape[0]}")
    identity = np.eye(gram_xs.shape[0])
    if zeta == 0.0 or basis.m == 0:
        return _solve_projected(gram_xs, y, lam, identity, rtol=rtol)
    kc = gram_xs @ basis.coeffs
    penalty = zeta * (kc @ kc.T)
    return _solve_projected(gram_xs, y, lam, identity, penalty=penalty, rtol=rtol)


def fit_gradient(
    gram_xs,
    projector,
    y,
    loss: LossSpec,
    opt: OptimizerConfig,
    track_group_codes=None,
) -> GradientFit:
    """Minimize sum_i loss(y_i, (K P v)_i) over v by first-order updates.

    Starts from v = 0 (deterministic). Returned weights are P v, so every
    iterate's predictions, including the last, satisfy mean parity to the
    quality of the projector. With track_group_codes given, the largest
    group-mean residual of any iterate, relative to that iterate's prediction
    scale, is recorded in the result.
    """
    gram_xs, y = _check_kernel_system(gram_xs, y, 0.0)
    projector = as_matrix(projector, "projector")
    if projector.shape != gram_xs.shape:
        raise DimensionError(
            f"projector shape {projector.shape} != gram shape {gram_xs.shape}"
        )
    codes = None if track_group_codes is None else np.asarray(track_group_codes)
    kp = gram_xs @ projector
    n = gram_xs.shape[0]
    v = np.zeros(n)

    method = opt.method
    adaptive = isinstance(method, AdaptiveMoment)
    if adaptive:
        m1 = np.zeros(n)
        m2 = np.zeros(n)

    objective = []
    max_resid = 0.0 if codes is not None else None

    def eval_point(vec):
        nonlocal max_resid
        # overflow is not an error here: a non-finite objective is detected
        # and reported as divergence right below
        with np.errstate(over="ignore", invalid="ignore"):
            p = kp @ vec
            val = float(loss.values(y, p).sum())
        if not np.isfinite(val):
            raise DivergenceError(
                f"objective became non-finite at iteration {len(objective)}",
                iteration=len(objective),
            )
        if codes is not None:
            scale = max(float(np.abs(p).max()), 1e-30)
            overall = p.mean()
            resid = max(
                abs(float(p[codes == g].mean() - overall)) for g in np.unique(codes)
            )
            max_resid = max(max_resid, resid / scale)
        return p, val

    converged = False
    steps = 0
    for t in range(1, opt.max_iters + 1):
        p, val = eval_point(v)
        objective.append(val)
        grad = kp.T @ loss.grads(y, p)
        if float(np.linalg.norm(grad)) <= opt.grad_tol:
            converged = True
            break
        if adaptive:
            m1 = method.beta1 * m1 + (1.0 - method.beta1) * grad
            m2 = method.beta2 * m2 + (1.0 - method.beta2) * grad * grad
            hat1 = m1 / (1.0 - method.beta1**t)
            hat2 = m2 / (1.0 - method.beta2**t)
            v = v - method.step * hat1 / (np.sqrt(hat2) + method.epsilon)
        else:
            v = v - method.step * grad
        steps += 1
    if not converged:
        _, val = eval_point(v)
        objective.append(val)

    return GradientFit(
        weights=projector @ v,
        objective=np.asarray(objective),
        iterations=steps,
        converged=converged,
        max_group_residual_rel=max_resid,
    )


def predict(model: FittedModel, rows: Samples) -> np.ndarray:
    """Kernel expansion over the training rows plus the intercept."""
    if model.weights.size == 0:
        return np.full(len(rows), model.intercept)
    k_cross = cross_gram(model.kernel, model.train_rows, rows)
    return k_cross @ model.weights + model.intercept


def constant_baseline(y_train) -> FittedModel:
    """Model predicting mean(y_train) everywhere."""
    y_train = as_vector(y_train, "y_train")
    if y_train.size == 0:
        raise DimensionError("constant_baseline needs at least one target")
    return FittedModel(
        train_rows=Samples.empty(),
        weights=np.zeros(0),
        kernel=None,
        lam=0.0,
        intercept=float(y_train.mean()),
        variant="constant",
    )


def mse_bound_terms(gram_xs, y, w_star, projector, rtol: float = DEFAULT_RTOL) -> MseBoundTerms:
    """Decompose the price of fairness at lam = 0.

    fair_mse is bounded by unconstrained_mse plus the violation term
    (1/n) ||K (I - P) w_star||^2; the bound is checked and a material
    violation raises, since it can only come from broken numerics.
    """
    gram_xs, y = _check_kernel_system(gram_xs, y, 0.0)
    w_star = as_vector(w_star, "w_star")
    projector = as_matrix(projector, "projector")
    n = gram_xs.shape[0]
    if w_star.shape[0] != n or projector.shape != (n, n):
        raise DimensionError("w_star and projector must match the gram size")
    w_fair = _solve_projected(gram_xs, y, 0.0, projector, rtol=rtol)
    fair_mse = float(np.mean((y - gram_xs @ w_fair) ** 2))
    unconstrained_mse = float(np.mean((y - gram_xs @ w_star) ** 2))
    unfair_part = gram_xs @ (w_star - projector @ w_star)
    violation = float(unfair_part @ unfair_part / n)
    terms = MseBoundTerms(fair_mse, unconstrained_mse, violation)
    scale = max(1.0, abs(unconstrained_mse))
    if terms.slack < -1e-8 * scale:
        raise NumericError(
            f"fairness price bound violated by {-terms.slack:.3e}; "
            "the projector or solver is numerically broken"
        )
    return terms
