"""
Norm-constrained maximum likelihood for the MNL model and the optimistic
utilities of its likelihood-ratio confidence set.

The history is kept in padded arrays (rounds x K x d) so the loss, gradient and
Hessian over all past rounds are single vectorized reductions.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, softmax

from config import settings
from exceptions import ConvergenceError, InvalidInputError
from logging_config import get_main_logger
from mnl.linalg import PsdMatrix, project_metric_ball
from mnl.model import Assortment, ChoiceOutcome, RoundContext

logger = get_main_logger()

ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
MAX_HALVINGS = 60


class MleHistory:
    """Append-only record of offered features and observed choices."""

    def __init__(self, d: int, K: int, capacity: int = 64):
        self.d = d
        self.K = K
        self.n = 0
        self._features = np.zeros((capacity, K, d))
        self._mask = np.zeros((capacity, K), dtype=bool)
        self._onehot = np.zeros((capacity, K))
        self._positions = np.zeros(capacity, dtype=int)

    def _grow(self):
        capacity = 2 * self._features.shape[0]
        for name in ("_features", "_mask", "_onehot", "_positions"):
            old = getattr(self, name)
            new = np.zeros((capacity,) + old.shape[1:], dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def append(self, ctx: RoundContext, S: Assortment, y: ChoiceOutcome) -> None:
        if len(S) > self.K:
            raise InvalidInputError(f"assortment size {len(S)} exceeds history capacity K={self.K}")
        if self.n == self._features.shape[0]:
            self._grow()
        size = len(S)
        self._features[self.n, :size] = ctx.features[list(S.items)]
        self._mask[self.n, :size] = True
        if y.position > 0:
            self._onehot[self.n, y.position - 1] = 1.0
        self._positions[self.n] = y.position
        self.n += 1

    @property
    def features(self) -> np.ndarray:
        return self._features[: self.n]

    @property
    def mask(self) -> np.ndarray:
        return self._mask[: self.n]

    @property
    def onehot(self) -> np.ndarray:
        return self._onehot[: self.n]

    @property
    def positions(self) -> np.ndarray:
        return self._positions[: self.n]

    def __len__(self) -> int:
        return self.n


def _logits(history: MleHistory, w: np.ndarray) -> np.ndarray:
    z = np.where(history.mask, history.features @ w, -np.inf)
    return np.concatenate((np.zeros((history.n, 1)), z), axis=1)


def history_loss(history: MleHistory, w: np.ndarray) -> float:
    """L_t(w): summed negative log-likelihood over the history."""
    if history.n == 0:
        return 0.0
    logits = _logits(history, w)
    chosen = logits[np.arange(history.n), history.positions]
    return float(np.sum(logsumexp(logits, axis=1) - chosen))


def history_gradient(history: MleHistory, w: np.ndarray) -> np.ndarray:
    if history.n == 0:
        return np.zeros(history.d)
    probs = softmax(_logits(history, w), axis=1)[:, 1:]
    return np.einsum("nk,nkd->d", probs - history.onehot, history.features)


def history_hessian(history: MleHistory, w: np.ndarray) -> np.ndarray:
    if history.n == 0:
        return np.zeros((history.d, history.d))
    X = history.features
    probs = softmax(_logits(history, w), axis=1)[:, 1:]
    mean = np.einsum("nk,nkd->nd", probs, X)
    return np.einsum("nk,nkd,nke->de", probs, X, X) - mean.T @ mean


@dataclass(eq=False)
class MleState:
    """Constrained MLE over an append-only history."""

    history: MleHistory
    B: float
    w_hat: np.ndarray
    loss_at_mle: float = 0.0
    curvature: Optional[PsdMatrix] = None  # regularized Hessian at w_hat
    iterations: int = 0

    @classmethod
    def empty(cls, d: int, K: int, B: float) -> "MleState":
        return cls(history=MleHistory(d, K), B=B, w_hat=np.zeros(d))

    @property
    def reg(self) -> float:
        return 1.0 / (8.0 * self.B ** 2)

    def append(self, ctx: RoundContext, S: Assortment, y: ChoiceOutcome) -> None:
        self.history.append(ctx, S, y)


def _euclidean_ball(w: np.ndarray, B: float) -> np.ndarray:
    norm = float(np.linalg.norm(w))
    return w if norm <= B else w * (B / norm)


def projected_gradient_norm(w: np.ndarray, gradient: np.ndarray, B: float) -> float:
    return float(np.linalg.norm(w - _euclidean_ball(w - gradient, B)))


def _scaled_projected_newton(objective: Callable[[np.ndarray], float],
                             gradient: Callable[[np.ndarray], np.ndarray],
                             metric_at: Callable[[np.ndarray], PsdMatrix],
                             w0: np.ndarray, B: float, tol: float, max_iter: int,
                             solver: str) -> Tuple[np.ndarray, int]:
    w = _euclidean_ball(np.array(w0, dtype=float), B)
    value = objective(w)
    for iteration in range(max_iter):
        g = gradient(w)
        residual = projected_gradient_norm(w, g, B)
        if residual <= tol:
            return w, iteration
        metric = metric_at(w)
        direction = project_metric_ball(w - metric.solve(g), metric, B) - w
        slope = float(g @ direction)
        step = 1.0
        for _ in range(MAX_HALVINGS):
            candidate = w + step * direction
            candidate_value = objective(candidate)
            if candidate_value <= value + ARMIJO_C * step * slope:
                break
            step *= ARMIJO_SHRINK
        else:
            # no decrease left at double precision
            if residual <= np.sqrt(tol):
                logger.warning(f"{solver}: line search stalled at projected-gradient residual "
                               f"{residual:.2e} above tolerance {tol:.1e}; keeping the current iterate")
                return w, iteration
            raise ConvergenceError(solver, iteration, residual)
        w, value = candidate, candidate_value
    raise ConvergenceError(solver, max_iter, projected_gradient_norm(w, gradient(w), B))


def mle_fit(state: MleState, tol: Optional[float] = None, max_iter: Optional[int] = None) -> MleState:
    """Projected Newton on L_t over the B-ball, warm-started at the previous estimate."""
    tol = settings.MLE_TOL if tol is None else tol
    max_iter = settings.MLE_MAX_ITER if max_iter is None else max_iter
    history = state.history
    if history.n == 0:
        raise InvalidInputError("cannot fit the MLE on an empty history")

    ridge = state.reg * np.eye(history.d)
    w_hat, iterations = _scaled_projected_newton(
        objective=lambda w: history_loss(history, w),
        gradient=lambda w: history_gradient(history, w),
        metric_at=lambda w: PsdMatrix(history_hessian(history, w) + ridge),
        w0=state.w_hat, B=state.B, tol=tol, max_iter=max_iter, solver="constrained MLE",
    )
    logger.debug(f"MLE refit over {history.n} rounds took {iterations} Newton steps")
    return replace(
        state,
        w_hat=w_hat,
        loss_at_mle=history_loss(history, w_hat),
        curvature=PsdMatrix(history_hessian(history, w_hat) + ridge),
        iterations=iterations,
    )


def mle_optimistic_utility(state: MleState, x: np.ndarray, gamma_sq: float, tol: float = 1e-8) -> float:
    """max x . w over {||w|| <= B, L_t(w) - L_t(w_hat) <= gamma_sq}.

    The likelihood constraint is dualized: w(nu) minimizes L_t(w) - nu x . w
    over the ball and nu is found by Brent's method on L_t(w(nu)) = L_t(w_hat) + gamma_sq.
    """
    x = np.asarray(x, dtype=float)
    x_norm = float(np.linalg.norm(x))
    history = state.history
    if x_norm == 0.0:
        return 0.0
    if history.n == 0:
        return state.B * x_norm
    if gamma_sq <= 0.0:
        return float(x @ state.w_hat)

    target = state.loss_at_mle + gamma_sq
    if history_loss(history, state.B * x / x_norm) <= target:
        return state.B * x_norm

    metric = state.curvature
    if metric is None:
        metric = PsdMatrix(history_hessian(history, state.w_hat) + state.reg * np.eye(history.d))
    warm = {"w": state.w_hat.copy()}

    def tilted_argmin(nu: float) -> np.ndarray:
        w, _ = _scaled_projected_newton(
            objective=lambda w: history_loss(history, w) - nu * float(x @ w),
            gradient=lambda w: history_gradient(history, w) - nu * x,
            metric_at=lambda w: metric,
            w0=warm["w"], B=state.B, tol=tol * (1.0 + nu * x_norm),
            max_iter=settings.MLE_MAX_ITER, solver="optimistic utility",
        )
        warm["w"] = w
        return w

    def residual(nu: float) -> float:
        return history_loss(history, tilted_argmin(nu)) - target

    lo, hi = 0.0, 1.0
    for _ in range(80):
        if residual(hi) >= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError("optimistic utility bracket", 80, gamma_sq)

    nu = brentq(residual, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=200)
    value = float(x @ tilted_argmin(nu))
    return min(value, state.B * x_norm)
