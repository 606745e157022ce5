"""Entropy-regularized two-player zero-sum matrix games.

The regularized problem min_x max_y x^T A y + tau (H(x) - H(y)) is solved
by the damped double-softmax fixed-point iteration

    y  <-  (1 - alpha) y + alpha * T(y),
    T(y) = sig_{1/tau}(A^T sig_{1/tau}(-A y)),

which is a contraction whenever tau > ||A||_p / 2, with factor
||A||_p^2 / (4 tau^2) under the classical chain (which silently uses
||A^T||_p = ||A||_p, true for p = 2 but not in general). Both that
factor and the conservative ||A||_p ||A^T||_p / (4 tau^2) are reported;
solving proceeds either way, flagged as uncertified when the conservative
factor is not below 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from softlip.core import TOL_SIMPLEX_PER_ENTRY, SimplexPoint, _softmax_kernel
from softlip.opnorm import NormOrder, opnorm_p_estimate

_TRACE_CAP = 100_000


class DsfpError(RuntimeError):
    """Raised when the iteration produces non-finite values."""


@dataclass(frozen=True)
class MatrixGame:
    """A finite payoff matrix; the row player minimizes x^T A y."""

    a: np.ndarray

    def __post_init__(self):
        arr = np.array(self.a, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"payoff matrix must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("payoff entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "a", arr)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]


@dataclass(frozen=True)
class DsfpConfig:
    """Solver knobs: regularization, damping, norm, stopping, start point."""

    tau: float
    alpha: float = 1.0
    p: NormOrder = field(default_factory=NormOrder.two)
    tol: float = 1e-10
    max_iter: int = 10_000
    y0: Union[str, np.ndarray] = "uniform"

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        object.__setattr__(self, "p", NormOrder.of(self.p))
        if not isinstance(self.y0, str):
            arr = np.array(self.y0, dtype=np.float64, copy=True)
            arr.flags.writeable = False
            object.__setattr__(self, "y0", arr)
        elif self.y0 != "uniform":
            raise ValueError(f"y0 must be 'uniform' or a probability vector, got {self.y0!r}")


@dataclass(frozen=True)
class DsfpResult:
    """Equilibrium strategies plus convergence and contraction diagnostics.

    `contraction_nominal` is ||A||_p^2 / (4 tau^2); `contraction_safe` is the
    conservative ||A||_p ||A^T||_p / (4 tau^2) (they agree at p = 2).
    `certified` records whether the safe factor was < 1, i.e. whether the
    Banach argument guarantees this run converged to the unique fixed point.
    """

    y_star: np.ndarray
    x_star: np.ndarray
    iterations: int
    residual: float
    contraction_nominal: float
    contraction_safe: float
    regularized_value: float
    trace: tuple
    converged: bool
    certified: bool
    clamp_events: int
    config: DsfpConfig


def _pnorm(v: np.ndarray, order: NormOrder) -> float:
    a = np.abs(v)
    if order.is_infinity:
        return float(a.max())
    if order.is_one:
        return float(a.sum())
    if order.is_two:
        return float(np.sqrt(a @ a))
    m = float(a.max())
    if m == 0.0:
        return 0.0
    return m * float(((a / m) ** order.p).sum()) ** (1.0 / order.p)


def _check_strategy(y, m: int) -> np.ndarray:
    arr = np.asarray(y, dtype=np.float64)
    if arr.shape != (m,):
        raise ValueError(f"strategy must have shape ({m},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("strategy entries must be finite")
    if arr.min() < 0.0:
        raise ValueError("strategy entries must be nonnegative")
    if abs(float(arr.sum()) - 1.0) > TOL_SIMPLEX_PER_ENTRY * m:
        raise ValueError("strategy must sum to 1 within tolerance")
    return arr


def dsfp_map(game: MatrixGame, tau: float, y) -> SimplexPoint:
    """One application of T(y) = sig_{1/tau}(A^T sig_{1/tau}(-A y)).

    The returned point's `clamped` flag covers both inner softmaxes.
    """
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    arr = _check_strategy(y, game.m)
    lam = 1.0 / tau
    x, x_clamped = _softmax_kernel(lam * (-(game.a @ arr)))
    t_y, y_clamped = _softmax_kernel(lam * (game.a.T @ x))
    return SimplexPoint(t_y, clamped=x_clamped or y_clamped)


def tau_min(game: MatrixGame, p: Union[NormOrder, float, str]) -> float:
    """Contraction threshold ||A||_p / 2, from the certified upper bracket.

    Any tau strictly above this makes the classical factor < 1. For general
    p that factor leans on ||A^T||_p = ||A||_p, which only holds at p = 2;
    compare contraction_factor's safe value before trusting it.
    """
    return opnorm_p_estimate(game.a, p).upper / 2.0


def contraction_factor(
    game: MatrixGame, tau: float, p: Union[NormOrder, float, str]
) -> tuple[float, float]:
    """(nominal, safe) contraction factors of T at regularization tau.

    nominal = ||A||_p^2 / (4 tau^2); safe = ||A||_p ||A^T||_p / (4 tau^2),
    both from certified upper brackets. They coincide at p = 2 and for
    symmetric payoffs; elsewhere the safe factor is the provable one.
    """
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    order = NormOrder.of(p)
    a_norm = opnorm_p_estimate(game.a, order).upper
    at_norm = opnorm_p_estimate(game.a.T, order).upper
    scale = 4.0 * tau * tau
    return a_norm * a_norm / scale, a_norm * at_norm / scale


def shannon_entropy(u) -> float:
    """H(u) = -sum u_i ln u_i with the convention 0 ln 0 = 0."""
    arr = np.asarray(u, dtype=np.float64)
    pos = arr > 0.0
    return -float((arr[pos] * np.log(arr[pos])).sum())


def regularized_value(game: MatrixGame, tau: float, x, y) -> float:
    """The regularized objective x^T A y + tau (H(x) - H(y))."""
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    xv = _check_strategy(x, game.n)
    yv = _check_strategy(y, game.m)
    return float(xv @ game.a @ yv) + tau * (shannon_entropy(xv) - shannon_entropy(yv))


def _thin(trace: list) -> list:
    # Geometric thinning: drop every other entry once the cap is hit.
    return trace[::2]


def dsfp_solve(game: MatrixGame, config: DsfpConfig) -> DsfpResult:
    """Iterate the damped map to the regularized equilibrium.

    Stops when ||y_{k+1} - y_k||_p <= tol * alpha (scaled by alpha so heavy
    damping cannot fake convergence) or when max_iter is exhausted;
    `converged` additionally requires the fixed-point residual
    ||T(y) - y||_p <= tol at the final iterate. Exhausting max_iter is not
    an exception, just converged = False. Non-finite iterates raise.
    """
    if isinstance(config.y0, str):
        y = np.full(game.m, 1.0 / game.m)
    else:
        y = _check_strategy(config.y0, game.m).copy()
    alpha = config.alpha
    order = config.p
    trace: list = []
    stride = 1
    stopped = False
    iterations = 0
    clamps = 0
    for k in range(1, config.max_iter + 1):
        mapped = dsfp_map(game, config.tau, y)
        clamps += int(mapped.clamped)
        t_y = mapped.probs
        y_next = (1.0 - alpha) * y + alpha * t_y
        if not np.all(np.isfinite(y_next)):
            raise DsfpError(f"non-finite iterate at step {k}")
        disp = _pnorm(y_next - y, order)
        if k % stride == 0:
            trace.append((k, disp))
            if len(trace) >= _TRACE_CAP:
                trace = _thin(trace)
                stride *= 2
        y = y_next
        iterations = k
        if disp <= config.tol * alpha:
            stopped = True
            break
    final_map = dsfp_map(game, config.tau, y)
    clamps += int(final_map.clamped)
    residual = _pnorm(final_map.probs - y, order)
    x_star = _softmax_kernel((-(game.a @ y)) / config.tau)[0]
    nominal, safe = contraction_factor(game, config.tau, order)
    return DsfpResult(
        y_star=y,
        x_star=x_star,
        iterations=iterations,
        residual=residual,
        contraction_nominal=nominal,
        contraction_safe=safe,
        regularized_value=regularized_value(game, config.tau, x_star, y),
        trace=tuple(trace),
        converged=stopped and residual <= config.tol,
        certified=safe < 1.0,
        clamp_events=clamps,
        config=config,
    )
