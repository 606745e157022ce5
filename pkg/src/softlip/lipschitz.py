"""Local and global Lipschitz analysis of the softmax operator.

The global constant is lam/2 in every lp norm. The local constant at a
point is the induced p-norm of the Jacobian there; for p in {1, inf} it
has the closed form lam * max_i 2 s_i (1 - s_i). This module computes
those constants, builds the witnesses that show lam/2 is sharp (an
attaining point for p in {1, inf}, an interior sequence approaching it
for 1 < p < inf, and a concrete near-attaining secant pair), checks
co-coercivity, and evaluates the refined attention-layer bound that the
sharp constant yields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from softlip.core import Logits, SimplexPoint, Temperature, jacobian, m_of_s, softmax
from softlip.opnorm import NormEstimate, NormOrder, opnorm_p_estimate, vector_norm


@dataclass(frozen=True)
class WitnessPair:
    """A secant pair (x, y) whose softmax difference ratio nearly attains lam/2."""

    x: Logits
    y: Logits
    p: NormOrder
    lam: float
    ratio: float

    def __post_init__(self):
        if np.array_equal(self.x.values, self.y.values):
            raise ValueError("witness pair must have x != y")
        if self.ratio > self.lam / 2.0 + 1e-9:
            raise ValueError(f"ratio {self.ratio} exceeds the global bound {self.lam / 2}")
        if abs(self.recompute_ratio() - self.ratio) > 1e-12:
            raise ValueError("stored ratio is not reproducible from the pair")

    def recompute_ratio(self) -> float:
        num = vector_norm(
            softmax(self.y, self.lam).probs - softmax(self.x, self.lam).probs, self.p
        )
        den = vector_norm(self.y.values - self.x.values, self.p)
        return num / den


@dataclass(frozen=True)
class LimitSequenceStep:
    """One interior point of the sequence whose p-norm ratio tends to 1/2.

    `certified_ratio` is the realized ratio ||M(s) v||_p with the two-point
    witness v; `closed_form` is 1/2 - 2 delta (1 - delta), which equals
    1/2 - epsilon by the choice of delta. The two must agree to 1e-12.
    """

    k: int
    epsilon: float
    delta: float
    s: np.ndarray
    certified_ratio: float
    closed_form: float

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {self.delta}")
        if abs(self.certified_ratio - self.closed_form) > 1e-12:
            raise ValueError(
                f"certified ratio {self.certified_ratio!r} disagrees with "
                f"closed form {self.closed_form!r}"
            )


@dataclass(frozen=True)
class ScsaParams:
    """Inputs of the scaled cosine-similarity attention Lipschitz bound.

    The bound depends on the projection weights only through their spectral
    norms, so those are taken directly (opnorm_two reduces matrices).
    """

    n: int
    nu: float
    tau: float
    eps: float
    wq_norm: float
    wk_norm: float
    wv_norm: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("token count n must be a positive integer")
        for name in ("nu", "tau", "eps"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("wq_norm", "wk_norm", "wv_norm"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


def closed_form_linf(s) -> float:
    """max_i 2 s_i (1 - s_i): the exact 1- and inf-norm of Diag(s) - s s^T."""
    probs = s.probs if isinstance(s, SimplexPoint) else np.asarray(s, dtype=np.float64)
    return float((2.0 * probs * (1.0 - probs)).max())


def global_bound(t: Union[Temperature, float]) -> float:
    """The global softmax Lipschitz constant lam/2, valid in every lp norm."""
    return Temperature.of(t).lam / 2.0


def local_lipschitz(
    x, t: Union[Temperature, float] = 1.0, p: Union[NormOrder, float, str] = 2.0
) -> NormEstimate:
    """Bracket of the local Lipschitz constant ||J(x)||_p of the softmax.

    For p in {1, inf} the O(n) closed form lam * max_i 2 s_i (1 - s_i) is
    used (exact, bypassing generic matrix norms); p = 2 is an exact dense
    eigensolve; other orders return the certified power-iteration bracket.
    """
    order = NormOrder.of(p)
    lam = Temperature.of(t).lam
    s = softmax(x, lam)
    if order.is_one or order.is_infinity:
        val = lam * closed_form_linf(s)
        i = int((s.probs * (1.0 - s.probs)).argmax())
        if order.is_one:
            wit = np.zeros(s.n)
            wit[i] = 1.0
        else:
            # Row i's sign pattern (+1 at i, -1 off it) realizes the row sum.
            wit = np.sign(m_of_s(s)[i])
        return NormEstimate(val, val, exact=True, method="2s(1-s) closed form", witness=wit)
    return opnorm_p_estimate(jacobian(s, lam).matrix, order)


def witness_attained(n: int, p: Union[NormOrder, float, str]) -> tuple[Logits, float]:
    """A point where the local constant equals exactly 1/2 (lam = 1).

    The logits (ln(n-1), 0, ..., 0) give s_1 = 1/2, at which the 1- and
    inf-norm of the Jacobian attain the global bound. Attainment fails for
    every other order when n > 2, so those are rejected.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    order = NormOrder.of(p)
    if not (order.is_one or order.is_infinity):
        raise ValueError(
            f"the bound is attained at an interior point only for p in {{1, inf}}, got p={order.label}"
        )
    values = np.zeros(n)
    values[0] = math.log(n - 1.0)
    x = Logits(values)
    return x, local_lipschitz(x, 1.0, order).upper


def witness_limit_sequence(
    n: int, p: Union[NormOrder, float, str], epsilons
) -> list[LimitSequenceStep]:
    """Interior points whose certified p-norm ratio equals 1/2 - epsilon.

    For each epsilon in (0, 1/2): delta solves 2 delta (1 - delta) =
    epsilon (the root in (0, 1/2)), the point s has its first two
    coordinates at 1/2 - 2 delta (1 - delta) with the rest uniform, and
    the realized ratio ||M(s) v||_p with v = (2^(-1/p), -2^(-1/p), 0, ...)
    comes out to exactly 1/2 - epsilon. Smaller epsilon moves the point
    toward the boundary and the ratio toward 1/2.
    """
    if n <= 2:
        raise ValueError("the limit sequence needs n > 2 free coordinates")
    order = NormOrder.of(p)
    if order.is_one or order.is_infinity:
        raise ValueError("the limit sequence is for 1 < p < inf; use witness_attained instead")
    steps = []
    for k, eps in enumerate(epsilons):
        eps = float(eps)
        if not 0.0 < eps < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {eps}")
        # Stable root of 2d(1-d) = eps: no cancellation for tiny eps.
        delta = eps / (1.0 + math.sqrt(1.0 - 2.0 * eps))
        big = 0.5 - 2.0 * delta * (1.0 - delta)
        rest = (1.0 - 2.0 * big) / (n - 2)
        s = np.full(n, rest)
        s[0] = s[1] = big
        c = 2.0 ** (-1.0 / order.p)
        v = np.zeros(n)
        v[0], v[1] = c, -c
        certified = vector_norm(m_of_s(s) @ v, order) / vector_norm(v, order)
        steps.append(
            LimitSequenceStep(
                k=k,
                epsilon=eps,
                delta=delta,
                s=s,
                certified_ratio=certified,
                closed_form=0.5 - 2.0 * delta * (1.0 - delta),
            )
        )
    return steps


def _top_eigenvector(mat: np.ndarray) -> np.ndarray:
    """Unit eigenvector of the largest eigenvalue, first nonzero entry positive."""
    try:
        _, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"dense symmetric eigensolve failed: {exc}") from exc
    v = vecs[:, -1]
    nonzero = np.nonzero(v)[0]
    if nonzero.size and v[nonzero[0]] < 0.0:
        v = -v
    return v / np.linalg.norm(v)


def witness_example_pair(
    n: int,
    K: float = 20.0,
    eps_pert: float = 1e-4,
    p: Union[NormOrder, float, str] = 2.0,
) -> WitnessPair:
    """The concrete near-attaining secant pair built from x = (0, 0, -K, ...).

    y perturbs x by eps_pert along the top Jacobian eigenvector at x. For
    n = 10, K = 20, eps_pert = 1e-4 the measured ratio is 0.499999995...
    in every lp norm, a hair under the sharp constant 1/2.

    The numerator cancels almost completely, so for eps_pert below ~1e-7
    the measured ratio carries float64 noise of order 1e-9 and can even
    poke past 1/2; the true ratio never does.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if K < 0.0:
        raise ValueError("K must be nonnegative")
    if eps_pert <= 0.0:
        raise ValueError("eps_pert must be positive")
    order = NormOrder.of(p)
    values = np.full(n, -float(K))
    values[0] = values[1] = 0.0
    x = Logits(values)
    v = _top_eigenvector(jacobian(softmax(x), 1.0).matrix)
    y = Logits(x.values + eps_pert * v)
    ratio = vector_norm(softmax(y).probs - softmax(x).probs, order) / vector_norm(
        y.values - x.values, order
    )
    return WitnessPair(x=x, y=y, p=order, lam=1.0, ratio=ratio)


def cocoercivity_check(
    x, y, t: Union[Temperature, float] = 1.0
) -> tuple[float, float, bool]:
    """Evaluate <sig(x) - sig(y), x - y> >= (2/lam) ||sig(x) - sig(y)||_2^2.

    Returns (lhs, rhs, holds) with holds true when lhs >= rhs - 1e-12.
    Co-coercivity with constant 2/lam is what makes the softmax firmly
    nonexpansive for lam <= 2.
    """
    lam = Temperature.of(t).lam
    xv = Logits.of(x).values
    yv = Logits.of(y).values
    if xv.size != yv.size:
        raise ValueError("x and y must have the same length")
    diff = softmax(xv, lam).probs - softmax(yv, lam).probs
    lhs = float(diff @ (xv - yv))
    rhs = (2.0 / lam) * float(diff @ diff)
    return lhs, rhs, lhs >= rhs - 1e-12


def scsa_bound(params: ScsaParams) -> float:
    """Refined l2 Lipschitz bound for scaled cosine-similarity attention.

    n^2 nu tau eps^(-1/2) ||W_K|| + n nu tau eps^(-1/2) ||W_Q||
    + 2 n nu eps^(-1/2) ||W_V^T||, where eps is the normalization floor.
    """
    root = params.eps**-0.5
    return (
        params.n**2 * params.nu * params.tau * root * params.wk_norm
        + params.n * params.nu * params.tau * root * params.wq_norm
        + 2.0 * params.n * params.nu * root * params.wv_norm
    )


def scsa_bound_unrefined(params: ScsaParams) -> float:
    """The same bound before sharpening the softmax constant.

    A softmax Lipschitz constant of ~1 instead of 1/2 doubles the two
    score-path terms (W_K and W_Q); the value-path term is unaffected.
    Reported for comparison only.
    """
    root = params.eps**-0.5
    return (
        2.0 * params.n**2 * params.nu * params.tau * root * params.wk_norm
        + 2.0 * params.n * params.nu * params.tau * root * params.wq_norm
        + 2.0 * params.n * params.nu * root * params.wv_norm
    )
