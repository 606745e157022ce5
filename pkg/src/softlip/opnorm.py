"""Induced matrix p-norms.

Exact closed forms exist for p in {1, 2, inf} (max column sum, largest
singular value, max row sum). For general p the norm is intractable to
compute exactly, so it is reported as a certified bracket: the lower end
is a realized ratio ||A v||_p / ||v||_p for a stored witness v found by
nonlinear power iteration, and the upper end is the interpolation bound
||A||_1^(1/p) * ||A||_inf^(1-1/p).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

#: Orders beyond this are indistinguishable from infinity in float64.
P_COERCE_TO_INF = 1e6

#: Largest matrix side accepted by the dense exact-norm routines.
MAX_DENSE_DIM = 512

_BOYD_RESTARTS = 8
_BOYD_MAX_ITER = 500
_BOYD_STALL_TOL = 1e-13


class OpNormError(RuntimeError):
    """Raised when an exact norm computation fails; carries the best bracket."""

    def __init__(self, message: str, bracket: "NormEstimate"):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class NormOrder:
    """A vector/operator norm order p in [1, inf].

    p = 1, 2, inf are the canonical exact cases; any other finite p > 1 is
    "general" and induced norms for it are bracketed rather than computed.
    Orders above P_COERCE_TO_INF are coerced to infinity with a warning,
    since p-th powers degenerate in floating point there.
    """

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1.0:
            raise ValueError(f"norm order must satisfy p >= 1, got {self.p}")
        if p > P_COERCE_TO_INF and not math.isinf(p):
            warnings.warn(
                f"norm order p={p:g} exceeds {P_COERCE_TO_INF:g}; treating as infinity",
                stacklevel=2,
            )
            p = math.inf
        object.__setattr__(self, "p", p)

    @classmethod
    def one(cls) -> "NormOrder":
        return cls(1.0)

    @classmethod
    def two(cls) -> "NormOrder":
        return cls(2.0)

    @classmethod
    def infinity(cls) -> "NormOrder":
        return cls(math.inf)

    @classmethod
    def general(cls, p: float) -> "NormOrder":
        order = cls(p)
        if not order.is_general:
            raise ValueError(f"p={p} is a canonical order, not a general one")
        return order

    @classmethod
    def of(cls, value: Union["NormOrder", float, int, str]) -> "NormOrder":
        if isinstance(value, NormOrder):
            return value
        if isinstance(value, str):
            text = value.strip().lower()
            if text in ("inf", "infinity", "oo"):
                return cls.infinity()
            return cls(float(text))
        return cls(float(value))

    @property
    def is_one(self) -> bool:
        return self.p == 1.0

    @property
    def is_two(self) -> bool:
        return self.p == 2.0

    @property
    def is_infinity(self) -> bool:
        return math.isinf(self.p)

    @property
    def is_general(self) -> bool:
        return not (self.is_one or self.is_two or self.is_infinity)

    @property
    def kind(self) -> str:
        if self.is_one:
            return "one"
        if self.is_two:
            return "two"
        if self.is_infinity:
            return "infinity"
        return "general"

    @property
    def label(self) -> str:
        """Short string form: '1', '2', 'inf', or the decimal value."""
        if self.is_infinity:
            return "inf"
        if self.p == int(self.p):
            return str(int(self.p))
        return repr(self.p)

    def dual(self) -> "NormOrder":
        """The Holder conjugate: 1/p + 1/q = 1."""
        if self.is_one:
            return NormOrder.infinity()
        if self.is_infinity:
            return NormOrder.one()
        return NormOrder(self.p / (self.p - 1.0))


@dataclass(frozen=True)
class NormEstimate:
    """A certified bracket [lower, upper] for an induced p-norm.

    `lower` is always realized by some vector (stored in `witness` when the
    bound came from power iteration); `exact` means the two ends agree to
    relative 1e-9 and the value can be treated as a point.
    """

    lower: float
    upper: float
    exact: bool
    method: str
    witness: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError(f"invalid bracket [{self.lower}, {self.upper}]")
        if self.exact and self.lower != self.upper:
            raise ValueError("exact estimates must have lower == upper")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _as_matrix(A) -> np.ndarray:
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def vector_norm(v, p: Union[NormOrder, float, str]) -> float:
    """The lp norm of a vector, stable for any order in [1, inf].

    Finite p factors out the max entry before powering, so huge orders
    (up to the coercion threshold) neither overflow nor underflow.
    """
    order = NormOrder.of(p)
    arr = np.abs(np.asarray(v, dtype=np.float64))
    if arr.size == 0:
        return 0.0
    if order.is_infinity:
        return float(arr.max())
    if order.is_one:
        return float(arr.sum())
    if order.is_two:
        return float(np.sqrt(np.dot(arr, arr)))
    m = float(arr.max())
    if m == 0.0:
        return 0.0
    return m * float(((arr / m) ** order.p).sum()) ** (1.0 / order.p)


def opnorm_one(A) -> float:
    """||A||_1: the maximum absolute column sum. Exact."""
    arr = _as_matrix(A)
    return float(np.abs(arr).sum(axis=0).max())


def opnorm_inf(A) -> float:
    """||A||_inf: the maximum absolute row sum. Exact."""
    arr = _as_matrix(A)
    return float(np.abs(arr).sum(axis=1).max())


def _two_norm_fallback_bracket(arr: np.ndarray) -> NormEstimate:
    # Certified lower: best column two-norm, i.e. the ratio at a basis vector.
    lower = float(np.sqrt((arr * arr).sum(axis=0).max())) if arr.size else 0.0
    fro = float(np.sqrt((arr * arr).sum()))
    upper = min(fro, math.sqrt(opnorm_one(arr) * opnorm_inf(arr)))
    upper = max(upper, lower)
    return NormEstimate(lower, upper, exact=False, method="two-norm fallback bracket")


def opnorm_two(A) -> float:
    """||A||_2: the largest singular value, via the smaller Gram matrix.

    Dense symmetric eigensolve of A^T A (or A A^T, whichever is smaller);
    sizes above MAX_DENSE_DIM are rejected. If the eigensolver fails, an
    OpNormError carrying a certified fallback bracket is raised.
    """
    arr = _as_matrix(A)
    m, n = arr.shape
    if max(m, n) > MAX_DENSE_DIM:
        raise ValueError(f"matrix side {max(m, n)} exceeds dense limit {MAX_DENSE_DIM}")
    gram = arr.T @ arr if n <= m else arr @ arr.T
    try:
        top = float(np.linalg.eigvalsh(gram)[-1])
    except np.linalg.LinAlgError as exc:
        raise OpNormError(
            f"symmetric eigensolve failed: {exc}", _two_norm_fallback_bracket(arr)
        ) from exc
    return math.sqrt(max(top, 0.0))


def _two_norm_witness(arr: np.ndarray) -> np.ndarray:
    """A unit vector realizing ||A||_2 to machine precision."""
    m, n = arr.shape
    if n <= m:
        _, vecs = np.linalg.eigh(arr.T @ arr)
        wit = vecs[:, -1]
    else:
        _, vecs = np.linalg.eigh(arr @ arr.T)
        u = vecs[:, -1]
        wit = arr.T @ u
        norm = np.linalg.norm(wit)
        if norm == 0.0:  # A == 0; any direction realizes the norm
            wit = np.zeros(n)
            wit[0] = 1.0
        else:
            wit = wit / norm
    return wit


def interpolation_bound(A, p: Union[NormOrder, float, str]) -> float:
    """Upper bound ||A||_1^(1/p) * ||A||_inf^(1-1/p) on ||A||_p.

    With the conventions 1/inf = 0 and t^0 = 1 this reduces to the exact
    value at p = 1 and p = inf.
    """
    order = NormOrder.of(p)
    one = opnorm_one(A)
    if order.is_one:
        return one
    inf = opnorm_inf(A)
    if order.is_infinity:
        return inf
    if one == 0.0 or inf == 0.0:
        return 0.0
    inv_p = 1.0 / order.p
    return one**inv_p * inf ** (1.0 - inv_p)


def _column_pnorms(V: np.ndarray, p: float) -> np.ndarray:
    absV = np.abs(V)
    m = absV.max(axis=0)
    safe = np.where(m == 0.0, 1.0, m)
    return m * ((absV / safe) ** p).sum(axis=0) ** (1.0 / p)


def _dual_scale(U: np.ndarray, expo: float) -> np.ndarray:
    # sign(u) * |u|^expo columnwise, computed scale-invariantly; zero stays zero.
    absU = np.abs(U)
    m = absU.max(axis=0)
    safe = np.where(m == 0.0, 1.0, m)
    return np.sign(U) * (absU / safe) ** expo


def _restart_block(n: int, rng: np.random.Generator) -> np.ndarray:
    """Fixed restart seeds: basis vectors, all-ones, then random signs."""
    cols = []
    for j in range(min(n, _BOYD_RESTARTS - 2)):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append(e)
    cols.append(np.ones(n))
    while len(cols) < _BOYD_RESTARTS:
        cols.append(rng.choice([-1.0, 1.0], size=n))
    return np.column_stack(cols)


def _boyd_lower(
    arr: np.ndarray, p: float, V0: np.ndarray, max_iter: int = _BOYD_MAX_ITER
) -> tuple[float, np.ndarray]:
    """Best realized ratio ||A v||_p over the restart columns of V0.

    One dual-norm power sweep per iteration, all restarts advanced as a
    block: u = A v, then v <- psi_q(A^T psi_p(u)) normalized in lp, where
    psi_r(t) = sign(t) |t|^(r-1). Returns (ratio, witness) with the ratio
    recomputed from the witness so it is reproducible to the last ulp.
    """
    norms = _column_pnorms(V0, p)
    V = V0 / np.where(norms == 0.0, 1.0, norms)
    best_ratio = -1.0
    best_witness = V[:, 0].copy()
    stalled = 0
    for _ in range(max_iter):
        U = arr @ V
        ratios = _column_pnorms(U, p)
        j = int(np.argmax(ratios))
        if ratios[j] > best_ratio + _BOYD_STALL_TOL * max(1.0, best_ratio):
            best_ratio = float(ratios[j])
            best_witness = V[:, j].copy()
            stalled = 0
        else:
            stalled += 1
            if stalled >= 2:
                break
        Z = arr.T @ _dual_scale(U, p - 1.0)
        V_next = _dual_scale(Z, 1.0 / (p - 1.0))
        norms = _column_pnorms(V_next, p)
        dead = norms == 0.0
        V = np.where(dead, V, V_next / np.where(dead, 1.0, norms))
    lower = vector_norm(arr @ best_witness, p) / vector_norm(best_witness, p)
    return lower, best_witness


def opnorm_p_estimate(A, p: Union[NormOrder, float, str], seed: int = 0) -> NormEstimate:
    """Certified bracket for ||A||_p.

    Canonical orders delegate to the exact routines. For general p the
    lower bound is the best ratio over _BOYD_RESTARTS deterministic power
    iteration restarts (seeded by `seed`) and the upper bound is the
    interpolation bound; `exact` is set when they agree to relative 1e-9.
    """
    order = NormOrder.of(p)
    arr = _as_matrix(A)
    if order.is_one:
        val = opnorm_one(arr)
        j = int(np.abs(arr).sum(axis=0).argmax())
        wit = np.zeros(arr.shape[1])
        wit[j] = 1.0
        return NormEstimate(val, val, exact=True, method="column sums", witness=wit)
    if order.is_infinity:
        val = opnorm_inf(arr)
        i = int(np.abs(arr).sum(axis=1).argmax())
        wit = np.sign(arr[i])
        wit[wit == 0.0] = 1.0
        return NormEstimate(val, val, exact=True, method="row sums", witness=wit)
    if order.is_two:
        wit = _two_norm_witness(arr)
        val = vector_norm(arr @ wit, 2.0) / vector_norm(wit, 2.0)
        return NormEstimate(val, val, exact=True, method="gram eigensolve", witness=wit)

    rng = np.random.default_rng(seed)
    lower, witness = _boyd_lower(arr, order.p, _restart_block(arr.shape[1], rng))
    upper = interpolation_bound(arr, order)
    if lower > upper:
        # The two ends coincide mathematically here; reconcile rounding noise.
        if lower - upper <= 1e-9 * max(1.0, upper):
            upper = lower
        else:
            raise OpNormError(
                f"certified ratio {lower} exceeds interpolation bound {upper}",
                NormEstimate(0.0, upper, exact=False, method="inconsistent"),
            )
    exact = (upper - lower) <= 1e-9 * upper if upper > 0.0 else True
    if exact:
        # Collapse onto the witnessed end so `lower` stays a realized ratio.
        upper = lower
    return NormEstimate(
        lower, upper, exact=exact, method="power iteration + interpolation", witness=witness
    )
