"""Empirical Lipschitz estimation of the softmax from sampled secant ratios.

The estimate over a dataset x_1..x_M is

    max over inputs i and trials of  ||sig(x_i + d) - sig(x_i)||_p / ||d||_p

with perturbations d of prescribed p-norm epsilon. Attention score matrices
are handled row-wise, matching how softmax is applied inside attention.

Reproducibility contract: every (input, trial, epsilon) triple draws from
its own generator seeded by `subseed`, so results are bit-identical no
matter how the work is partitioned or ordered. Ties in the maximum break
toward the lowest input index, then the lowest trial index.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from softlip.core import Logits, Temperature, jacobian, softmax
from softlip.lipschitz import _top_eigenvector
from softlip.opnorm import NormOrder, vector_norm

MODE_RANDOM = "random-gaussian-normalized"
MODE_TOP_EIGENVECTOR = "top-eigenvector"

_MASK64 = (1 << 64) - 1

#: Stand-in generator for the deterministic top-eigenvector mode, which
#: never draws from it. The direction uses the unit-temperature Jacobian,
#: matching the near-attaining example construction.
_UNUSED_RNG = np.random.default_rng(0)


def _mix64(z: int) -> int:
    """splitmix64 finalizer: a fixed 64-bit bijective mix."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def subseed(seed: int, input_index: int, trial_index: int, epsilon_index: int) -> int:
    """Per-trial seed: fold the indices into the base seed with splitmix64.

    h = seed & (2^64 - 1); then for v in (input_index, trial_index,
    epsilon_index): h = mix64(h ^ mix64(v)), where mix64 is the splitmix64
    finalizer above. The result feeds numpy's default generator directly.
    """
    h = seed & _MASK64
    for v in (input_index, trial_index, epsilon_index):
        h = _mix64(h ^ _mix64(v & _MASK64))
    return h


@dataclass(frozen=True)
class PerturbationSpec:
    """How to perturb each input: norm order, magnitude, trials, law, seed."""

    p: NormOrder
    epsilon: float
    trials_per_input: int
    mode: str = MODE_RANDOM
    seed: int = 0
    aggregate: str = "max"

    def __post_init__(self):
        object.__setattr__(self, "p", NormOrder.of(self.p))
        if not self.epsilon > 0.0:
            raise ValueError("perturbation magnitude epsilon must be positive")
        if self.trials_per_input < 1:
            raise ValueError("need at least one trial per input")
        if self.mode not in (MODE_RANDOM, MODE_TOP_EIGENVECTOR):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        if self.aggregate not in ("max", "mean"):
            raise ValueError(f"aggregate must be 'max' or 'mean', got {self.aggregate!r}")


@dataclass(frozen=True)
class EstimateReport:
    """Result of an empirical Lipschitz run.

    `empirical_lp` is the aggregated ratio (max by default). The argmax
    provenance always points at the largest recorded ratio, so the value is
    reproducible by re-perturbing that single (input, trial) pair.
    `bound_exceeded` flags empirical_lp > lam/2 + 1e-9, which would
    contradict the global bound; it is a sanity flag, never an error.
    """

    empirical_lp: float
    argmax_input_index: int
    argmax_trial: int
    argmax_epsilon_index: int
    per_epsilon_table: tuple
    lam: float
    p: NormOrder
    inputs_count: int
    trials_per_input: int
    mode: str
    seed: int
    aggregate: str
    clamp_events: int
    bound_exceeded: bool


def sample_perturbation(
    n: int,
    spec: PerturbationSpec,
    rng: np.random.Generator,
    base: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Draw one perturbation of exact p-norm epsilon.

    Random mode draws a standard normal direction and rescales it onto the
    epsilon sphere of the spec's norm (redrawing the measure-zero all-zero
    sample). Top-eigenvector mode ignores the generator and returns epsilon
    times the unit top eigenvector of the Jacobian at `base`.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if spec.mode == MODE_TOP_EIGENVECTOR:
        if base is None:
            raise ValueError("top-eigenvector mode needs the base input")
        v = _top_eigenvector(jacobian(softmax(base), 1.0).matrix)
        return spec.epsilon * v
    g = rng.standard_normal(n)
    while not g.any():
        g = rng.standard_normal(n)
    return g * (spec.epsilon / vector_norm(g, spec.p))


def _as_inputs(inputs) -> np.ndarray:
    rows = [Logits.of(x).values for x in inputs]
    if not rows:
        raise ValueError("need at least one input vector")
    n = rows[0].size
    if any(r.size != n for r in rows):
        raise ValueError("all input vectors must have the same length")
    return np.vstack(rows)


def empirical_lp(
    inputs: Sequence,
    t: Union[Temperature, float],
    spec: PerturbationSpec,
    epsilon_index: int = 0,
) -> EstimateReport:
    """Empirical Lipschitz constant over a dataset of input vectors.

    Every (input, trial) pair perturbs independently from its subseed and
    contributes the secant ratio with the realized ||d||_p in the
    denominator. Pass `epsilon_index` to reproduce a single row of an
    epsilon sweep.
    """
    lam = Temperature.of(t).lam
    data = _as_inputs(inputs)
    n = data.shape[1]
    best = -1.0
    best_at = (0, 0)
    total = 0.0
    count = 0
    clamps = 0
    for i, x in enumerate(data):
        sx = softmax(x, lam)
        clamps += int(sx.clamped)
        eig_dir = None
        if spec.mode == MODE_TOP_EIGENVECTOR:
            eig_dir = sample_perturbation(n, spec, _UNUSED_RNG, base=x)
        for trial in range(spec.trials_per_input):
            if eig_dir is not None:
                delta = eig_dir
            else:
                rng = np.random.default_rng(subseed(spec.seed, i, trial, epsilon_index))
                delta = sample_perturbation(n, spec, rng)
            sy = softmax(x + delta, lam)
            clamps += int(sy.clamped)
            ratio = vector_norm(sy.probs - sx.probs, spec.p) / vector_norm(delta, spec.p)
            total += ratio
            count += 1
            if ratio > best:
                best = ratio
                best_at = (i, trial)
    value = best if spec.aggregate == "max" else total / count
    return EstimateReport(
        empirical_lp=value,
        argmax_input_index=best_at[0],
        argmax_trial=best_at[1],
        argmax_epsilon_index=epsilon_index,
        per_epsilon_table=((spec.epsilon, value),),
        lam=lam,
        p=spec.p,
        inputs_count=data.shape[0],
        trials_per_input=spec.trials_per_input,
        mode=spec.mode,
        seed=spec.seed,
        aggregate=spec.aggregate,
        clamp_events=clamps,
        bound_exceeded=value > lam / 2.0 + 1e-9,
    )


def empirical_lp_rowwise(
    score_matrix, t: Union[Temperature, float], spec: PerturbationSpec
) -> EstimateReport:
    """Empirical constant of a score matrix, treating each row as one input.

    This matches attention, where softmax normalizes score rows. Any
    rectangular matrix works as long as rows have at least two entries.
    """
    arr = np.asarray(score_matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D score matrix, got shape {arr.shape}")
    if arr.shape[1] < 2:
        raise ValueError("score rows need at least 2 columns for a softmax to vary")
    return empirical_lp(list(arr), t, spec)


def epsilon_sweep(
    inputs: Sequence,
    t: Union[Temperature, float],
    base_spec: PerturbationSpec,
    epsilons: Sequence[float],
) -> EstimateReport:
    """Run the estimator at several magnitudes and tabulate the results.

    Row j of the table equals empirical_lp with epsilon_index=j, so every
    row is individually reproducible. The report's headline value and
    provenance come from the row with the largest aggregate.
    """
    if not len(epsilons):
        raise ValueError("need at least one epsilon")
    if any(e <= 0.0 for e in epsilons):
        raise ValueError("epsilons must be positive")
    table = []
    reports = []
    best_j = 0
    for j, eps in enumerate(epsilons):
        report = empirical_lp(inputs, t, replace(base_spec, epsilon=float(eps)), epsilon_index=j)
        reports.append(report)
        table.append((float(eps), report.empirical_lp))
        if report.empirical_lp > reports[best_j].empirical_lp:
            best_j = j
    return replace(
        reports[best_j],
        per_epsilon_table=tuple(table),
        argmax_epsilon_index=best_j,
        clamp_events=sum(r.clamp_events for r in reports),
        bound_exceeded=any(r.bound_exceeded for r in reports),
    )
