"""Exact spectral and mixing-time analysis of the detectors' Markov chains.

Everything here works on the dense 2**n x 2**n transition matrix of the
single-site resampling chain, so dimensions are capped (n <= 14 for the
matrix itself, n <= 12 for mixing times).  Reversibility is exploited
throughout: the symmetrization sqrt(P o P^T) has the same spectrum as P
and is numerically stable even when the stationary law spans hundreds of
decades.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.special import expit, logsumexp

from . import localmin
from ._conductance import (  # noqa: F401  (re-exported analysis helpers)
    conductance_of,
    exact_min_conductance,
    sampled_min_conductance,
)
from .model import (
    EXHAUSTIVE_CAP,
    DimensionCapError,
    MimoInstance,
    neighbor_energies,
    residual_energy,
    state_energies,
)

MATRIX_CAP = 14
TV_CAP = 12

SQUARED_NORM = "squared-norm"
NORM_2 = "norm-2"


@dataclass(frozen=True)
class TransitionMatrix:
    """Dense row-stochastic matrix of the chain under canonical encoding."""

    n: int
    alpha: float
    variant: str
    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)


@dataclass(frozen=True)
class SpectralReport:
    lambda2: float
    gap: float
    relaxation_time: float
    bottleneck: float | None = None
    tmix_upper_empirical: int | None = None
    epsilon: float | None = None


def report_to_json(report: SpectralReport) -> str:
    import dataclasses
    import json

    return json.dumps(dataclasses.asdict(report), indent=2)


class BottleneckBound(NamedTuple):
    gamma_formula: float
    gamma_upper: float
    tmix_lower: float
    epsilon: float


def _gibbs_levels(instance: MimoInstance, variant: str, cap: int) -> np.ndarray:
    """Per-state exponent levels: energy, or root energy for norm-2."""
    energies = state_energies(instance, cap=cap)
    if variant == SQUARED_NORM:
        return energies
    if variant == NORM_2:
        return np.sqrt(energies)
    raise ValueError(f"unknown variant {variant!r}")


def build_transition_matrix(
    instance: MimoInstance,
    alpha: float,
    variant: str = SQUARED_NORM,
    cap: int = MATRIX_CAP,
) -> TransitionMatrix:
    """Dense transition matrix of the single-site resampling chain.

    Entry (a -> b) for one-bit neighbors is (1/n) times the conditional
    probability of adopting b's symbol at the differing position; the
    diagonal carries the remaining mass (resampling can reproduce the
    current symbol), which also makes the chain aperiodic.

    Raises:
        DimensionCapError: n exceeds the dense-matrix cap.
    """
    n = instance.n
    if n > cap:
        raise DimensionCapError(f"n={n} exceeds dense transition matrix cap {cap}")
    levels = _gibbs_levels(instance, variant, cap)
    size = 1 << n
    idx = np.arange(size)
    P = np.zeros((size, size))
    inv_temp = 1.0 / (2.0 * alpha * alpha)
    for j in range(n):
        nb = idx ^ (1 << j)
        P[idx, nb] = expit(-(levels[nb] - levels[idx]) * inv_temp) / n
    P[idx, idx] = 1.0 - P.sum(axis=1)
    return TransitionMatrix(n=n, alpha=alpha, variant=variant, entries=P)


def stationary_distribution(
    instance: MimoInstance,
    alpha: float,
    variant: str = SQUARED_NORM,
    cap: int = EXHAUSTIVE_CAP,
) -> np.ndarray:
    """Normalized Gibbs law over all states, computed in log space."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    levels = _gibbs_levels(instance, variant, cap)
    logw = -levels / (2.0 * alpha * alpha)
    return np.exp(logw - logsumexp(logw))


def _symmetrized(entries: np.ndarray) -> np.ndarray:
    # sqrt(P_ab * P_ba) equals sqrt(pi_a/pi_b) * P_ab under detailed balance
    # but never forms the (possibly enormous) pi ratios
    return np.sqrt(entries * entries.T)


def spectral_gap(P: TransitionMatrix, pi: np.ndarray) -> SpectralReport:
    """Second eigenvalue and gap of a reversible transition matrix.

    Works on the similarity-symmetrized matrix, whose top eigenvalue must
    come out as 1 (checked to 1e-8).

    Raises:
        RuntimeError: eigensolver failed the top-eigenvalue sanity check.
    """
    A = _symmetrized(P.entries)
    lams = scipy.linalg.eigh(A, eigvals_only=True)
    if abs(lams[-1] - 1.0) > 1e-8:
        raise RuntimeError(f"top eigenvalue {lams[-1]!r} differs from 1 beyond 1e-8")
    lambda2 = float(lams[-2])
    gap = 1.0 - lambda2
    return SpectralReport(
        lambda2=lambda2,
        gap=gap,
        relaxation_time=1.0 / gap if gap > 0 else np.inf,
    )


def bottleneck_singleton(
    instance: MimoInstance,
    alpha: float,
    x_local: np.ndarray,
    variant: str = SQUARED_NORM,
    epsilon: float = 0.25,
    verify: bool = True,
) -> BottleneckBound:
    """Spectral-gap upper bound and mixing-time lower bound from one local
    minimum, taken as a singleton bottleneck set.

    ``gamma_formula = (2/n) sum_j 1/(1 + exp((E_j - E)/(2 alpha^2)))`` over
    the n one-flip neighbors; the closed-form upper bound replaces the sum
    by its largest term via the smallest neighbor gap.  The implied lower
    bound is ``t_mix(eps) >= (1/gamma - 1) ln(1/(2 eps))``.

    Raises:
        ValueError: x_local is not a local minimum (unless verify=False).
    """
    if verify and not localmin.is_local_minimum(instance, x_local):
        raise ValueError("x_local is not a local minimum of this instance")
    e_local = residual_energy(instance, x_local)
    e_neighbors = neighbor_energies(instance, x_local)
    if variant == NORM_2:
        e_local = float(np.sqrt(e_local))
        e_neighbors = np.sqrt(e_neighbors)
    elif variant != SQUARED_NORM:
        raise ValueError(f"unknown variant {variant!r}")
    inv_temp = 1.0 / (2.0 * alpha * alpha)
    terms = expit(-(e_neighbors - e_local) * inv_temp)
    gamma = float(2.0 * terms.mean())
    gamma_upper = float(2.0 * expit(-(e_neighbors.min() - e_local) * inv_temp))
    tmix_lower = (1.0 / gamma - 1.0) * np.log(1.0 / (2.0 * epsilon)) if gamma > 0 else np.inf
    return BottleneckBound(gamma, gamma_upper, float(tmix_lower), epsilon)


def worst_case_tv(M: np.ndarray, pi: np.ndarray) -> float:
    """Max over start states of the TV distance between M's rows and pi."""
    return 0.5 * float(np.abs(M - pi[None, :]).sum(axis=1).max())


def tv_mixing_time(
    P: TransitionMatrix,
    pi: np.ndarray,
    epsilon: float = 0.25,
    cap: int = 10**6,
) -> int | None:
    """Smallest t >= 0 with worst-case total variation to pi at most eps.

    Exact: tracks the full distribution from every start state.  Returns
    None when t would exceed ``cap``.  When the stationary law is not too
    skewed, P^t is reconstructed from one symmetric eigendecomposition and
    the smallest t found by monotone binary search; heavily skewed but
    fast-mixing chains fall back to stepwise multiplication, and slow ones
    are screened out by the eigenvalue lower bound d(t) >= |lam|^t / 2.

    Raises:
        DimensionCapError: n exceeds the TV cap.
    """
    if P.n > TV_CAP:
        raise DimensionCapError(f"n={P.n} exceeds exact TV cap {TV_CAP}")
    size = P.entries.shape[0]
    eye = np.eye(size)
    if worst_case_tv(eye, pi) <= epsilon:
        return 0
    A = _symmetrized(P.entries)
    lams, U = scipy.linalg.eigh(A)
    lam_star = max(abs(float(lams[-2])), abs(float(lams[0])))
    if lam_star > 0 and 0.5 * lam_star**cap > epsilon:
        return None

    pos = pi > 0
    ratio = float(pi[pos].max() / pi[pos].min()) if pos.any() else np.inf
    if ratio < 1e10 and pos.all():
        sq = np.sqrt(pi)
        left = U / sq[:, None]
        right = U * sq[:, None]

        def tv_at(t: int) -> float:
            M = (left * np.power(lams, t)) @ right.T
            return worst_case_tv(M, pi)

        hi = 1
        while tv_at(hi) > epsilon:
            hi *= 2
            if hi >= cap:
                if tv_at(cap) > epsilon:
                    return None
                hi = cap
                break
        lo = hi // 2  # tv(lo) > eps (or lo = 0), tv(hi) <= eps
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if tv_at(mid) <= epsilon:
                hi = mid
            else:
                lo = mid
        return hi

    M = P.entries.copy()
    t = 1
    while t <= cap:
        if worst_case_tv(M, pi) <= epsilon:
            return t
        M = M @ P.entries
        t += 1
    return None


def is_orthogonal_columns(instance: MimoInstance, tol: float = 1e-10) -> bool:
    """True when the channel columns are pairwise orthogonal within tol."""
    h = instance.channel
    gram = h.T @ h
    norms = np.sqrt(np.diag(gram))
    off = gram - np.diag(np.diag(gram))
    return bool(np.all(np.abs(off) <= tol * np.outer(norms, norms)))


def coupling_mixing_estimate(
    instance: MimoInstance,
    alpha: float,
    trials: int = 1000,
    seed: int = 0,
    variant: str = SQUARED_NORM,
    quantile: float = 1.0 - 1.0 / np.e,
    max_steps: int | None = None,
) -> int:
    """Empirical coalescence-time quantile of two coupled chains.

    Runs pairs of chains from the antipodal all-minus/all-plus starts with
    shared randomness (same position index and same uniform each step) and
    returns the requested quantile of the first-agreement time.  For
    orthogonal-column channels the per-position law is state-independent,
    so a position agrees forever once resampled and the coalescence time is
    the coupon-collector time; the estimate upper-bounds the TV mixing
    time.  On other channels the result is a heuristic.
    """
    from .detectors import conditional_flip_probability, init_chain, update_residual

    n = instance.n
    if max_steps is None:
        max_steps = int(40 * (n * np.log(max(n, 2)) + n)) + 40
    rng = np.random.default_rng(seed)
    times = np.empty(trials, dtype=np.int64)
    for trial in range(trials):
        c1 = init_chain(instance, np.full(n, -1, dtype=np.int8), rng)
        c2 = init_chain(instance, np.ones(n, dtype=np.int8), rng)
        t_hit = max_steps
        for step in range(1, max_steps + 1):
            j = int(rng.integers(n))
            u = float(rng.random())
            for chain in (c1, c2):
                p_plus = conditional_flip_probability(chain, instance, j, alpha, variant)
                update_residual(chain, instance, j, 1 if u < p_plus else -1)
            if np.array_equal(c1.x, c2.x):
                t_hit = step
                break
        times[trial] = t_hit
    times.sort()
    rank = min(trials - 1, max(0, int(np.ceil(quantile * trials)) - 1))
    return int(times[rank])
