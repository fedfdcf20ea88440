"""Detection, enumeration and construction of local minima.

A local minimum is a state that is not a global minimizer yet has strictly
larger residual energy at every one-flip neighbor.  Strict inequalities
throughout: exact neighbor-energy ties (measure zero for continuous
ensembles) disqualify local-minimum status.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import (
    EXHAUSTIVE_CAP,
    MimoInstance,
    as_spins,
    index_to_spins,
    neighbor_energies,
    residual_energy,
    state_energies,
)

FlipSet = frozenset[int]


@dataclass(frozen=True)
class LocalMinimaReport:
    instance_seed: int
    n: int
    snr: float
    count: int
    minima: tuple[tuple[np.ndarray, float], ...]
    global_min: tuple[np.ndarray, float]

    def energies(self) -> np.ndarray:
        return np.array([e for _, e in self.minima])


def is_local_minimum(
    instance: MimoInstance,
    x: Sequence[int] | np.ndarray,
    cap: int = EXHAUSTIVE_CAP,
    global_energy: float | None = None,
) -> bool:
    """True iff x is not a global minimizer and beats all one-flip neighbors.

    Globality is verified exhaustively for n <= cap.  Above the cap the
    caller must pass the best-known energy as ``global_energy``; the result
    is then only as rigorous as that bound.
    """
    xs = as_spins(x, instance.n)
    energy = residual_energy(instance, xs)
    if not np.all(neighbor_energies(instance, xs) > energy):
        return False
    if global_energy is None:
        global_energy = float(state_energies(instance, cap=cap).min())
    return energy > global_energy


def enumerate_local_minima(
    instance: MimoInstance, cap: int = EXHAUSTIVE_CAP
) -> LocalMinimaReport:
    """Exact enumeration of all local minima by full state sweep.

    Neighbor comparisons run vectorized over the canonical-index XOR
    structure, one position at a time.

    Raises:
        DimensionCapError: n exceeds the cap.
    """
    n = instance.n
    energies = state_energies(instance, cap=cap)
    idx = np.arange(1 << n)
    strict = np.ones(1 << n, dtype=bool)
    for j in range(n):
        strict &= energies < energies[idx ^ (1 << j)]
    global_idx = int(np.argmin(energies))
    global_energy = float(energies[global_idx])
    strict &= energies > global_energy
    minima_idx = np.flatnonzero(strict)
    minima = tuple(
        (index_to_spins(int(s), n), float(energies[s])) for s in minima_idx
    )
    return LocalMinimaReport(
        instance_seed=instance.seed,
        n=n,
        snr=instance.snr,
        count=len(minima),
        minima=minima,
        global_min=(index_to_spins(global_idx, n), global_energy),
    )


def check_flipset_condition(instance: MimoInstance, K: Iterable[int]) -> bool:
    """Inequality families characterizing a local minimum via its flip set.

    For the transmitted all-minus-one vector with +1 exactly on K, with
    scaled-channel columns h_i and noise v, the candidate beats all its
    neighbors iff

        h_i . (sum_{j in K} h_j - v/2) <  ||h_i||^2 / 2   for i in K
        h_i . (sum_{j in K} h_j - v/2) > -||h_i||^2 / 2   for i not in K

    Combined with a not-global check this is equivalent to
    :func:`is_local_minimum` for the vector induced by K.

    Raises:
        ValueError: the instance was not generated with x_true = -1.
    """
    if not np.all(instance.x_true == -1):
        raise ValueError("flip-set condition requires x_true = all-minus-one")
    k_mask = np.zeros(instance.n, dtype=bool)
    k_idx = np.fromiter(K, dtype=np.int64) if not isinstance(K, np.ndarray) else K
    if len(k_idx):
        if k_idx.min() < 0 or k_idx.max() >= instance.n:
            raise ValueError("flip set contains out-of-range positions")
        k_mask[k_idx] = True
    h = instance.scaled_channel
    v = h[:, k_mask].sum(axis=1) - 0.5 * instance.noise
    dots = h.T @ v
    half_norms = 0.5 * instance.column_norms_sq
    inside = np.all(dots[k_mask] < half_norms[k_mask]) if k_mask.any() else True
    outside = np.all(dots[~k_mask] > -half_norms[~k_mask]) if (~k_mask).any() else True
    return bool(inside and outside)


def flipset_vector(n: int, K: Iterable[int]) -> np.ndarray:
    """Spin vector with +1 exactly on the flip set K, -1 elsewhere."""
    x = np.full(n, -1, dtype=np.int8)
    for i in K:
        x[i] = 1
    return x


def construct_exponential_instance(n: int, epsilon: float) -> MimoInstance:
    """Noise-free instance with at least 2**(n/2) - 1 local minima.

    The scaled channel has standard-basis vectors as its first n/2 columns
    and column i + n/2 = -(1 + eps) times column i; y is the image of the
    all-minus-one vector.  Every "paired" state (positions i and i + n/2
    equal) except the global minimum is a local minimum, and a flip at
    position i / i+n/2 of a doubly -1 (resp. doubly +1) pair raises the
    energy by exactly 4 / 4(1+eps)^2 (resp. 4(1+eps)^2 - 4eps^2 / 4 - 4eps^2).

    snr is set to n so the SNR scale factor is exactly 1 and the scaled
    channel equals the construction.
    """
    if n % 2 != 0 or n < 2:
        raise ValueError(f"construction needs even n >= 2, got {n}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    half = n // 2
    basis = np.eye(n, half)
    channel = np.hstack([basis, -(1.0 + epsilon) * basis])
    x_true = np.full(n, -1, dtype=np.int8)
    received = channel @ x_true.astype(np.float64)
    inst = MimoInstance(
        n=n,
        snr=float(n),
        seed=0,
        kind=f"exponential-local-minima(epsilon={epsilon!r})",
        channel=channel,
        scaled_channel=channel.copy(),
        x_true=x_true,
        noise=np.zeros(n),
        received=received,
    )
    return inst


def paired_states(n: int) -> np.ndarray:
    """Canonical indices of the 2**(n/2) paired states of the construction."""
    half = n // 2
    firsts = np.arange(1 << half, dtype=np.int64)
    return firsts | (firsts << half)


def closed_form_2x2_gaussian() -> float:
    """Probability that a noise-free 2x2 i.i.d. Gaussian channel has a
    local minimum: 1/3 - 1/sqrt(5) + 2 arctan(sqrt(5/3)) / (sqrt(5) pi)."""
    return 1.0 / 3.0 - 1.0 / math.sqrt(5.0) + 2.0 * math.atan(math.sqrt(5.0 / 3.0)) / (
        math.sqrt(5.0) * math.pi
    )


def prob_local_min_2x2(
    kind: str, trials: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo probability that (+1, +1) is a local minimum at 2x2.

    Noise-free setup with the all-minus-one vector transmitted; the only
    candidate is (+1, +1), which is a local minimum iff
    ``h1 . h2 < -max(||h1||^2, ||h2||^2) / 2``.  For ``kind='uniform-columns'``
    both columns are unit vectors with independent uniform angles (the
    condition reduces to cos(theta) < -1/2); ``kind='gaussian'`` draws
    i.i.d. standard normal entries.

    Returns:
        (estimate, standard error)
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "uniform-columns":
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(trials, 2))
        cos_between = np.cos(theta[:, 0] - theta[:, 1])
        hits = cos_between < -0.5
    elif kind == "gaussian":
        h = rng.standard_normal((trials, 2, 2))
        dot = np.einsum("ti,ti->t", h[:, :, 0], h[:, :, 1])
        n1 = np.einsum("ti,ti->t", h[:, :, 0], h[:, :, 0])
        n2 = np.einsum("ti,ti->t", h[:, :, 1], h[:, :, 1])
        hits = dot < -0.5 * np.maximum(n1, n2)
    else:
        raise ValueError("kind must be 'uniform-columns' or 'gaussian'")
    p = float(hits.mean())
    stderr = math.sqrt(max(p * (1.0 - p), 1e-300) / trials)
    return p, stderr


def report_to_json(report: LocalMinimaReport) -> str:
    payload = {
        "instance_seed": report.instance_seed,
        "n": report.n,
        "snr": report.snr,
        "count": report.count,
        "minima": [
            {"x": x.astype(int).tolist(), "energy": e} for x, e in report.minima
        ],
        "global_min": {
            "x": report.global_min[0].astype(int).tolist(),
            "energy": report.global_min[1],
        },
    }
    return json.dumps(payload, indent=2)
