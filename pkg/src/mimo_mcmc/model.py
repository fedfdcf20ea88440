"""Integer least-squares problem instances over the +/-1 hypercube.

The signal model is ``y = sqrt(snr/n) * H @ x + noise`` with an n x n real
channel ``H``, a spin vector ``x`` (entries in {-1, +1}) and standard normal
noise.  SNR is linear everywhere in this package; dB conversion happens only
at the CLI boundary.

Canonical state encoding: state index ``s`` in ``[0, 2**n)`` maps bit ``i``
(least significant bit = position 0) to the symbol at position ``i``, with
bit 0 -> -1 and bit 1 -> +1.  All transition matrices, enumeration routines
and tie-breaking rules share this convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

GAUSSIAN_IID = "gaussian-iid"
ORTHOGONAL_COLUMNS = "orthogonal-columns"
EXPLICIT = "explicit"
EXPONENTIAL_LOCAL_MINIMA = "exponential-local-minima"

#: Default cap on dimensions for exhaustive 2**n sweeps.
EXHAUSTIVE_CAP = 22

_ENERGY_CHUNK = 1 << 14


class DimensionCapError(ValueError):
    """Raised when an exhaustive operation is requested above its cap."""


@dataclass(frozen=True)
class ChannelKind:
    """Channel ensemble selector for :func:`generate_instance`.

    ``matrix`` is only used by the explicit kind, ``epsilon`` only by the
    exponential-local-minima construction.
    """

    name: str
    matrix: np.ndarray | None = None
    epsilon: float | None = None

    @staticmethod
    def gaussian_iid() -> "ChannelKind":
        return ChannelKind(GAUSSIAN_IID)

    @staticmethod
    def orthogonal_columns() -> "ChannelKind":
        return ChannelKind(ORTHOGONAL_COLUMNS)

    @staticmethod
    def explicit(matrix: np.ndarray) -> "ChannelKind":
        return ChannelKind(EXPLICIT, matrix=np.asarray(matrix, dtype=np.float64))

    @staticmethod
    def exponential_local_minima(epsilon: float) -> "ChannelKind":
        if not 0.0 < epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
        return ChannelKind(EXPONENTIAL_LOCAL_MINIMA, epsilon=float(epsilon))

    def label(self) -> str:
        if self.name == EXPONENTIAL_LOCAL_MINIMA:
            return f"{self.name}(epsilon={self.epsilon!r})"
        return self.name


@dataclass(frozen=True)
class MimoInstance:
    """One detection problem: channel, transmitted vector, noise, received.

    ``scaled_channel`` is ``sqrt(snr/n) * channel``; the SNR scaling lives
    entirely in the channel and the noise is always unit variance.  Arrays
    are frozen (read-only) after construction and safe to share across
    threads.
    """

    n: int
    snr: float
    seed: int
    kind: str
    channel: np.ndarray
    scaled_channel: np.ndarray
    x_true: np.ndarray
    noise: np.ndarray
    received: np.ndarray

    def __post_init__(self):
        for name in ("channel", "scaled_channel", "x_true", "noise", "received"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def column_norms_sq(self) -> np.ndarray:
        """Squared Euclidean norms of the scaled-channel columns."""
        return np.einsum("ij,ij->j", self.scaled_channel, self.scaled_channel)


def as_spins(x: Sequence[int] | np.ndarray, n: int | None = None) -> np.ndarray:
    """Validate and return a spin vector as an int8 array of -1/+1 entries."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("spin vector must be a non-empty 1-d sequence")
    if n is not None and arr.size != n:
        raise ValueError(f"spin vector has length {arr.size}, expected {n}")
    out = arr.astype(np.int8)
    if not np.all(np.abs(out) == 1) or not np.array_equal(out, arr):
        raise ValueError("spin vector entries must be exactly -1 or +1")
    return out


def index_to_spins(state: int, n: int) -> np.ndarray:
    """Decode a canonical state index into a spin vector."""
    if not 0 <= state < (1 << n):
        raise ValueError(f"state index {state} out of range for n={n}")
    bits = (state >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def spins_to_index(x: np.ndarray) -> int:
    """Encode a spin vector into its canonical state index."""
    bits = (np.asarray(x) > 0).astype(np.uint64)
    return int(bits @ (np.uint64(1) << np.arange(len(bits), dtype=np.uint64)))


def spin_matrix(indices: np.ndarray, n: int) -> np.ndarray:
    """Decode many state indices at once; rows are spin vectors (int8)."""
    bits = (indices[:, None] >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def _make_instance(n, snr, seed, kind_label, channel, x_true, noise) -> MimoInstance:
    scaled = np.sqrt(snr / n) * channel
    received = scaled @ x_true.astype(np.float64) + noise
    return MimoInstance(
        n=n,
        snr=float(snr),
        seed=int(seed),
        kind=kind_label,
        channel=channel,
        scaled_channel=scaled,
        x_true=x_true,
        noise=noise,
        received=received,
    )


def generate_instance(
    seed: int,
    n: int,
    snr: float,
    kind: ChannelKind | None = None,
    x_true: Sequence[int] | np.ndarray | None = None,
) -> MimoInstance:
    """Deterministically generate a problem instance.

    The instance is a pure function of the arguments: the channel is drawn
    first, then the noise, from ``numpy.random.default_rng(seed)``.  The
    transmitted vector defaults to all-minus-one.

    Args:
        seed: RNG seed (unsigned integer).
        n: problem dimension, n >= 1.
        snr: linear (not dB) signal-to-noise ratio, > 0.
        kind: channel ensemble; defaults to Gaussian i.i.d.
        x_true: transmitted spin vector; default all-minus-one.

    Raises:
        ValueError: invalid dimension, SNR, explicit matrix shape, or spins.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if snr <= 0:
        raise ValueError(f"snr must be positive (linear units), got {snr}")
    kind = kind or ChannelKind.gaussian_iid()
    rng = np.random.default_rng(seed)

    if kind.name == GAUSSIAN_IID:
        channel = rng.standard_normal((n, n))
    elif kind.name == ORTHOGONAL_COLUMNS:
        g = rng.standard_normal((n, n))
        q, _ = np.linalg.qr(g)
        # rescale each column to norm sqrt(n) so the mean column energy
        # matches the Gaussian ensemble
        channel = q * np.sqrt(n)
    elif kind.name == EXPLICIT:
        if kind.matrix is None or kind.matrix.shape != (n, n):
            got = None if kind.matrix is None else kind.matrix.shape
            raise ValueError(f"explicit channel must have shape ({n}, {n}), got {got}")
        channel = np.array(kind.matrix, dtype=np.float64)
    elif kind.name == EXPONENTIAL_LOCAL_MINIMA:
        channel = _exponential_channel(n, kind.epsilon, rng=rng)
    else:
        raise ValueError(f"unknown channel kind {kind.name!r}")

    noise = rng.standard_normal(n)
    xt = np.full(n, -1, dtype=np.int8) if x_true is None else as_spins(x_true, n)
    return _make_instance(n, snr, seed, kind.label(), channel, xt, noise)


def _exponential_channel(n: int, epsilon: float | None, rng=None) -> np.ndarray:
    """First n/2 columns orthonormal, column i+n/2 = -(1+eps) * column i."""
    if n % 2 != 0:
        raise ValueError(f"exponential-local-minima channel needs even n, got {n}")
    if epsilon is None or not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    half = n // 2
    if rng is None:
        basis = np.eye(n, half)
    else:
        g = rng.standard_normal((n, half))
        basis, _ = np.linalg.qr(g)
    return np.hstack([basis, -(1.0 + epsilon) * basis])


def zero_noise(instance: MimoInstance) -> MimoInstance:
    """Copy of the instance with noise removed (y = scaled_channel @ x_true)."""
    return _make_instance(
        instance.n, instance.snr, instance.seed, instance.kind,
        np.array(instance.channel), np.array(instance.x_true),
        np.zeros(instance.n),
    )


def regenerate_noise(instance: MimoInstance, seed: int) -> MimoInstance:
    """Copy of the instance with fresh standard-normal noise from ``seed``."""
    rng = np.random.default_rng(seed)
    return _make_instance(
        instance.n, instance.snr, instance.seed, instance.kind,
        np.array(instance.channel), np.array(instance.x_true),
        rng.standard_normal(instance.n),
    )


def residual_energy(instance: MimoInstance, x: Sequence[int] | np.ndarray) -> float:
    """Squared residual norm ``||y - scaled_channel @ x||^2``."""
    xs = as_spins(x, instance.n)
    d = instance.received - instance.scaled_channel @ xs.astype(np.float64)
    return float(d @ d)


def neighbor_energies(instance: MimoInstance, x: Sequence[int] | np.ndarray) -> np.ndarray:
    """Residual energies of all n one-flip neighbors of x.

    Entry j is the energy with position j negated; computed from the
    residual of x in O(n^2) via the rank-one flip identity
    ``E_j = E + 4 x_j (h_j . d) + 4 ||h_j||^2``.
    """
    xs = as_spins(x, instance.n).astype(np.float64)
    d = instance.received - instance.scaled_channel @ xs
    energy = float(d @ d)
    dots = instance.scaled_channel.T @ d
    out = energy + 4.0 * xs * dots + 4.0 * instance.column_norms_sq
    return np.maximum(out, 0.0)


def state_energies(instance: MimoInstance, cap: int = EXHAUSTIVE_CAP) -> np.ndarray:
    """Residual energies of every state under the canonical encoding.

    Returns a length-2**n float64 array; computed in chunks so n up to the
    cap stays within a few hundred MB.
    """
    n = instance.n
    if n > cap:
        raise DimensionCapError(f"n={n} exceeds exhaustive cap {cap}")
    total = 1 << n
    ht = instance.scaled_channel.T
    y = instance.received
    energies = np.empty(total)
    for start in range(0, total, _ENERGY_CHUNK):
        idx = np.arange(start, min(start + _ENERGY_CHUNK, total))
        spins = spin_matrix(idx, n).astype(np.float64)
        d = y[None, :] - spins @ ht
        energies[idx] = np.einsum("ij,ij->i", d, d)
    return energies


def exhaustive_ml(
    instance: MimoInstance, cap: int = EXHAUSTIVE_CAP
) -> tuple[np.ndarray, float]:
    """Exact maximum-likelihood solution by enumerating all 2**n states.

    Ties are broken toward the smallest canonical state index.

    Returns:
        (argmin spin vector, its residual energy)

    Raises:
        DimensionCapError: n exceeds the cap.
    """
    energies = state_energies(instance, cap=cap)
    best = int(np.argmin(energies))
    return index_to_spins(best, instance.n), float(energies[best])


def to_json(instance: MimoInstance) -> str:
    """Serialize an instance to JSON (doubles round-trip bit-faithfully)."""
    payload = {
        "n": instance.n,
        "snr": instance.snr,
        "seed": instance.seed,
        "kind": instance.kind,
        "channel": instance.channel.ravel().tolist(),
        "noise": instance.noise.tolist(),
        "x_true": instance.x_true.astype(int).tolist(),
        "y": instance.received.tolist(),
    }
    return json.dumps(payload, indent=2)


def from_json(text: str) -> MimoInstance:
    """Inverse of :func:`to_json`."""
    payload = json.loads(text)
    n = int(payload["n"])
    channel = np.array(payload["channel"], dtype=np.float64).reshape(n, n)
    noise = np.array(payload["noise"], dtype=np.float64)
    x_true = as_spins(payload["x_true"], n)
    snr = float(payload["snr"])
    scaled = np.sqrt(snr / n) * channel
    return MimoInstance(
        n=n,
        snr=snr,
        seed=int(payload["seed"]),
        kind=str(payload["kind"]),
        channel=channel,
        scaled_channel=scaled,
        x_true=x_true,
        noise=noise,
        received=np.array(payload["y"], dtype=np.float64),
    )
