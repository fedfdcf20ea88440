"""Gibbs-sampling detectors over the spin hypercube, plus linear baselines.

Two energy variants drive the per-position resampling law: ``squared-norm``
uses the residual energy ``||y - Hx||^2`` in the exponent, ``norm-2`` the
unsquared norm.  Two schedules: ``random-scan`` picks a uniformly random
position per step, ``sequential`` sweeps positions 0..n-1 in order (one
*block iteration* per sweep).

Transition probabilities are always evaluated as a logistic of the energy
gap (never as a ratio of raw exponentials), so high-SNR energies cannot
underflow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .model import MimoInstance, as_spins

SQUARED_NORM = "squared-norm"
NORM_2 = "norm-2"
RANDOM_SCAN = "random-scan"
SEQUENTIAL = "sequential"

_VARIANTS = (SQUARED_NORM, NORM_2)
_SCHEDULES = (RANDOM_SCAN, SEQUENTIAL)


@dataclass(frozen=True)
class McmcConfig:
    """Chain configuration.

    ``iterations`` counts single-position updates for the random-scan
    schedule and whole block sweeps for the sequential schedule, matching
    how iteration axes are reported.  ``checkpoint_every`` is in the same
    unit (default: n steps for random-scan, 1 block for sequential).

    ``alpha`` is the same configured temperature for both energy variants;
    note the exponent units differ (energy for squared-norm, root energy
    for norm-2), so comparable temperatures differ in scale.
    """

    alpha: float
    variant: str = SQUARED_NORM
    schedule: str = RANDOM_SCAN
    iterations: int = 1000
    seed: int = 0
    initial: str | np.ndarray = "random"
    checkpoint_every: int | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}")
        if self.schedule not in _SCHEDULES:
            raise ValueError(f"schedule must be one of {_SCHEDULES}")


@dataclass
class ChainState:
    """Current chain state with cached residual and best-so-far solution.

    Exclusively owned by one chain; ``residual`` caches ``y - Hx`` so a
    position update costs O(n) instead of O(n^2).
    """

    x: np.ndarray
    residual: np.ndarray
    energy: float
    best_x: np.ndarray
    best_energy: float
    step_count: int = 0


@dataclass(frozen=True)
class TraceCheckpoint:
    step: int
    energy: float
    best_energy: float
    best_x: np.ndarray


@dataclass(frozen=True)
class DetectionTrace:
    """Checkpointed record of one detector run (replayable from ``seed``)."""

    n: int
    alpha: float
    variant: str
    schedule: str
    iterations: int
    seed: int
    checkpoints: tuple[TraceCheckpoint, ...]
    best_x: np.ndarray
    best_energy: float


def init_chain(
    instance: MimoInstance,
    initial: str | np.ndarray,
    rng: np.random.Generator,
) -> ChainState:
    """Build a ChainState; a ``"random"`` initialization consumes the rng."""
    n = instance.n
    if isinstance(initial, str):
        if initial == "random":
            x = (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)
        elif initial == "all-plus-one":
            x = np.ones(n, dtype=np.int8)
        else:
            raise ValueError(f"unknown initial policy {initial!r}")
    else:
        x = as_spins(initial, n)
    d = instance.received - instance.scaled_channel @ x.astype(np.float64)
    e = float(d @ d)
    return ChainState(x=x, residual=d, energy=e, best_x=x.copy(), best_energy=e)


def _candidate_energies(
    state: ChainState, instance: MimoInstance, j: int
) -> tuple[float, float]:
    """Residual energies with position j set to +1 and -1 respectively."""
    col = instance.scaled_channel[:, j]
    dot = float(col @ state.residual)
    nsq = float(col @ col)
    s = float(state.x[j])
    e_plus = state.energy - 2.0 * (1.0 - s) * dot + (1.0 - s) ** 2 * nsq
    e_minus = state.energy - 2.0 * (-1.0 - s) * dot + (1.0 + s) ** 2 * nsq
    # exact algebra can round to tiny negatives
    return max(e_plus, 0.0), max(e_minus, 0.0)


def conditional_flip_probability(
    state: ChainState,
    instance: MimoInstance,
    j: int,
    alpha: float,
    variant: str = SQUARED_NORM,
) -> float:
    """P(x_j = +1 | all other positions), for the given energy variant.

    Squared-norm: logistic of the energy difference,
    ``1 / (1 + exp((E+ - E-) / (2 alpha^2)))``; the norm-2 variant uses the
    unsquared residual norms in the exponent.
    """
    if not 0 <= j < instance.n:
        raise IndexError(f"position {j} out of range for n={instance.n}")
    e_plus, e_minus = _candidate_energies(state, instance, j)
    if variant == SQUARED_NORM:
        gap = e_plus - e_minus
    elif variant == NORM_2:
        gap = np.sqrt(e_plus) - np.sqrt(e_minus)
    else:
        raise ValueError(f"variant must be one of {_VARIANTS}")
    return float(expit(-gap / (2.0 * alpha * alpha)))


def update_residual(
    state: ChainState, instance: MimoInstance, j: int, new_symbol: int
) -> ChainState:
    """Set position j to ``new_symbol``, updating the cached residual in place.

    ``d <- d - h_j * (new - old)``; a no-op when the symbol is unchanged.
    Returns the same (mutated) state for chaining.
    """
    if not 0 <= j < instance.n:
        raise IndexError(f"position {j} out of range for n={instance.n}")
    if new_symbol not in (-1, 1):
        raise ValueError(f"new_symbol must be -1 or +1, got {new_symbol}")
    old = int(state.x[j])
    if new_symbol == old:
        return state
    state.residual -= instance.scaled_channel[:, j] * float(new_symbol - old)
    state.x[j] = new_symbol
    state.energy = float(state.residual @ state.residual)
    return state


def residual_drift(state: ChainState, instance: MimoInstance) -> float:
    """Max abs difference between the cached residual and a fresh y - Hx."""
    fresh = instance.received - instance.scaled_channel @ state.x.astype(np.float64)
    return float(np.max(np.abs(fresh - state.residual)))


def _resample_position(state, instance, j, alpha, variant, u) -> None:
    p_plus = conditional_flip_probability(state, instance, j, alpha, variant)
    update_residual(state, instance, j, 1 if u < p_plus else -1)
    if state.energy < state.best_energy:
        state.best_energy = state.energy
        state.best_x = state.x.copy()


def run_reversible(instance: MimoInstance, config: McmcConfig) -> DetectionTrace:
    """Random-scan Gibbs detector: ``iterations`` single-position updates.

    Each step draws a uniform position index and one uniform real for the
    resampling decision (fixed consumption order, so traces replay from the
    seed).  The best-so-far solution is updated on every strict energy
    improvement.
    """
    if config.schedule != RANDOM_SCAN:
        raise ValueError("run_reversible requires schedule='random-scan'")
    n = instance.n
    rng = np.random.default_rng(config.seed)
    state = init_chain(instance, config.initial, rng)
    cadence = config.checkpoint_every or n
    checkpoints: list[TraceCheckpoint] = []
    for step in range(1, config.iterations + 1):
        j = int(rng.integers(n))
        u = float(rng.random())
        _resample_position(state, instance, j, config.alpha, config.variant, u)
        state.step_count = step
        if step % cadence == 0 or step == config.iterations:
            checkpoints.append(
                TraceCheckpoint(step, state.energy, state.best_energy, state.best_x)
            )
    return _finish_trace(instance, config, state, checkpoints)


def run_sequential(instance: MimoInstance, config: McmcConfig) -> DetectionTrace:
    """Sequential Gibbs detector: each block iteration sweeps j = 0..n-1."""
    if config.schedule != SEQUENTIAL:
        raise ValueError("run_sequential requires schedule='sequential'")
    n = instance.n
    rng = np.random.default_rng(config.seed)
    state = init_chain(instance, config.initial, rng)
    cadence = config.checkpoint_every or 1
    checkpoints: list[TraceCheckpoint] = []
    for block in range(1, config.iterations + 1):
        for j in range(n):
            u = float(rng.random())
            _resample_position(state, instance, j, config.alpha, config.variant, u)
        state.step_count = block
        if block % cadence == 0 or block == config.iterations:
            checkpoints.append(
                TraceCheckpoint(block, state.energy, state.best_energy, state.best_x)
            )
    return _finish_trace(instance, config, state, checkpoints)


def run_detector(instance: MimoInstance, config: McmcConfig) -> DetectionTrace:
    """Dispatch on the configured schedule."""
    if config.schedule == SEQUENTIAL:
        return run_sequential(instance, config)
    return run_reversible(instance, config)


def _finish_trace(instance, config, state, checkpoints) -> DetectionTrace:
    return DetectionTrace(
        n=instance.n,
        alpha=config.alpha,
        variant=config.variant,
        schedule=config.schedule,
        iterations=config.iterations,
        seed=config.seed,
        checkpoints=tuple(checkpoints),
        best_x=state.best_x.copy(),
        best_energy=state.best_energy,
    )


def trace_to_json(trace: DetectionTrace) -> str:
    payload = {
        "n": trace.n,
        "alpha": trace.alpha,
        "variant": trace.variant,
        "schedule": trace.schedule,
        "iterations": trace.iterations,
        "seed": trace.seed,
        "checkpoints": [
            {
                "step": c.step,
                "energy": c.energy,
                "best_energy": c.best_energy,
                "best_x": c.best_x.astype(int).tolist(),
            }
            for c in trace.checkpoints
        ],
        "best_x": trace.best_x.astype(int).tolist(),
        "best_energy": trace.best_energy,
    }
    return json.dumps(payload, indent=2)


def trace_from_json(text: str) -> DetectionTrace:
    p = json.loads(text)
    return DetectionTrace(
        n=int(p["n"]),
        alpha=float(p["alpha"]),
        variant=p["variant"],
        schedule=p["schedule"],
        iterations=int(p["iterations"]),
        seed=int(p["seed"]),
        checkpoints=tuple(
            TraceCheckpoint(
                int(c["step"]),
                float(c["energy"]),
                float(c["best_energy"]),
                as_spins(c["best_x"]),
            )
            for c in p["checkpoints"]
        ),
        best_x=as_spins(p["best_x"]),
        best_energy=float(p["best_energy"]),
    )


_COND_LIMIT = 1e12


def ql_transform(instance: MimoInstance) -> MimoInstance:
    """Equivalent instance with a lower-triangular scaled channel.

    Realized as a QR factorization of the column-reversed channel followed
    by reversal, so ``scaled_channel = Q' L`` with orthogonal ``Q'``; the
    residual energy of every x is preserved.

    Raises:
        numpy.linalg.LinAlgError: (near-)rank-deficient channel.
    """
    scaled = instance.scaled_channel
    if np.linalg.cond(scaled) > _COND_LIMIT:
        raise np.linalg.LinAlgError("channel is rank deficient (cond > 1e12)")
    q, r = np.linalg.qr(scaled[:, ::-1])
    lower = r[::-1, ::-1]
    q_rev = q[:, ::-1]
    factor = np.sqrt(instance.snr / instance.n)
    return MimoInstance(
        n=instance.n,
        snr=instance.snr,
        seed=instance.seed,
        kind="explicit",
        channel=lower / factor,
        scaled_channel=lower,
        x_true=np.array(instance.x_true),
        noise=q_rev.T @ instance.noise,
        received=q_rev.T @ instance.received,
    )


def _signs(v: np.ndarray) -> np.ndarray:
    # sign(0) resolves to -1
    return np.where(v > 0, 1, -1).astype(np.int8)


def zf_detect(instance: MimoInstance) -> np.ndarray:
    """Zero-forcing decision ``sign(H^-1 y)`` (scaled channel)."""
    if np.linalg.cond(instance.scaled_channel) > _COND_LIMIT:
        raise np.linalg.LinAlgError("singular channel")
    return _signs(np.linalg.solve(instance.scaled_channel, instance.received))


def lmmse_detect(instance: MimoInstance) -> np.ndarray:
    """LMMSE decision ``sign((H^T H + I)^-1 H^T y)``.

    The identity regularizer reflects the unit noise variance against the
    SNR-scaled channel.
    """
    h = instance.scaled_channel
    gram = h.T @ h + np.eye(instance.n)
    return _signs(np.linalg.solve(gram, h.T @ instance.received))


def bit_errors(x_hat: np.ndarray, x_true: np.ndarray) -> int:
    return int(np.sum(np.asarray(x_hat) != np.asarray(x_true)))
