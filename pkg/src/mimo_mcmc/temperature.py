"""Temperature selection and the stationary-probability analysis behind it.

The tunable temperature ``alpha`` scales the Gibbs weights
``exp(-E / (2 alpha^2))``.  Choosing ``alpha`` so that
``alpha^4 / (alpha^2 - 1) = R`` with
``R = 2 snr / (ln n - ln ln n - ln zeta)`` makes the expected stationary
probability of the transmitted vector decay only polynomially (like
``n^-zeta``) instead of exponentially.  Dropping the ``ln ln n`` and
``ln zeta`` terms gives the cruder quadratic with ``R = 2 snr / ln n``.

All combinatorial sums go through log-gamma and log-sum-exp; no factorials
or raw exponentials of energies are ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .model import EXHAUSTIVE_CAP, MimoInstance, spins_to_index, state_energies


@dataclass(frozen=True)
class TemperatureSolution:
    """Roots of the temperature equation ``alpha^4 - R alpha^2 + R = 0``.

    ``feasible`` is False when the roots are complex (R < 4); ``rhs`` is
    always populated so callers can report how far from feasibility the
    configuration sits.  ``beta = 4 snr (1/a^2)(1 - 1/a^2)`` evaluated at
    ``alpha_plus``.
    """

    alpha_plus: float
    alpha_minus: float
    feasible: bool
    rhs: float
    beta: float
    zeta: float | None = None


def _solve_quadratic(rhs: float, snr: float, zeta: float | None) -> TemperatureSolution:
    disc = rhs * rhs - 4.0 * rhs
    if disc < 0.0:
        return TemperatureSolution(
            alpha_plus=math.nan,
            alpha_minus=math.nan,
            feasible=False,
            rhs=rhs,
            beta=math.nan,
            zeta=zeta,
        )
    root = math.sqrt(disc)
    a2_plus = 0.5 * (rhs + root)
    a2_minus = 0.5 * (rhs - root)
    beta = 4.0 * snr * (1.0 / a2_plus) * (1.0 - 1.0 / a2_plus)
    return TemperatureSolution(
        alpha_plus=math.sqrt(a2_plus),
        alpha_minus=math.sqrt(a2_minus),
        feasible=True,
        rhs=rhs,
        beta=beta,
        zeta=zeta,
    )


def solve_alpha_exact(snr: float, n: int, zeta: float = 1.0) -> TemperatureSolution:
    """Solve ``alpha^4 / (alpha^2 - 1) = 2 snr / (ln n - ln ln n - ln zeta)``.

    Args:
        snr: linear SNR, > 0.
        n: problem dimension, >= 2.
        zeta: target polynomial exponent, > 0.

    Raises:
        ValueError: nonpositive denominator ``ln n - ln ln n - ln zeta``.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if snr <= 0 or zeta <= 0:
        raise ValueError("snr and zeta must be positive")
    denom = math.log(n) - math.log(math.log(n)) - math.log(zeta)
    if denom <= 0:
        raise ValueError(
            f"ln n - ln ln n - ln zeta = {denom:.6g} must be positive "
            f"(n={n}, zeta={zeta})"
        )
    return _solve_quadratic(2.0 * snr / denom, snr, zeta)


def solve_alpha_approx(snr: float, n: int) -> TemperatureSolution:
    """Crude solution ``alpha^2 = q +/- sqrt(q^2 - 2q)`` with ``q = snr/ln n``.

    Infeasible (complex roots) exactly when ``snr < 2 ln n``; that is a
    normal result value, not an exception.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if snr <= 0:
        raise ValueError("snr must be positive")
    return _solve_quadratic(2.0 * snr / math.log(n), snr, None)


def default_alpha(snr: float) -> float:
    """Fallback temperature sqrt(snr)/2 for infeasible configurations.

    Keeps alpha^2 growing linearly in SNR, which is what bounded mixing
    time requires once local minima are present.
    """
    return math.sqrt(snr) / 2.0


def binomial_sum(n: int, beta: float) -> float:
    """``sum_{i=1..n} C(n,i) (1 + beta*i/n)^(-n/2)`` by direct log-space summation.

    Requires ``1 + beta*i/n > 0`` for every i, i.e. beta > -1.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if beta <= -1.0:
        raise ValueError(f"beta must exceed -1 for all terms to be positive, got {beta}")
    i = np.arange(1, n + 1, dtype=np.float64)
    log_terms = (
        gammaln(n + 1.0)
        - gammaln(i + 1.0)
        - gammaln(n - i + 1.0)
        - 0.5 * n * np.log1p(beta * i / n)
    )
    return float(np.exp(logsumexp(log_terms)))


def ml_error_union_bound(n: int, snr: float) -> float:
    """Union/Chernoff bound on the ML error probability.

    ``P_e <= sum_i C(n,i) (1 + snr*i/n)^(-n/2)`` (Chernoff parameter fixed
    at its optimum 1/4).  Values above 1 are returned as-is; it is a bound.
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    return binomial_sum(n, snr)


def gaussian_integral(a: float, eta: float, n: int) -> float:
    """Closed form of ``E[exp(eta (||v + a x||^2 - ||v||^2))]``.

    v, x i.i.d. standard normal N-vectors; equals
    ``(1 - 2 a^2 eta (1 + 2 eta))^(-n/2)``.

    Raises:
        ValueError: outside the domain ``1 - 2 a^2 eta (1 + 2 eta) > 0``.
    """
    base = 1.0 - 2.0 * a * a * eta * (1.0 + 2.0 * eta)
    if base <= 0.0:
        raise ValueError(f"domain violation: 1 - 2 a^2 eta (1+2 eta) = {base:.6g} <= 0")
    return float(base ** (-0.5 * n))


def saddle_f(x: float, beta: float) -> float:
    """``f(x) = H(x) - (1/2) ln(1 + beta x)`` with H the entropy in nats."""
    h = 0.0
    if 0.0 < x < 1.0:
        h = -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)
    return h - 0.5 * math.log1p(beta * x)


def saddle_f_prime(x: float, beta: float) -> float:
    return math.log((1.0 - x) / x) - 0.5 * beta / (1.0 + beta * x)


def saddle_f_double_prime(x: float, beta: float) -> float:
    return -1.0 / x - 1.0 / (1.0 - x) + 0.5 * beta * beta / (1.0 + beta * x) ** 2


def saddle_point(beta: float) -> float:
    """Location ``x0 = exp(-beta/2)`` of the saddle (valid for beta >> 1)."""
    return math.exp(-0.5 * beta)


def saddle_point_estimate(n: int, beta: float) -> float:
    """Saddle-point approximation of :func:`binomial_sum`.

    ``sqrt(2 pi / n) * exp(n exp(-beta/2) - beta/4)``; accurate in the
    ``beta >> 1`` regime and degrades as beta shrinks toward O(1).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.sqrt(2.0 * math.pi / n) * math.exp(n * math.exp(-0.5 * beta) - 0.25 * beta)


def stationary_prob_transmitted(
    instance: MimoInstance, alpha: float, cap: int = EXHAUSTIVE_CAP
) -> float:
    """Stationary probability of the transmitted vector under the Gibbs law.

    ``exp(-||noise||^2 / (2 alpha^2)) / sum_x exp(-||y - Hx||^2 / (2 alpha^2))``,
    evaluated in log space with max subtraction (the numerator energy is the
    transmitted state's residual, which equals ``||noise||^2``).

    Raises:
        DimensionCapError: n exceeds the exhaustive cap.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    energies = state_energies(instance, cap=cap)
    logw = -energies / (2.0 * alpha * alpha)
    idx = spins_to_index(instance.x_true)
    return float(np.exp(logw[idx] - logsumexp(logw)))
