"""Large-system SINR of MMSE and SIC/MMSE receivers.

Every solver here reduces to one scalar equation

    gamma = P / (sigma^2 + sum_i w_i * P_i * P / (P + P_i * gamma))

with nonnegative weights w_i (load times probability mass). Multiplying out
gives h(gamma) = gamma * D(gamma) - P, which is strictly increasing and
concave on [0, P / sigma^2] with h(0) < 0 <= h(P / sigma^2). The root is
unique; we find it with Newton steps on h kept inside a shrinking bracket.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ConvergenceError

TOL = 1e-12
MAX_ITER = 10_000


@dataclass(frozen=True)
class PowerDistribution:
    """Discrete distribution of interferer received powers."""

    support: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        support = np.atleast_1d(np.asarray(self.support, dtype=float))
        masses = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if support.shape != masses.shape:
            raise ConfigurationError("support and masses differ in shape")
        if np.any(support < 0) or np.any(masses < 0):
            raise ConfigurationError("support points and masses must be nonnegative")
        if support.size and abs(masses.sum() - 1.0) > 1e-12:
            raise ConfigurationError(f"masses sum to {masses.sum()!r}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def empirical(cls, powers) -> "PowerDistribution":
        powers = np.asarray(powers, dtype=float)
        if powers.size == 0:
            return cls(np.empty(0), np.empty(0))
        return cls(powers, np.full(powers.size, 1.0 / powers.size))

    @classmethod
    def atom(cls, power: float) -> "PowerDistribution":
        return cls(np.array([power]), np.array([1.0]))

    def expect(self, fn):
        return float(self.masses @ fn(self.support)) if self.support.size else 0.0


@dataclass(frozen=True)
class FixedPointResult:
    sinr: float
    iterations: int
    residual: float


def _rhs(gamma, power, atoms, weights, noise_psd):
    interference = weights @ (atoms * power / (power + atoms * gamma))
    return power / (noise_psd + interference)


def solve_sinr_equation(power, atoms, weights, noise_psd, tol=TOL,
                        max_iter=MAX_ITER) -> FixedPointResult:
    """Root of gamma = power / (noise + sum_i w_i a_i power / (power + a_i gamma)).

    Convergence is declared when |rhs(gamma) - gamma| <= tol * (1 + gamma).
    """
    if not power > 0:
        raise ConfigurationError("own received power must be positive")
    if not noise_psd > 0:
        raise ConfigurationError("noise_psd must be positive")
    atoms = np.asarray(atoms, dtype=float)
    weights = np.asarray(weights, dtype=float)

    lo, hi = 0.0, power / noise_psd
    gamma = hi
    residual = np.inf
    for it in range(max_iter + 1):
        rhs = _rhs(gamma, power, atoms, weights, noise_psd)
        residual = rhs - gamma
        if abs(residual) <= tol * (1.0 + gamma):
            return FixedPointResult(sinr=float(gamma), iterations=it, residual=float(abs(residual)))
        if residual > 0:
            lo = gamma
        else:
            hi = gamma
        # Newton step on h(g) = g * D(g) - power
        denom = power + atoms * gamma
        d_val = noise_psd + weights @ (atoms * power / denom)
        d_slope = -(weights @ (atoms ** 2 * power / denom ** 2))
        h_val = gamma * d_val - power
        h_slope = d_val + gamma * d_slope
        step = gamma - h_val / h_slope if h_slope > 0 else np.nan
        if lo < step < hi:
            gamma = step
        else:
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                # bracket exhausted at machine resolution
                return FixedPointResult(sinr=float(gamma), iterations=it,
                                        residual=float(abs(residual)))
            gamma = mid
    raise ConvergenceError(
        f"SINR fixed point not converged after {max_iter} iterations", residual=float(abs(residual)))


def tse_hanly_sinr(p_k: float, interferers: PowerDistribution, alpha: float,
                   noise_psd: float, tol=TOL, max_iter=MAX_ITER) -> FixedPointResult:
    """Limiting MMSE SINR of a user received at ``p_k`` with load ``alpha``."""
    if alpha < 0:
        raise ConfigurationError("alpha must be nonnegative")
    return solve_sinr_equation(p_k, interferers.support, alpha * interferers.masses,
                               noise_psd, tol=tol, max_iter=max_iter)


def finite_mmse_sinr_heuristic(k: int, received_powers, n: int, noise_psd: float) -> float:
    """Large-system MMSE SINR of user k given the other users' received powers."""
    received_powers = np.asarray(received_powers, dtype=float)
    others = np.delete(received_powers, k)
    return solve_sinr_equation(received_powers[k], others,
                               np.full(others.size, 1.0 / n), noise_psd).sinr


def sic_asymptotic_sinr(k: int, received_powers, n: int, noise_psd: float) -> float:
    """Large-system SIC/MMSE SINR of user k: only the users detected after k interfere.

    ``received_powers`` must be in detection order (non-increasing).
    """
    received_powers = np.asarray(received_powers, dtype=float)
    later = received_powers[k + 1:]
    return solve_sinr_equation(received_powers[k], later,
                               np.full(later.size, 1.0 / n), noise_psd).sinr


def sic_asymptotic_profile(received_powers, n: int, noise_psd: float) -> np.ndarray:
    """``sic_asymptotic_sinr`` for every user index."""
    received_powers = np.asarray(received_powers, dtype=float)
    return np.array([sic_asymptotic_sinr(k, received_powers, n, noise_psd)
                     for k in range(received_powers.size)])


def mmse_heuristic_profile(received_powers, n: int, noise_psd: float) -> np.ndarray:
    received_powers = np.asarray(received_powers, dtype=float)
    return np.array([finite_mmse_sinr_heuristic(k, received_powers, n, noise_psd)
                     for k in range(received_powers.size)])
