"""Power-setting procedures.

* ``equal_received_power_allocation``: every user targets the same received
  power, sized from the full load K/N.
* ``proposed_linear_allocation``: large-system rule for a linear MMSE
  receiver that first predicts how many users will be stuck at P_max from
  the gain quantile table.
* ``proposed_sic_allocation``: backward recursion for a SIC/MMSE receiver,
  centralized (true gains) or distributed (quantile-table estimates for the
  users detected later).
* ``conventional_iterative_allocation``: target-SINR interference-function
  iteration driven by exact receiver SINRs; used as the reference.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, ConvergenceError, FeasibilityError
from .model import GainQuantileTable, SystemConfig, UserChannelSet
from .receivers import ReceiverInput, achieved_sinr

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowerAllocation:
    """Transmit powers p_k and the received powers p_k h_k^2 they imply."""

    transmit: np.ndarray
    received: np.ndarray
    p_max: float
    iterations: int | None = None

    def __post_init__(self):
        if np.any(self.transmit < 0) or np.any(self.transmit > self.p_max):
            raise ConfigurationError("transmit powers must lie in [0, p_max]")

    @classmethod
    def from_transmit(cls, transmit, sq_gains, p_max, iterations=None) -> "PowerAllocation":
        transmit = np.asarray(transmit, dtype=float)
        return cls(transmit=transmit, received=transmit * sq_gains, p_max=p_max,
                   iterations=iterations)

    @property
    def saturated(self) -> np.ndarray:
        return self.transmit == self.p_max

    @property
    def k(self) -> int:
        return self.transmit.size


@dataclass(frozen=True)
class SaturationEstimate:
    u1: int
    u2: int


def _clip(received_target, sq_gains, p_max):
    return np.minimum(received_target / sq_gains, p_max)


# -- equal received power -----------------------------------------------------

def equal_received_power(cfg: SystemConfig) -> float:
    """Common received power P_R reaching the target SINR at load K/N.

    Raises FeasibilityError when K/N >= 1 + 1/target.
    """
    g = cfg.target_sinr
    bound = 1.0 + 1.0 / g
    if cfg.alpha >= bound:
        raise FeasibilityError(
            f"load K/N={cfg.alpha:.6g} must be below 1 + 1/target = {bound:.6g}")
    return g * cfg.noise_psd / (1.0 - cfg.alpha * g / (1.0 + g))


def equal_received_power_allocation(cfg: SystemConfig,
                                    channels: UserChannelSet) -> PowerAllocation:
    p_r = equal_received_power(cfg)
    tx = _clip(p_r, channels.sq_gains, cfg.p_max)
    return PowerAllocation.from_transmit(tx, channels.sq_gains, cfg.p_max)


# -- proposed rule for the linear MMSE receiver -------------------------------

def estimate_saturated_users(cfg: SystemConfig, table: GainQuantileTable) -> SaturationEstimate:
    """Count the table entries whose required transmit power P_R / q exceeds P_max."""
    p_r = equal_received_power(cfg)
    # P_R / q > P_max, written without dividing by q (q may be 0)
    u2 = int(np.count_nonzero(p_r > cfg.p_max * table.values))
    return SaturationEstimate(u1=table.k - u2, u2=u2)


def _linear_lhs(power, cfg, u1, saturated_rx):
    g = cfg.target_sinr
    interference = (u1 / cfg.n) * power / (1.0 + g)
    interference += np.sum(power * saturated_rx / (power + saturated_rx * g)) / cfg.n
    return power / (cfg.noise_psd + interference)


def solve_received_power_linear(cfg: SystemConfig, table: GainQuantileTable,
                                sat: SaturationEstimate, rtol: float = 1e-12) -> float:
    """Received power P* at which the large-system SINR equals the target.

    The u1 strong users are assumed received at P* and the u2 weakest at
    P_max times their table entry.
    """
    g = cfg.target_sinr
    saturated_rx = cfg.p_max * table.values[table.k - sat.u2:]
    if sat.u1 / cfg.n >= (1.0 + g) / g:
        # the LHS is bounded by N (1 + g) / u1 as P grows
        raise FeasibilityError(
            f"{sat.u1} unsaturated users on N={cfg.n} cannot reach target {g:.6g}")

    def f(power):
        return _linear_lhs(power, cfg, sat.u1, saturated_rx) - g

    lo = g * cfg.noise_psd
    f_lo = f(lo)
    if f_lo >= 0:
        return lo
    hi = 2.0 * lo
    for _ in range(2000):
        if f(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise FeasibilityError("received-power equation has no root below overflow")
    root = brentq(f, lo, hi, xtol=lo * 1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    resid = abs(f(root)) / g
    if resid > rtol:
        raise ConvergenceError(f"received-power residual {resid:.3g} above {rtol:g}",
                               residual=resid)
    return float(root)


def proposed_linear_allocation(cfg: SystemConfig, channels: UserChannelSet,
                               table: GainQuantileTable) -> PowerAllocation:
    """Each user transmits min(P*/h_k^2, P_max); P* is solved once and shared.

    User k's power depends only on ``cfg``, ``table`` and its own gain.
    """
    _check_table(table, cfg)
    sat = estimate_saturated_users(cfg, table)
    p_star = solve_received_power_linear(cfg, table, sat)
    tx = _clip(p_star, channels.sq_gains, cfg.p_max)
    return PowerAllocation.from_transmit(tx, channels.sq_gains, cfg.p_max)


def _check_table(table, cfg):
    if table.k != cfg.k:
        raise ConfigurationError(f"quantile table has {table.k} entries, need K={cfg.k}")


# -- proposed rule for the SIC/MMSE receiver ----------------------------------

def sic_required_power(cfg: SystemConfig, proxy_power: float, later_received) -> float:
    """Closed-form received power for a SIC stage.

    ``later_received`` holds h_l^2 p_l of the users detected afterwards;
    ``proxy_power`` stands in for the unknown own power inside the
    interference terms (the next user's received power).
    """
    g = cfg.target_sinr
    later_received = np.asarray(later_received, dtype=float)
    if later_received.size == 0:
        return g * cfg.noise_psd
    load = np.sum(later_received / (proxy_power + later_received * g))
    denom = 1.0 - g * load / cfg.n
    if denom <= 0:
        raise FeasibilityError(
            f"SIC recursion infeasible with {later_received.size} later users on N={cfg.n}")
    return g * cfg.noise_psd / denom


def _sic_backward(cfg, sq_gains, stop=0):
    """Run the recursion for indices K-1 down to ``stop``.

    Returns (transmit, received); entries below ``stop`` are NaN. A clipped
    user's actual received power p_k h_k^2 is what later stages see, both as
    interference and as the own-power proxy.
    """
    k_users = sq_gains.size
    transmit = np.full(k_users, np.nan)
    received = np.full(k_users, np.nan)
    for k in range(k_users - 1, stop - 1, -1):
        if k == k_users - 1:
            required = cfg.target_sinr * cfg.noise_psd
        else:
            required = sic_required_power(cfg, received[k + 1], received[k + 1:])
        transmit[k] = min(required / sq_gains[k], cfg.p_max)
        received[k] = transmit[k] * sq_gains[k]
    return transmit, received


def _own_target(cfg, j, lookahead_received):
    if j == cfg.k - 1:
        return cfg.target_sinr * cfg.noise_psd
    return sic_required_power(cfg, lookahead_received[j + 1], lookahead_received[j + 1:])


def sic_distributed_power(cfg: SystemConfig, channels: UserChannelSet,
                          table: GainQuantileTable, j: int) -> float:
    """Transmit power user j computes on its own.

    The users detected after j are replaced by the table's gain estimates;
    only the user's own gain and position j in the detection order are used.
    """
    _check_table(table, cfg)
    if not 0 <= j < cfg.k:
        raise ConfigurationError(f"user index {j} out of range")
    _, received = _sic_backward(cfg, table.values, stop=j + 1)
    return float(min(_own_target(cfg, j, received) / channels.sq_gains[j], cfg.p_max))


def proposed_sic_allocation(cfg: SystemConfig, channels: UserChannelSet,
                            table: GainQuantileTable | None = None,
                            mode: str = "distributed") -> PowerAllocation:
    """Backward SIC power recursion for every user.

    ``mode="centralized"`` runs the recursion on the true gains (``table`` is
    ignored). ``mode="distributed"`` gives each user j the power from
    ``sic_distributed_power``; the table-based lookahead is the same for all
    users, so it is computed once.
    """
    sq = channels.sq_gains
    if sq.size != cfg.k:
        raise ConfigurationError("channel set size does not match cfg.k")
    if mode == "centralized":
        tx, _ = _sic_backward(cfg, sq)
        return PowerAllocation.from_transmit(tx, sq, cfg.p_max)
    if mode != "distributed":
        raise ConfigurationError(f"unknown mode {mode!r}")
    if table is None:
        raise ConfigurationError("distributed mode needs a quantile table")
    _check_table(table, cfg)
    _, received = _sic_backward(cfg, table.values, stop=min(1, cfg.k - 1))
    targets = np.array([_own_target(cfg, j, received) for j in range(cfg.k)])
    tx = _clip(targets, sq, cfg.p_max)
    return PowerAllocation.from_transmit(tx, sq, cfg.p_max)


# -- conventional iterative baseline ------------------------------------------

def _sinr_error(transmit, sinr, target, p_max):
    err = np.abs(sinr - target) / target
    # a user pinned at P_max and still short of the target has converged
    err[(transmit == p_max) & (sinr <= target)] = 0.0
    return err


def conventional_iterative_allocation(cfg: SystemConfig, codes, channels: UserChannelSet,
                                      receiver: str = "linear", max_iter: int = 500,
                                      tol: float = 1e-6) -> PowerAllocation:
    """Iterate p_k <- min(P_max, p_k * target / SINR_k(p)) on exact SINRs.

    Starts from P_max/100 and stops once every user not saturated is within
    ``tol`` (relative) of the target. ``iterations`` on the result counts
    power updates.
    """
    sq = channels.sq_gains
    g = cfg.target_sinr
    tx = np.full(cfg.k, cfg.p_max / 100.0)
    err = None
    for it in range(max_iter + 1):
        sinr = achieved_sinr(ReceiverInput(codes, channels.gains, tx, cfg.noise_psd), receiver)
        err = _sinr_error(tx, sinr, g, cfg.p_max)
        if err.max() < tol:
            return PowerAllocation.from_transmit(tx, sq, cfg.p_max, iterations=it)
        if it < max_iter:
            tx = np.minimum(cfg.p_max, tx * g / sinr)
    log.warning("conventional iteration stopped at %d updates, max error %.3g",
                max_iter, err.max())
    raise ConvergenceError(
        f"conventional iteration not converged in {max_iter} updates", residual=err)
