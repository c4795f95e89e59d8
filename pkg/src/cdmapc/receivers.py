"""Exact finite-system MMSE and SIC/MMSE receivers.

All SINRs are evaluated analytically from the code, gain and power matrices;
symbols and noise samples are never drawn. SIC assumes every previously
detected user has been cancelled perfectly, and the detection order is the
sorted (decreasing-gain) user order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigurationError


@dataclass(frozen=True)
class ReceiverInput:
    """Everything a receiver needs: codes (N x K), amplitudes h, transmit powers p, sigma^2."""

    codes: np.ndarray
    gains: np.ndarray
    powers: np.ndarray
    noise_psd: float

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=float)
        gains = np.asarray(self.gains, dtype=float)
        powers = np.asarray(self.powers, dtype=float)
        if codes.ndim != 2:
            raise ConfigurationError("codes must be an N x K matrix")
        k = codes.shape[1]
        if gains.shape != (k,) or powers.shape != (k,):
            raise ConfigurationError(
                f"codes have {k} columns but got {gains.shape} gains and {powers.shape} powers")
        if not self.noise_psd > 0:
            raise ConfigurationError("noise_psd must be positive")
        if np.any(powers < 0):
            raise ConfigurationError("transmit powers must be nonnegative")
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "powers", powers)

    @classmethod
    def from_allocation(cls, codes, channels, allocation, noise_psd) -> "ReceiverInput":
        return cls(codes, channels.gains, allocation.transmit, noise_psd)

    @property
    def n(self) -> int:
        return self.codes.shape[0]

    @property
    def k(self) -> int:
        return self.codes.shape[1]

    @property
    def received(self) -> np.ndarray:
        """Received powers p_k h_k^2."""
        return self.powers * self.gains ** 2


@dataclass(frozen=True)
class SinrReport:
    sinr: np.ndarray
    filter_norm: np.ndarray


def covariance(codes, received, noise_psd):
    """S diag(P) S^T + sigma^2 I."""
    c = (codes * received) @ codes.T
    c[np.diag_indices_from(c)] += noise_psd
    return c


def _check_user(inp, k):
    if not 0 <= k < inp.k:
        raise ConfigurationError(f"user index {k} out of range for K={inp.k}")


def mmse_filter(inp: ReceiverInput, k: int) -> np.ndarray:
    """Linear MMSE filter d_k = sqrt(p_k) h_k (S H P H S^T + sigma^2 I)^{-1} s_k."""
    _check_user(inp, k)
    factor = cho_factor(covariance(inp.codes, inp.received, inp.noise_psd))
    return np.sqrt(inp.powers[k]) * inp.gains[k] * cho_solve(factor, inp.codes[:, k])


def _output_sinr(inp, k, filt, interferers):
    filt = np.asarray(filt, dtype=float)
    if filt.shape != (inp.n,):
        raise ConfigurationError(f"filter must have length N={inp.n}")
    norm2 = filt @ filt
    if norm2 == 0:
        raise ConfigurationError("filter is identically zero")
    received = inp.received
    proj = filt @ inp.codes
    interference = np.sum(received[interferers] * proj[interferers] ** 2)
    return received[k] * proj[k] ** 2 / (inp.noise_psd * norm2 + interference)


def sinr_linear(inp: ReceiverInput, k: int, filt) -> float:
    """Output SINR of an arbitrary linear filter for user k, all other users interfering."""
    _check_user(inp, k)
    others = np.arange(inp.k) != k
    return float(_output_sinr(inp, k, filt, others))


def sinr_sic_user(inp: ReceiverInput, k: int, filt) -> float:
    """Output SINR at SIC stage k for a given filter; only users j > k interfere."""
    _check_user(inp, k)
    later = np.arange(inp.k) > k
    return float(_output_sinr(inp, k, filt, later))


def sinr_linear_all(inp: ReceiverInput) -> SinrReport:
    """MMSE output SINR for every user, using a single factorization."""
    received = inp.received
    factor = cho_factor(covariance(inp.codes, received, inp.noise_psd))
    # unscaled filters C^{-1} s_k; the SINR does not depend on the scale
    filters = cho_solve(factor, inp.codes)
    proj = filters.T @ inp.codes
    cross = proj ** 2 * received[None, :]
    signal = np.diag(cross).copy()
    np.fill_diagonal(cross, 0.0)
    norm2 = np.sum(filters ** 2, axis=0)
    sinr = signal / (inp.noise_psd * norm2 + cross.sum(axis=1))
    scale = np.sqrt(inp.powers) * inp.gains
    return SinrReport(sinr=sinr, filter_norm=scale * np.sqrt(norm2))


def sic_filter(inp: ReceiverInput, k: int) -> np.ndarray:
    """SIC/MMSE stage-k filter, built from the users k..K-1 still present."""
    _check_user(inp, k)
    tail = slice(k, None)
    c = covariance(inp.codes[:, tail], inp.received[tail], inp.noise_psd)
    return np.sqrt(inp.powers[k]) * inp.gains[k] * cho_solve(cho_factor(c), inp.codes[:, k])


def sinr_sic(inp: ReceiverInput, method: str = "update") -> SinrReport:
    """SIC/MMSE output SINR for every user under perfect cancellation.

    ``method="direct"`` refactors the trailing covariance at every stage;
    ``method="update"`` walks the stages backwards keeping the inverse
    covariance current with Sherman-Morrison rank-one updates (O(N^2) per
    stage instead of O(N^3)).
    """
    if method == "direct":
        sinr = np.empty(inp.k)
        norms = np.empty(inp.k)
        for k in range(inp.k):
            d = sic_filter(inp, k)
            norms[k] = np.linalg.norm(d)
            if norms[k] == 0:
                sinr[k] = 0.0
            else:
                sinr[k] = sinr_sic_user(inp, k, d)
        return SinrReport(sinr=sinr, filter_norm=norms)
    if method != "update":
        raise ConfigurationError(f"unknown SIC method {method!r}")

    codes = inp.codes
    received = inp.received
    n, k_users = codes.shape
    inv = np.eye(n) / inp.noise_psd
    sinr = np.empty(k_users)
    norm2 = np.empty(k_users)
    for k in range(k_users - 1, -1, -1):
        s = codes[:, k]
        u = inv @ s
        # add user k to the trailing covariance
        inv -= np.outer(u, u) * (received[k] / (1.0 + received[k] * (s @ u)))
        d = inv @ s
        proj = d @ codes[:, k:]
        interference = received[k + 1:] @ proj[1:] ** 2
        norm2[k] = d @ d
        sinr[k] = received[k] * proj[0] ** 2 / (inp.noise_psd * norm2[k] + interference)
    scale = np.sqrt(inp.powers) * inp.gains
    return SinrReport(sinr=sinr, filter_norm=scale * np.sqrt(norm2))


def achieved_sinr(inp: ReceiverInput, receiver: str) -> np.ndarray:
    """Per-user exact SINR for ``receiver`` in {"linear", "sic"}."""
    if receiver == "linear":
        return sinr_linear_all(inp).sinr
    if receiver == "sic":
        return sinr_sic(inp).sinr
    raise ConfigurationError(f"unknown receiver {receiver!r}")
