"""Scenario generation: system parameters, channel draws, spreading codes and
the gain quantile table that each user builds for itself.

Users are always held in non-increasing order of channel gain; index 0 is
the strongest user (first detected by a SIC receiver).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

# Default scenario: N=128, M=120, target 6.689 (8.25 dB), noise 2e-9 W/Hz,
# P_max = -25 dBW, distances 10..1000 m.
DEFAULT_TARGET_SINR = 6.689
DEFAULT_NOISE_PSD = 2e-9
DEFAULT_P_MAX = 10 ** (-25 / 10)

_RAYLEIGH_MEAN_FACTOR = math.sqrt(math.pi / 2)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class SystemConfig:
    """Uplink DS/CDMA scenario.

    Parameters
    ----------
    n : int
        Processing gain (chips per symbol).
    k : int
        Number of active users.
    noise_psd : float
        Thermal noise level sigma^2 (W/Hz).
    target_sinr : float
        Common target SINR, linear scale.
    p_max : float
        Per-user maximum transmit power (W).
    packet_len : int
        Packet length M used by the efficiency function.
    d_min, d_max : float
        Range of user distances from the base station (m).
    """

    n: int = 128
    k: int = 64
    noise_psd: float = DEFAULT_NOISE_PSD
    target_sinr: float = DEFAULT_TARGET_SINR
    p_max: float = DEFAULT_P_MAX
    packet_len: int = 120
    d_min: float = 10.0
    d_max: float = 1000.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ConfigurationError(f"k must be a positive integer, got {self.k!r}")
        if not self.noise_psd > 0:
            raise ConfigurationError("noise_psd must be positive")
        if not self.target_sinr > 0:
            raise ConfigurationError("target_sinr must be positive")
        if not self.p_max > 0:
            raise ConfigurationError("p_max must be positive")
        if int(self.packet_len) != self.packet_len or self.packet_len < 1:
            raise ConfigurationError("packet_len must be a positive integer")
        if not 0 < self.d_min <= self.d_max:
            raise ConfigurationError("need 0 < d_min <= d_max")

    @property
    def alpha(self) -> float:
        """System load K/N."""
        return self.k / self.n

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict) -> "SystemConfig":
        """Build a config from the JSON key set.

        Accepts ``target_sinr`` (linear) or ``target_sinr_db``, and ``p_max``
        (W) or ``p_max_dbw``. When no target is given it is derived from
        ``packet_len`` as the utility-maximizing SINR. Unknown keys other
        than ``seed`` are rejected.
        """
        known = {"n", "k", "noise_psd", "target_sinr", "target_sinr_db", "p_max",
                 "p_max_dbw", "packet_len", "d_min", "d_max", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        if "target_sinr" in data and "target_sinr_db" in data:
            raise ConfigurationError("give only one of target_sinr, target_sinr_db")
        if "p_max" in data and "p_max_dbw" in data:
            raise ConfigurationError("give only one of p_max, p_max_dbw")

        kwargs = {key: data[key] for key in ("n", "k", "noise_psd", "packet_len",
                                             "d_min", "d_max") if key in data}
        if "p_max" in data:
            kwargs["p_max"] = float(data["p_max"])
        elif "p_max_dbw" in data:
            kwargs["p_max"] = float(db_to_linear(data["p_max_dbw"]))
        if "target_sinr" in data:
            kwargs["target_sinr"] = float(data["target_sinr"])
        elif "target_sinr_db" in data:
            kwargs["target_sinr"] = float(db_to_linear(data["target_sinr_db"]))
        else:
            from .experiments import solve_target_sinr

            kwargs["target_sinr"] = solve_target_sinr(int(data.get("packet_len", 120)))
        return cls(**kwargs)


def load_config(path) -> tuple[SystemConfig, int | None]:
    """Read a JSON scenario file; returns the config and the optional seed."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    seed = data.get("seed")
    return SystemConfig.from_mapping(data), (None if seed is None else int(seed))


@dataclass(frozen=True)
class UserChannelSet:
    """Per-user distances and real amplitude gains, sorted by decreasing gain.

    ``order[i]`` is the original (draw-order) index of the user that sits at
    sorted position ``i``.
    """

    distances: np.ndarray
    gains: np.ndarray
    order: np.ndarray

    def __post_init__(self):
        if not (len(self.distances) == len(self.gains) == len(self.order)):
            raise ConfigurationError("distances, gains and order differ in length")
        if np.any(self.gains <= 0):
            raise ConfigurationError("channel gains must be strictly positive")
        if np.any(np.diff(self.gains) > 0):
            raise ConfigurationError("gains must be sorted non-increasingly")

    @classmethod
    def from_unsorted(cls, gains, distances=None) -> "UserChannelSet":
        gains = np.asarray(gains, dtype=float)
        if distances is None:
            distances = np.full(gains.shape, np.nan)
        distances = np.asarray(distances, dtype=float)
        # primary key: decreasing gain; ties by original index
        order = np.lexsort((np.arange(gains.size), -gains))
        return cls(distances=distances[order], gains=gains[order], order=order)

    @property
    def k(self) -> int:
        return self.gains.size

    @property
    def sq_gains(self) -> np.ndarray:
        return self.gains ** 2

    def to_original_order(self, values) -> np.ndarray:
        """Map a per-user array from sorted order back to draw order."""
        values = np.asarray(values)
        out = np.empty_like(values)
        out[self.order] = values
        return out


def _rayleigh_scale(distances):
    # amplitude mean 1/d  =>  Rayleigh scale 1/(d*sqrt(pi/2))
    return 1.0 / (np.asarray(distances, dtype=float) * _RAYLEIGH_MEAN_FACTOR)


def mean_sq_gain(distance):
    """E[h^2] = 4/(pi d^2) for the amplitude-mean-1/d Rayleigh model."""
    return 4.0 / (math.pi * np.asarray(distance, dtype=float) ** 2)


def _draw_amplitudes(rng, cfg, size):
    d = rng.uniform(cfg.d_min, cfg.d_max, size=size)
    h = rng.rayleigh(_rayleigh_scale(d))
    return d, h


def sample_channels(cfg: SystemConfig, seed) -> UserChannelSet:
    """Draw K users uniformly in distance with Rayleigh amplitudes of mean 1/d.

    ``seed`` is anything accepted by ``numpy.random.default_rng`` (an int or
    a sequence of ints).
    """
    rng = np.random.default_rng(seed)
    d, h = _draw_amplitudes(rng, cfg, cfg.k)
    # a zero draw has probability zero but would break the ordering invariant
    h = np.maximum(h, np.finfo(float).tiny)
    return UserChannelSet.from_unsorted(h, d)


def sample_spreading_codes(n: int, k: int, seed) -> np.ndarray:
    """N x K matrix of i.i.d. equiprobable +-1/sqrt(N) chips."""
    if n < 1 or k < 1:
        raise ConfigurationError("n and k must be positive")
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(n, k), dtype=np.int8) * 2 - 1
    return signs / math.sqrt(n)


def orthogonal_codes(n: int, k: int) -> np.ndarray:
    """First K columns of the N x N identity (needs K <= N)."""
    if k > n:
        raise ConfigurationError("orthogonal codes need k <= n")
    return np.eye(n)[:, :k]


@dataclass(frozen=True)
class GainQuantileTable:
    """Estimates q_l of F^{-1}((K-l)/K), l = 1..K, for the squared-gain CDF F.

    Stored 0-based: ``values[i]`` corresponds to l = i + 1, so the table
    lines up with sorted user positions.
    """

    values: np.ndarray
    sample_count: int = 0
    seed: object = None

    def __post_init__(self):
        if np.any(np.diff(self.values) > 0):
            raise ConfigurationError("quantile table must be non-increasing")
        if np.any(self.values < 0):
            raise ConfigurationError("quantile table must be nonnegative")

    @property
    def k(self) -> int:
        return self.values.size

    @classmethod
    def from_channels(cls, channels: UserChannelSet) -> "GainQuantileTable":
        """Table holding an instance's true sorted squared gains (perfect knowledge)."""
        return cls(values=channels.sq_gains.copy(), sample_count=0, seed=None)


def quantile_grid(k: int, sample_count: int) -> np.ndarray:
    """Probabilities (K-l)/K, l=1..K, clamped to half-sample resolution."""
    ell = np.arange(1, k + 1)
    probs = (k - ell) / k
    lo = 1.0 / (2 * sample_count)
    return np.clip(probs, lo, 1.0 - lo)


def build_gain_quantile_table(cfg: SystemConfig, sample_count: int = 10**6,
                              seed=0) -> GainQuantileTable:
    """Empirical inverse CDF of squared gains evaluated on the sorted-user grid."""
    if sample_count < 10 * cfg.k:
        raise ConfigurationError(
            f"sample_count={sample_count} too small for k={cfg.k} (need >= {10 * cfg.k})")
    rng = np.random.default_rng(seed)
    _, h = _draw_amplitudes(rng, cfg, sample_count)
    values = np.quantile(h * h, quantile_grid(cfg.k, sample_count))
    # np.quantile is monotone in the probability, but guard against float ties
    values = np.minimum.accumulate(values)
    return GainQuantileTable(values=values, sample_count=sample_count, seed=seed)
