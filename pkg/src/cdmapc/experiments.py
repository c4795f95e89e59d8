"""Monte Carlo harness: target SINR, utility, and the figure pipelines.

Seeding: every random stream is keyed by a 4-int tuple
``(master_seed, k, trial, stream)`` passed to ``numpy.random.default_rng``.
The gain quantile table for a given K uses ``(master_seed, k, 0, TABLE)``
and is shared by all trials at that K. Results therefore do not depend on
the order in which trials execute.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, ConvergenceError, FeasibilityError
from .large_system import sic_asymptotic_profile
from .model import (GainQuantileTable, SystemConfig, build_gain_quantile_table,
                    sample_channels, sample_spreading_codes)
from .power_control import (PowerAllocation, conventional_iterative_allocation,
                            equal_received_power_allocation, proposed_linear_allocation,
                            proposed_sic_allocation)
from .receivers import ReceiverInput, achieved_sinr, sinr_sic

log = logging.getLogger(__name__)

CHANNEL_STREAM, CODE_STREAM, TABLE_STREAM = 0, 1, 2
DEFAULT_TABLE_SAMPLES = 10**6

# (algorithm, receiver) pairs evaluated per trial
COMBINATIONS = (
    ("conventional", "linear"),
    ("conventional", "sic"),
    ("proposed", "linear"),
    ("proposed", "sic"),
    ("proposed_centralized", "sic"),
    ("equal_received", "linear"),
    ("equal_received", "sic"),
)

FIG1_HEADER = ("user_index", "realization_id", "exact_sinr", "asymptotic_sinr")
PROFILE_HEADER = ("user_index_sorted", "algorithm", "receiver", "transmit_power_w",
                  "achieved_sinr")
SWEEP_HEADER = ("k", "algorithm", "receiver", "avg_utility", "avg_power_w", "avg_sinr",
                "trials")


# -- target SINR and utility --------------------------------------------------

def efficiency(sinr, m):
    """Packet success surrogate f(gamma) = (1 - exp(-gamma))^M."""
    return (-np.expm1(-np.asarray(sinr, dtype=float))) ** m


def solve_target_sinr(m: int, tol: float = 1e-8) -> float:
    """SINR maximizing f(gamma)/gamma: root of gamma M e^-gamma = 1 - e^-gamma on [1, 20]."""
    if m < 2:
        raise ConfigurationError("packet length must be at least 2")

    def stationarity(g):
        return g * m * math.exp(-g) + math.expm1(-g)

    try:
        return brentq(stationarity, 1.0, 20.0, xtol=tol)
    except ValueError as exc:
        raise ConvergenceError(f"no sign change on [1, 20] for M={m}") from exc


def utility(sinr, power, m: int, scale: float = 1.0):
    """scale * f(gamma) / p, in bits/Joule when ``scale`` is bits per packet times rate."""
    power = np.asarray(power, dtype=float)
    if np.any(power <= 0):
        raise ConfigurationError("utility needs strictly positive transmit power")
    return scale * efficiency(sinr, m) / power


# -- seeding ------------------------------------------------------------------

def stream_key(seed: int, k: int, trial: int, stream: int) -> list[int]:
    if seed < 0:
        raise ConfigurationError("seed must be nonnegative")
    return [int(seed), int(k), int(trial), int(stream)]


def table_for(cfg: SystemConfig, seed: int, samples: int = DEFAULT_TABLE_SAMPLES):
    return build_gain_quantile_table(cfg, samples, stream_key(seed, cfg.k, 0, TABLE_STREAM))


# -- SIC convergence to the large-system limit ---------------------------------

@dataclass
class Fig1Result:
    n: int
    k: int
    received: np.ndarray      # (R, K) sorted received powers per realization
    exact: np.ndarray         # (R, K)
    asymptotic: np.ndarray    # (R, K)

    def rows(self):
        for r in range(self.exact.shape[0]):
            for i in range(self.k):
                yield (i + 1, r, self.exact[r, i], self.asymptotic[r, i])

    def ratio(self) -> np.ndarray:
        return self.exact / self.asymptotic


def run_fig1(n: int = 256, k: int = 128, realizations: int = 100, seed: int = 0,
             noise_psd: float = 0.1, mean_power: float = 1.0,
             resample_powers: bool = False) -> Fig1Result:
    """Exact SIC/MMSE SINRs over random code draws next to the large-system limit.

    Received powers are exponential (Rayleigh amplitudes) with mean
    ``mean_power``. By default one power profile is drawn and held fixed, so
    only the codes vary between realizations and the asymptote is the same
    for every realization. With ``resample_powers`` each realization also
    draws fresh powers and gets its own asymptote.
    """
    exact = np.empty((realizations, k))
    asym = np.empty((realizations, k))
    received = np.empty((realizations, k))
    for r in range(realizations):
        if r == 0 or resample_powers:
            rng = np.random.default_rng(stream_key(seed, k, r if resample_powers else 0,
                                                   CHANNEL_STREAM))
            powers = np.sort(rng.exponential(mean_power, size=k))[::-1]
            limit = sic_asymptotic_profile(powers, n, noise_psd)
        codes = sample_spreading_codes(n, k, stream_key(seed, k, r, CODE_STREAM))
        exact[r] = sinr_sic(ReceiverInput(codes, np.ones(k), powers, noise_psd)).sinr
        asym[r] = limit
        received[r] = powers
    return Fig1Result(n=n, k=k, received=received, exact=exact, asymptotic=asym)


# -- per-trial evaluation -----------------------------------------------------

@dataclass
class TrialResult:
    algorithm: str
    receiver: str
    transmit: np.ndarray
    sinr: np.ndarray
    utility: np.ndarray
    saturated: np.ndarray
    seed: tuple


@dataclass
class TrialFailure:
    k: int
    trial: int
    algorithm: str
    receiver: str
    reason: str


def allocate(algorithm: str, receiver: str, cfg: SystemConfig, channels, codes,
             table: GainQuantileTable) -> PowerAllocation:
    if algorithm == "conventional":
        return conventional_iterative_allocation(cfg, codes, channels, receiver)
    if algorithm == "equal_received":
        return equal_received_power_allocation(cfg, channels)
    if algorithm == "proposed":
        if receiver == "linear":
            return proposed_linear_allocation(cfg, channels, table)
        return proposed_sic_allocation(cfg, channels, table, mode="distributed")
    if algorithm == "proposed_centralized" and receiver == "sic":
        return proposed_sic_allocation(cfg, channels, mode="centralized")
    raise ConfigurationError(f"unknown combination {algorithm}/{receiver}")


def evaluate(cfg, channels, codes, allocation, receiver, algorithm, seed=()) -> TrialResult:
    sinr = achieved_sinr(ReceiverInput(codes, channels.gains, allocation.transmit,
                                       cfg.noise_psd), receiver)
    return TrialResult(algorithm=algorithm, receiver=receiver,
                       transmit=allocation.transmit, sinr=sinr,
                       utility=utility(sinr, allocation.transmit, cfg.packet_len),
                       saturated=allocation.saturated, seed=tuple(seed))


def run_trial(cfg: SystemConfig, seed: int, trial: int, table: GainQuantileTable,
              codes=None, combinations=COMBINATIONS):
    """One channel/code draw evaluated under every algorithm/receiver pair.

    Returns (results, failures); infeasible or non-converged pairs become
    failures rather than being dropped.
    """
    key = stream_key(seed, cfg.k, trial, CHANNEL_STREAM)
    channels = sample_channels(cfg, key)
    if codes is None:
        codes = sample_spreading_codes(cfg.n, cfg.k, stream_key(seed, cfg.k, trial, CODE_STREAM))
    results, failures = [], []
    for algorithm, receiver in combinations:
        try:
            alloc = allocate(algorithm, receiver, cfg, channels, codes, table)
        except (FeasibilityError, ConvergenceError) as exc:
            failures.append(TrialFailure(cfg.k, trial, algorithm, receiver,
                                         f"{type(exc).__name__}: {exc}"))
            continue
        results.append(evaluate(cfg, channels, codes, alloc, receiver, algorithm, key))
    return results, failures


# -- power profile for one draw -----------------------------------------------

@dataclass
class ProfileResult:
    results: list
    failures: list

    def rows(self):
        for res in self.results:
            for i, (p, s) in enumerate(zip(res.transmit, res.sinr)):
                yield (i + 1, res.algorithm, res.receiver, p, s)

    def get(self, algorithm, receiver) -> TrialResult:
        for res in self.results:
            if (res.algorithm, res.receiver) == (algorithm, receiver):
                return res
        raise KeyError((algorithm, receiver))


def run_power_profile(cfg: SystemConfig, seed: int = 0, codes=None, table=None,
                      table_samples: int = DEFAULT_TABLE_SAMPLES) -> ProfileResult:
    """Transmit power and achieved SINR per sorted user for every algorithm.

    ``codes`` overrides the random spreading matrix (e.g. orthogonal codes).
    """
    if table is None:
        table = table_for(cfg, seed, table_samples)
    results, failures = run_trial(cfg, seed, 0, table, codes=codes)
    return ProfileResult(results, failures)


# -- averages versus number of users -------------------------------------------

@dataclass
class SweepResult:
    k_grid: list
    trials: int
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def row(self, k, algorithm, receiver) -> dict:
        for r in self.rows:
            if (r["k"], r["algorithm"], r["receiver"]) == (k, algorithm, receiver):
                return r
        raise KeyError((k, algorithm, receiver))


def _trial_job(args):
    cfg, seed, trial, table = args
    results, failures = run_trial(cfg, seed, trial, table)
    # drop arrays the aggregation never reads to keep IPC small
    return [(r.algorithm, r.receiver, r.transmit, r.sinr, r.utility, r.saturated)
            for r in results], failures


def _aggregate(k, per_combo, trials_ok):
    rows = []
    for algorithm, receiver in COMBINATIONS:
        chunks = per_combo.get((algorithm, receiver), [])
        if chunks:
            utils = np.concatenate([c[0] for c in chunks])
            powers = np.concatenate([c[1] for c in chunks])
            sinrs = np.concatenate([c[2][~c[3]] for c in chunks])
            avg_u = math.fsum(utils) / utils.size
            avg_p = math.fsum(powers) / powers.size
            avg_s = math.fsum(sinrs) / sinrs.size if sinrs.size else math.nan
        else:
            avg_u = avg_p = avg_s = math.nan
        rows.append({"k": k, "algorithm": algorithm, "receiver": receiver,
                     "avg_utility": avg_u, "avg_power_w": avg_p, "avg_sinr": avg_s,
                     "trials": trials_ok.get((algorithm, receiver), 0)})
    return rows


def run_sweep(cfg: SystemConfig, k_grid, trials: int, seed: int = 0, workers: int = 1,
              table_samples: int = DEFAULT_TABLE_SAMPLES) -> SweepResult:
    """Average utility, transmit power and SINR versus K.

    Power and utility are averaged over all users of all successful trials;
    SINR is averaged over users not pinned at P_max, since saturated users
    cannot reach the target under any algorithm. The ``trials`` column
    counts the trials that contributed; failures are kept on the result.
    """
    if trials < 1:
        raise ConfigurationError("trials must be positive")
    out = SweepResult(k_grid=list(k_grid), trials=trials)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for k in k_grid:
            cfg_k = cfg.replace(k=int(k))
            table = table_for(cfg_k, seed, table_samples)
            jobs = [(cfg_k, seed, t, table) for t in range(trials)]
            outcomes = pool.map(_trial_job, jobs, chunksize=max(1, trials // (4 * workers))) \
                if pool else map(_trial_job, jobs)
            per_combo, trials_ok = {}, {}
            for results, failures in outcomes:
                for algorithm, receiver, tx, sinr, util, sat in results:
                    per_combo.setdefault((algorithm, receiver), []).append((util, tx, sinr, sat))
                    trials_ok[(algorithm, receiver)] = trials_ok.get((algorithm, receiver), 0) + 1
                out.failures.extend(failures)
            out.rows.extend(_aggregate(int(k), per_combo, trials_ok))
            log.info("k=%d done (%d failures so far)", k, len(out.failures))
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def sweep_rows(result: SweepResult):
    for r in result.rows:
        yield tuple(r[h] for h in SWEEP_HEADER)


# -- CSV ----------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def format_csv(header, rows) -> str:
    """CSV text with one header line; floats use shortest round-trip repr."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()
