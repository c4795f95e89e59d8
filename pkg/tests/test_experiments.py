import csv
import io
import math

import numpy as np
import pytest

from cdmapc.errors import ConfigurationError
from cdmapc.experiments import (COMBINATIONS, FIG1_HEADER, PROFILE_HEADER, SWEEP_HEADER,
                                efficiency, format_csv, run_fig1, run_power_profile, run_sweep,
                                run_trial, solve_target_sinr, sweep_rows, table_for, utility)
from cdmapc.model import SystemConfig, orthogonal_codes, sample_channels
from cdmapc.receivers import ReceiverInput, achieved_sinr

GAMMA = 6.689


def test_target_sinr_for_default_packet():
    g = solve_target_sinr(120)
    assert 6.684 <= g <= 6.694
    assert 10 * math.log10(g) == pytest.approx(8.25, abs=0.01)
    assert g * 120 * math.exp(-g) == pytest.approx(1 - math.exp(-g), abs=1e-8)


def test_target_sinr_m2_against_grid_scan():
    grid = np.arange(1.0, 3.0, 1e-6)
    oracle = grid[np.argmax(efficiency(grid, 2) / grid)]
    assert solve_target_sinr(2) == pytest.approx(oracle, abs=2e-6)


@pytest.mark.parametrize("m", [2, 10, 120, 500])
def test_target_sinr_is_utility_maximizer(m):
    g = solve_target_sinr(m)
    best = efficiency(g, m) / g
    for other in (g / 2, 2 * g):
        assert efficiency(other, m) / other <= best


def test_target_sinr_rejects_short_packets():
    with pytest.raises(ConfigurationError):
        solve_target_sinr(1)


def test_utility_limits():
    assert utility(1e3, 0.5, 120) == pytest.approx(2.0)
    assert utility(0.0, 0.5, 120) == 0.0
    assert utility(GAMMA, 2.0, 120, scale=3.0) == pytest.approx(utility(GAMMA, 1.0, 120, 3.0) / 2)
    with pytest.raises(ConfigurationError):
        utility(GAMMA, 0.0, 120)


def test_fig1_asymptote_fixed_per_user():
    res = run_fig1(n=64, k=32, realizations=5, seed=3)
    assert np.all(res.asymptotic == res.asymptotic[0])
    assert res.exact.shape == (5, 32)
    assert not np.all(res.exact == res.exact[0])
    rows = list(res.rows())
    assert len(rows) == 5 * 32 and rows[0][:2] == (1, 0)
    text = format_csv(FIG1_HEADER, rows)
    assert text.splitlines()[0] == "user_index,realization_id,exact_sinr,asymptotic_sinr"


def test_fig1_resampled_powers():
    res = run_fig1(n=64, k=32, realizations=4, seed=3, resample_powers=True)
    assert not np.all(res.received == res.received[0])
    assert not np.all(res.asymptotic == res.asymptotic[0])
    # the last user's SINR is exactly its SNR, in both columns
    np.testing.assert_allclose(res.exact[:, -1], res.asymptotic[:, -1], rtol=1e-12)


def test_fig1_deterministic():
    a = run_fig1(n=32, k=16, realizations=3, seed=1)
    b = run_fig1(n=32, k=16, realizations=3, seed=1)
    np.testing.assert_array_equal(a.exact, b.exact)


def test_profile_deterministic_and_complete():
    cfg = SystemConfig(k=32)
    a = format_csv(PROFILE_HEADER, run_power_profile(cfg, seed=5).rows())
    b = format_csv(PROFILE_HEADER, run_power_profile(cfg, seed=5).rows())
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert len(rows) == 32 * len(COMBINATIONS)
    assert list(rows[0]) == list(PROFILE_HEADER)


def test_profile_orthogonal_codes_collapse_to_single_user_rule():
    cfg = SystemConfig(n=512, k=2, p_max=1.0)
    prof = run_power_profile(cfg, seed=0, codes=orthogonal_codes(512, 2), table_samples=10**4)
    ch = sample_channels(cfg, [0, 2, 0, 0])
    single = np.minimum(GAMMA * cfg.noise_psd / ch.sq_gains, cfg.p_max)
    assert not prof.failures
    for res in prof.results:
        # the large-system rules still see load K/N = 1/256
        np.testing.assert_allclose(res.transmit, single, rtol=5e-3)
    np.testing.assert_allclose(prof.get("conventional", "linear").transmit, single, rtol=1e-9)


def test_profile_sic_below_linear(default_cfg):
    prof = run_power_profile(default_cfg, seed=2)
    for algorithm in ("proposed", "conventional"):
        assert np.all(prof.get(algorithm, "sic").transmit
                      <= prof.get(algorithm, "linear").transmit * (1 + 1e-9))


def test_trial_metrics_are_recomputed(default_cfg, default_table):
    results, failures = run_trial(default_cfg, 9, 0, default_table)
    assert not failures
    ch = sample_channels(default_cfg, results[0].seed)
    from cdmapc.experiments import CODE_STREAM, stream_key
    from cdmapc.model import sample_spreading_codes
    codes = sample_spreading_codes(default_cfg.n, default_cfg.k,
                                   stream_key(9, default_cfg.k, 0, CODE_STREAM))
    for res in results:
        fresh = achieved_sinr(ReceiverInput(codes, ch.gains, res.transmit, default_cfg.noise_psd),
                              res.receiver)
        np.testing.assert_allclose(res.sinr, fresh, rtol=1e-12)


def test_single_trial_sweep_matches_profile():
    cfg = SystemConfig(k=16)
    prof = run_power_profile(cfg, seed=4)
    sweep = run_sweep(cfg, [16], trials=1, seed=4)
    for res in prof.results:
        row = sweep.row(16, res.algorithm, res.receiver)
        assert row["trials"] == 1
        assert row["avg_power_w"] == pytest.approx(res.transmit.mean(), rel=1e-12)
        assert row["avg_utility"] == pytest.approx(res.utility.mean(), rel=1e-12)
        free = ~res.saturated
        assert row["avg_sinr"] == pytest.approx(res.sinr[free].mean(), rel=1e-12)


def test_sweep_records_failures_without_dropping_rows():
    cfg = SystemConfig(n=8, k=10)
    res = run_sweep(cfg, [10], trials=2, seed=0, table_samples=1000)
    assert len(res.rows) == len(COMBINATIONS)
    assert res.row(10, "equal_received", "linear")["trials"] == 0
    assert math.isnan(res.row(10, "equal_received", "linear")["avg_sinr"])
    assert res.row(10, "conventional", "linear")["trials"] == 2
    assert {(f.algorithm, f.receiver) for f in res.failures} == {
        ("proposed", "linear"), ("equal_received", "linear"), ("equal_received", "sic")}
    text = format_csv(SWEEP_HEADER, sweep_rows(res))
    assert ",nan,nan,nan,0" in text


def test_sweep_rejects_zero_trials(default_cfg):
    with pytest.raises(ConfigurationError):
        run_sweep(default_cfg, [8], trials=0)


def test_table_for_is_keyed_by_k(default_cfg):
    a = table_for(default_cfg, 1, 10**4)
    b = table_for(default_cfg.replace(k=32), 1, 10**4)
    assert a.k == 64 and b.k == 32


@pytest.fixture(scope="module")
def default_sweep():
    return run_sweep(SystemConfig(), [64], trials=200, seed=17)


@pytest.mark.slow
def test_sweep_proposed_and_conventional_hit_target(default_sweep):
    for algorithm, receiver in (("proposed", "linear"), ("conventional", "linear"),
                                ("proposed", "sic"), ("conventional", "sic")):
        row = default_sweep.row(64, algorithm, receiver)
        assert row["trials"] == 200
        assert abs(row["avg_sinr"] / GAMMA - 1) < 0.02, (algorithm, receiver, row)


@pytest.mark.slow
def test_sweep_equal_received_rule_overshoots(default_sweep):
    eq = default_sweep.row(64, "equal_received", "linear")
    prop = default_sweep.row(64, "proposed", "linear")
    assert eq["avg_sinr"] > GAMMA
    assert eq["avg_utility"] < prop["avg_utility"]


@pytest.mark.slow
def test_sweep_utility_ordering(default_sweep):
    u = {(r["algorithm"], r["receiver"]): r["avg_utility"] for r in default_sweep.rows}
    assert u[("proposed", "sic")] >= u[("proposed", "linear")]
    assert u[("conventional", "sic")] >= u[("conventional", "linear")]
    assert u[("proposed", "linear")] >= u[("equal_received", "linear")]
    assert u[("proposed", "sic")] >= u[("equal_received", "sic")]
