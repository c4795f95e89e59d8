import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdmapc.errors import ConfigurationError
from cdmapc.model import (GainQuantileTable, SystemConfig, UserChannelSet,
                          build_gain_quantile_table, load_config, mean_sq_gain,
                          quantile_grid, sample_channels, sample_spreading_codes)


def test_config_defaults_match_default_scenario():
    cfg = SystemConfig()
    assert (cfg.n, cfg.k, cfg.packet_len) == (128, 64, 120)
    assert cfg.noise_psd == 2e-9
    assert cfg.target_sinr == 6.689
    assert cfg.p_max == pytest.approx(10 ** -2.5)
    assert (cfg.d_min, cfg.d_max) == (10.0, 1000.0)
    assert cfg.alpha == 0.5


@pytest.mark.parametrize("bad", [
    dict(n=0), dict(k=0), dict(noise_psd=0.0), dict(target_sinr=-1.0),
    dict(p_max=0.0), dict(d_min=0.0), dict(d_min=20.0, d_max=10.0), dict(n=2.5),
])
def test_config_rejects_invalid(bad):
    with pytest.raises(ConfigurationError):
        SystemConfig(**bad)


def test_load_config_db_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n": 64, "k": 8, "target_sinr_db": 10.0,
                                "p_max_dbw": -20, "seed": 7}))
    cfg, seed = load_config(path)
    assert seed == 7
    assert cfg.target_sinr == pytest.approx(10.0)
    assert cfg.p_max == pytest.approx(0.01)
    assert (cfg.n, cfg.k) == (64, 8)


def test_load_config_derives_target_from_packet_length(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"packet_len": 120}))
    cfg, seed = load_config(path)
    assert seed is None
    assert cfg.target_sinr == pytest.approx(6.689, abs=5e-3)


@pytest.mark.parametrize("payload", [
    {"bogus": 1}, {"target_sinr": 5, "target_sinr_db": 7}, {"p_max": 1, "p_max_dbw": 0},
])
def test_load_config_rejects_bad_keys(tmp_path, payload):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_rayleigh_amplitude_mean_is_inverse_distance():
    cfg = SystemConfig(k=10**6, d_min=100.0, d_max=100.0)
    ch = sample_channels(cfg, 3)
    assert abs(ch.gains.mean() / 0.01 - 1) < 0.005
    # E[h^2] = 4 / (pi d^2)
    assert abs(ch.sq_gains.mean() / mean_sq_gain(100.0) - 1) < 0.01


def test_sample_channels_deterministic(default_cfg):
    a = sample_channels(default_cfg, 11)
    b = sample_channels(default_cfg, 11)
    np.testing.assert_array_equal(a.gains, b.gains)
    np.testing.assert_array_equal(a.distances, b.distances)
    np.testing.assert_array_equal(a.order, b.order)


@given(st.integers(0, 2**31), st.integers(1, 40))
def test_channels_sorted_and_permutation_bijective(seed, k):
    cfg = SystemConfig(k=k)
    ch = sample_channels(cfg, seed)
    assert np.all(np.diff(ch.gains) <= 0)
    assert np.all(ch.gains > 0)
    assert np.all((ch.distances >= cfg.d_min) & (ch.distances <= cfg.d_max))
    assert sorted(ch.order) == list(range(k))
    # undoing the permutation recovers the raw draw order
    rng = np.random.default_rng(seed)
    d_raw = rng.uniform(cfg.d_min, cfg.d_max, size=k)
    np.testing.assert_array_equal(ch.to_original_order(ch.distances), d_raw)


def test_ties_broken_by_original_index():
    ch = UserChannelSet.from_unsorted([0.5, 1.0, 0.5, 1.0])
    np.testing.assert_array_equal(ch.order, [1, 3, 0, 2])


def test_unsorted_channel_set_rejected():
    with pytest.raises(ConfigurationError):
        UserChannelSet(np.ones(2), np.array([0.1, 0.2]), np.arange(2))


def test_codes_small_case():
    s = sample_spreading_codes(4, 1, 0)
    assert s.shape == (4, 1)
    np.testing.assert_array_equal(np.abs(s), 0.5)
    assert np.linalg.norm(s[:, 0]) == pytest.approx(1.0, abs=1e-12)


def test_codes_deterministic_and_binary():
    a = sample_spreading_codes(128, 64, 9)
    np.testing.assert_array_equal(a, sample_spreading_codes(128, 64, 9))
    assert set(np.unique(a)) == {-1 / math.sqrt(128), 1 / math.sqrt(128)}
    np.testing.assert_allclose(np.linalg.norm(a, axis=0), 1.0, atol=1e-12)


def test_codes_balanced():
    s = sample_spreading_codes(256, 128, 5)
    frac = np.mean(s > 0)
    assert abs(frac - 0.5) < 0.01


def test_quantile_grid_clamped():
    grid = quantile_grid(4, 10)
    np.testing.assert_allclose(grid, [0.75, 0.5, 0.25, 0.05])


def test_quantile_table_matches_exponential_quantile():
    d, k = 200.0, 64
    cfg = SystemConfig(k=k, d_min=d, d_max=d)
    table = build_gain_quantile_table(cfg, 10**6, seed=1)
    mean = 4.0 / (math.pi * d * d)
    ell = np.arange(1, k)
    oracle = -mean * np.log(ell / k)
    rel = np.abs(table.values[:-1] / oracle - 1)
    assert rel.max() < 0.02
    # l = K sits at the clamped half-sample quantile, -mean*log(1 - 1/(2S))
    assert 0 < table.values[-1] < 1e-4 * mean


def test_quantile_table_stable_across_seeds(default_cfg):
    a = build_gain_quantile_table(default_cfg, 10**6, seed=1).values
    b = build_gain_quantile_table(default_cfg, 10**6, seed=2).values
    assert np.max(np.abs(a[:-1] / b[:-1] - 1)) < 0.05


@given(st.integers(0, 1000), st.integers(1, 50))
def test_quantile_table_non_increasing(seed, k):
    table = build_gain_quantile_table(SystemConfig(k=k), 10**4, seed=seed)
    assert table.values.size == k
    assert np.all(np.diff(table.values) <= 0)
    assert table.values[0] >= table.values[-1] >= 0


def test_quantile_table_needs_enough_samples(default_cfg):
    with pytest.raises(ConfigurationError):
        build_gain_quantile_table(default_cfg, 10 * default_cfg.k - 1)


def test_table_from_channels_is_true_profile(default_cfg):
    ch = sample_channels(default_cfg, 0)
    table = GainQuantileTable.from_channels(ch)
    np.testing.assert_array_equal(table.values, ch.sq_gains)
