import numpy as np
import pytest

import filament_mc as fm
from filament_mc import gibbs as gb

from conftest import MASTER


@pytest.fixture(scope="module")
def small_spec(cs_gauss, kgrid_small):
    return gb.EnsembleSpec(process="bm", grid=fm.TimeGrid(1.0, 256),
                           cross_section=cs_gauss, kgrid=kgrid_small,
                           n_samples=64, master_seed=MASTER, workers=2)


@pytest.fixture(scope="module")
def records(small_spec):
    return gb.run_ensemble(small_spec)


def test_records_invariants(records, small_spec):
    assert len(records) == small_spec.n_samples
    assert [r.sample_index for r in records] == list(range(64))
    for r in records:
        assert 0.0 <= r.H <= r.H_tilde
        assert np.all(r.shells >= 0.0)
        assert r.diff_closed_form > 0.0
        assert np.isclose(r.displacement_norm, np.linalg.norm(r.displacement), rtol=1e-14)


def test_worker_count_invariance(small_spec):
    from dataclasses import replace
    a = gb.run_ensemble(replace(small_spec, workers=1))
    b = gb.run_ensemble(replace(small_spec, workers=4))
    for ra, rb in zip(a, b):
        assert ra.H == rb.H and ra.H_tilde == rb.H_tilde
        assert np.array_equal(ra.shells, rb.shells)


def test_single_record(small_spec):
    from dataclasses import replace
    recs = gb.run_ensemble(replace(small_spec, n_samples=1))
    assert len(recs) == 1 and recs[0].sample_index == 0


def test_mean_difference_consistency(records):
    # E[H~] - E[H] equals the mean closed-form difference within 3 SE
    diff_spec = np.array([r.H_tilde - r.H for r in records])
    diff_cf = np.array([r.diff_closed_form for r in records])
    gap = diff_spec - diff_cf
    se = gap.std(ddof=1) / np.sqrt(len(gap))
    # the coarse unit-test grid leaves a small deterministic quadrature bias
    assert abs(gap.mean()) < 3 * se + 5e-3 * diff_cf.mean()


def test_partition_function_basics(records):
    n = len(records)
    z0 = gb.partition_function(records, 0.0)
    assert z0.Z == 1.0 and z0.log_Z == 0.0
    assert z0.effective_sample_size == n
    assert not z0.flag_heavy_tail

    betas = [0.0, 0.5, 1.0, 2.0, 5.0]
    logz = [gb.partition_function(records, b).log_Z for b in betas]
    assert all(np.diff(logz) <= 0)                      # monotone in beta
    slopes = np.diff(logz) / np.diff(betas)
    assert all(np.diff(slopes) >= -1e-12)               # log-convex
    for b in betas:
        zt = gb.partition_function(records, b, "H_tilde")
        assert zt.log_Z <= gb.partition_function(records, b).log_Z + 1e-14
    assert 0 < gb.partition_function(records, 2.0).Z <= 1.0


def test_partition_function_negative_beta_diagnostics(records, cs_gauss, kgrid_small):
    g_low, g_high = gb.gamma_thresholds(cs_gauss, 1.0, kgrid_small)
    assert g_high == g_low * np.pi**2
    est = gb.partition_function(records, -0.5 * g_low)
    assert np.isfinite(est.log_Z)
    deep = gb.partition_function(records, -20.0 * g_low)
    assert deep.flag_heavy_tail
    assert deep.effective_sample_size < 0.1 * len(records)


def test_partition_function_log_space_robust(records):
    est = gb.partition_function(records, -2e4)
    assert np.isfinite(est.log_Z)       # Z itself may overflow, log must not


def test_gamma_threshold_scaling(cs_gauss, kgrid_small):
    lo1, hi1 = gb.gamma_thresholds(cs_gauss, 1.0, kgrid_small)
    lo2, hi2 = gb.gamma_thresholds(cs_gauss, 2.0, kgrid_small)
    assert lo2 == lo1 / 2.0 and hi2 == hi1 / 2.0
    with pytest.raises(ValueError):
        gb.gamma_thresholds(fm.CrossSection.point(), 1.0)


def test_gibbs_expectation(records):
    one = gb.gibbs_expectation(records, 1.3, lambda r: 1.0)
    assert one.value == 1.0
    h0 = gb.gibbs_expectation(records, 0.0, "H")
    assert np.isclose(h0.value, np.mean([r.H for r in records]), rtol=1e-14)
    for b in (0.5, 1.0, 3.0):
        hb = gb.gibbs_expectation(records, b, "H")
        assert hb.value <= h0.value
        assert not hb.unreliable
    deep = gb.gibbs_expectation(records, -200.0, "H")
    assert deep.unreliable


def test_energy_spectrum_identities(records, kgrid_small):
    for beta in (0.0, 1.5):
        q, E, meta = gb.energy_spectrum(records, beta, kgrid_small)
        assert np.all(np.diff(q) > 0)
        assert np.all(E >= 0.0)
        reassembled = gb.spectrum_reassembly(kgrid_small, E)
        h_mean = gb.gibbs_expectation(records, beta, "H").value
        assert abs(reassembled - h_mean) <= 1e-12 * h_mean


def test_ensemble_error_carries_sample_index(cs_gauss, kgrid_small):
    drift = fm.DriftModel.table(lambda t, x: np.full(3, np.inf) if t > 0.5 else np.zeros(3))
    spec = gb.EnsembleSpec(process="sde", grid=fm.TimeGrid(1.0, 8),
                           cross_section=cs_gauss, kgrid=kgrid_small,
                           n_samples=3, master_seed=1, drift=drift, workers=1)
    with pytest.raises(gb.EnsembleError, match="sample 0"):
        gb.run_ensemble(spec)


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("FILAMENT_MC_THREADS", "3")
    assert gb.default_workers() == 3
    monkeypatch.delenv("FILAMENT_MC_THREADS")
    assert gb.default_workers() >= 1
