import math

import numpy as np
import pytest

from pbchaos import (CssSpec, NoiseModel, PhaseState, SystemParams,
                     evolve_ensemble, propagate, sample_css,
                     sample_css_cartesian)
from pbchaos.ensemble import series_to_rows


def spec(center=(0.0, math.pi), n=5000, seed=11, n_atoms=700):
    return CssSpec(center=PhaseState(*center), n_atoms=n_atoms,
                   n_samples=n, seed=seed)


class TestSampling:
    def test_variance_law(self):
        pts = sample_css_cartesian(spec(n=100000))
        var = pts[:, 2].var()
        target = 1.0 / 700
        # MC standard error of the variance estimate
        se = target * math.sqrt(2.0 / 100000)
        assert abs(var - target) < 3 * se

    def test_variance_law_off_equator(self):
        z0 = 0.55
        pts = sample_css_cartesian(spec(center=(z0, math.pi), n=100000))
        target = (1 - z0**2) / 700
        se = target * math.sqrt(2.0 / 100000)
        assert abs(pts[:, 2].var() - target) < 3.5 * se

    def test_pole_degenerate(self):
        pts = sample_css_cartesian(spec(center=(1.0, 0.0), n=50))
        assert np.all(pts[:, 2] == 1.0)
        assert pts[:, 2].var() == 0.0

    def test_seed_determinism(self):
        a = sample_css_cartesian(spec(seed=5))
        b = sample_css_cartesian(spec(seed=5))
        assert np.array_equal(a, b)
        c = sample_css_cartesian(spec(seed=6))
        assert not np.array_equal(a, c)

    def test_phase_state_view(self):
        states = sample_css(spec(n=10))
        assert len(states) == 10
        assert all(abs(s.z) <= 1 for s in states)

    def test_unit_norm(self):
        pts = sample_css_cartesian(spec(n=1000))
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CssSpec(center=PhaseState(0, 0), n_atoms=700, n_samples=1)


class TestEvolve:
    def test_initial_normalized_variance(self):
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.2, drive_freq=1.5)
        ser = evolve_ensemble(p, spec(n=20000), sample_times=[0.0, 1.0])
        assert abs(ser.normalized_var_z[0] - 1.0) < 5.0 / math.sqrt(20000)

    def test_mean_follows_center_short_time(self):
        # noise off, A = 0: the cloud mean tracks the center trajectory to O(1/N)
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.0, drive_freq=1.5)
        center = PhaseState(0.55, math.pi)
        times = np.linspace(0.0, 5.0, 6)
        ser = evolve_ensemble(p, spec(center=(0.55, math.pi), n=20000),
                              sample_times=times)
        from pbchaos import IntegratorConfig
        traj = propagate(p, center, (0.0, 5.0),
                         IntegratorConfig(dense_times=tuple(times)))
        np.testing.assert_allclose(ser.mean_z, traj.z, atol=30.0 / 700)

    def test_times_must_start_at_zero(self):
        p = SystemParams(lam=0.7, drive_freq=1.5)
        with pytest.raises(ValueError):
            evolve_ensemble(p, spec(), sample_times=[1.0, 2.0])

    def test_survivors_full(self):
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.2, drive_freq=1.5)
        ser = evolve_ensemble(p, spec(n=500), sample_times=[0.0, 2.0])
        assert np.all(ser.survivors == 500)

    def test_detuning_noise_broadens(self):
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.0, drive_freq=1.5)
        quiet = evolve_ensemble(p, spec(center=(0.55, math.pi), n=4000),
                                sample_times=[0.0, 20.0])
        noisy = evolve_ensemble(p, spec(center=(0.55, math.pi), n=4000),
                                NoiseModel(sigma_delta=0.05),
                                sample_times=[0.0, 20.0])
        assert noisy.var_z[-1] > quiet.var_z[-1]

    def test_noise_determinism(self):
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.1, drive_freq=1.5)
        nm = NoiseModel(sigma_delta=0.01)
        a = evolve_ensemble(p, spec(n=300), nm, sample_times=[0.0, 3.0])
        b = evolve_ensemble(p, spec(n=300), nm, sample_times=[0.0, 3.0])
        assert np.array_equal(a.mean_z, b.mean_z)

    def test_atom_loss_bookkeeping(self):
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.0, drive_freq=1.5)
        nm = NoiseModel(loss_tau_ms=80.0)
        tau_final = p.tau_from_ms(80.0)
        ser = evolve_ensemble(p, spec(n=200), nm,
                              sample_times=[0.0, tau_final])
        assert ser.n_atoms_t[0] == pytest.approx(700.0)
        assert ser.n_atoms_t[-1] == pytest.approx(700.0 / math.e, rel=1e-6)

    def test_lambda_decay_changes_dynamics(self):
        p = SystemParams(lam=1.5, epsilon=-0.07, drive_amp=0.0, drive_freq=1.6)
        base = evolve_ensemble(p, spec(center=(0.3, math.pi), n=500),
                               NoiseModel(loss_tau_ms=80.0),
                               sample_times=[0.0, 8.0])
        decayed = evolve_ensemble(p, spec(center=(0.3, math.pi), n=500),
                                  NoiseModel(loss_tau_ms=80.0, lambda_decay=True),
                                  sample_times=[0.0, 8.0])
        assert abs(decayed.mean_z[-1] - base.mean_z[-1]) > 1e-4

    def test_normalization_with_loss(self):
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.0, drive_freq=1.5)
        nm = NoiseModel(loss_tau_ms=80.0)
        ser = evolve_ensemble(p, spec(n=2000), nm, sample_times=[0.0, 1.0])
        # normalized variance uses N(t)
        expect = ser.var_z * ser.n_atoms_t / (1 - ser.mean_z**2)
        np.testing.assert_allclose(ser.normalized_var_z, expect, atol=1e-15)

    def test_y_is_sin_phi(self):
        p = SystemParams(lam=0.7, epsilon=0.0, drive_amp=0.0, drive_freq=1.5)
        ser = evolve_ensemble(p, spec(center=(0.0, math.pi / 2), n=3000),
                              sample_times=[0.0])
        assert ser.mean_y[0] == pytest.approx(1.0, abs=0.01)

    def test_rows_schema(self):
        p = SystemParams(lam=0.7, epsilon=-0.11, drive_amp=0.2, drive_freq=1.5)
        ser = evolve_ensemble(p, spec(n=100), sample_times=[0.0, 1.0])
        header, rows = series_to_rows(ser)
        assert header[:3] == ["t_dimensionless", "t_ms", "mean_z"]
        assert header[-1] == "source"
        assert len(rows) == 2 and rows[0][-1] == "classical"
