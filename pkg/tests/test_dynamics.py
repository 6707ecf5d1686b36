import csv
import json
import math

import numpy as np
import pytest

from cqnls.dynamics import (
    BLOWUP,
    SCATTER,
    Cutoff,
    ResolutionError,
    Stepper,
    chi_radial,
    evolve,
    strang_step,
    virial_d2zR,
    virial_remainder,
    virial_zR,
    wraparound_time,
)
from cqnls.functionals import Norms
from cqnls.grid import Field, make_grid


def gaussian(spec, a=1.0, w=1.0):
    return Field.from_function(spec, lambda X, Y: a * np.exp(-(X**2 + Y**2) / (2 * w * w)))


def spectral_mismatch(cut):
    spec = cut.spec
    KX, KY = spec.k_mesh()
    K2 = KX**2 + KY**2
    wh = np.fft.fft2(cut.weight)
    back = lambda a: np.fft.ifft2(a).real
    rel = lambda a, b: float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
    R2 = cut.R**2
    return {
        "grad": rel(back(1j * KX * wh), cut.grad_weight[0]),
        "lap": rel(back(-K2 * wh), cut.laplacian_chi),
        "hess": rel(back(-KX * KY * wh), cut.hessian_chi[1]),
        "bilap": rel(back(K2 * K2 * wh), cut.bilaplacian_chi / R2),
    }


class TestCutoff:
    def test_radial_pieces(self):
        r = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
        c = chi_radial(r)
        assert np.allclose(c[0], [0, 0.25, 1.0, 0, 0])
        assert np.allclose(c[1][:3], 2 * r[:3])

    def test_derivatives_match_finite_differences(self):
        r = np.linspace(1.01, 1.99, 50)
        h = 1e-5
        c = chi_radial(r)
        for k in range(4):
            fd = (chi_radial(r + h)[k] - chi_radial(r - h)[k]) / (2 * h)
            assert np.max(np.abs(fd - c[k + 1])) < 1e-4 * np.max(np.abs(c[k + 1]))

    def test_spectral_consistency(self):
        cut = Cutoff.build(make_grid(512, 32.0), 8.0)
        errs = spectral_mismatch(cut)
        assert max(errs.values()) < 1e-8, errs

    def test_radius_limit(self):
        with pytest.raises(ValueError):
            Cutoff.build(make_grid(64, 32.0), 9.0)


class TestStepper:
    def test_mass_exact(self):
        u = gaussian(make_grid(64, 20.0), 1.0)
        v = Stepper(u.spec, 1e-2).advance(u.values, 50)
        assert abs(Norms.of(Field(u.spec, v)).mass_sq / Norms.of(u).mass_sq - 1) < 1e-13

    def test_time_reversible(self):
        u = gaussian(make_grid(64, 20.0), 1.0)
        v = Stepper(u.spec, -1e-2).step(Stepper(u.spec, 1e-2).step(u.values))
        assert np.max(np.abs(v - u.values)) < 1e-13

    def test_advance_matches_repeated_steps(self):
        u = gaussian(make_grid(64, 20.0), 1.0)
        st = Stepper(u.spec, 1e-2, order=4)
        v = u.values
        for _ in range(7):
            v = st.step(v)
        assert np.max(np.abs(st.advance(u.values, 7) - v)) < 1e-12

    def test_free_gaussian_spreading(self):
        spec = make_grid(128, 40.0)
        eps = 1e-5
        u = gaussian(spec, eps)
        t = 0.5
        v = Stepper(spec, 1e-2).advance(u.values, 50)
        X, Y = spec.mesh()
        exact = eps / (1 + 2j * t) * np.exp(-(X**2 + Y**2) / (2 * (1 + 2j * t)))
        assert np.max(np.abs(v - exact)) < 1e-8 * eps

    def test_fourth_order_beats_second(self):
        u = gaussian(make_grid(128, 20.0), 1.0)
        h0 = Norms.of(u).energy
        drift = {}
        for order in (2, 4):
            v = Stepper(u.spec, 2e-2, order).advance(u.values, 25)
            drift[order] = abs(Norms.of(Field(u.spec, v)).energy - h0)
        assert drift[4] < 0.1 * drift[2]

    def test_resolution_guard(self):
        with pytest.raises(ResolutionError):
            Stepper(make_grid(256, 8.0), 1.0)
        with pytest.raises(ValueError):
            Stepper(make_grid(64, 8.0), 1e-3, order=3)
        with pytest.raises(ResolutionError):
            strang_step(gaussian(make_grid(64, 8.0), 50.0), 1e-2)


class TestVirial:
    def test_gaussian_second_derivative(self):
        spec = make_grid(256, 32.0)
        u = gaussian(spec)
        cut = Cutoff.build(spec, 8.0)
        eight_k = 8 * Norms.of(u).virial
        assert abs(eight_k - 38 * math.pi / 9) < 1e-9
        assert abs(virial_d2zR(u, cut) - eight_k) < 1e-6 * eight_k
        assert abs(virial_remainder(u, cut)) < 1e-6 * eight_k

    def test_z_is_second_moment_inside(self):
        spec = make_grid(256, 32.0)
        u = gaussian(spec)
        cut = Cutoff.build(spec, 8.0)
        assert abs(virial_zR(u, cut) - math.pi) < 1e-9


class TestEvolve:
    def test_trace_files(self, tmp_path):
        u = gaussian(make_grid(64, 24.0), 0.5, 1.5)
        tr = evolve(u, 0.2, 1e-2, sample_every=5)
        assert tr.valid and tr.times[-1] == pytest.approx(0.2)
        path = tmp_path / "run.csv"
        tr.write_csv(path)
        rows = list(csv.reader(path.open()))
        assert tuple(rows[0]) == ("t", "mass", "energy", "virial", "grad_norm_sq", "z_R", "dz_R", "sup_norm")
        assert len(rows) == len(tr.times) + 1
        side = json.loads(path.with_suffix(".fate.json").read_text())
        assert side["fate"] == tr.fate

    def test_zero_data_scatters(self):
        tr = evolve(Field.zeros(make_grid(32, 16.0)), 0.1, 1e-2)
        assert tr.fate == SCATTER

    def test_small_data_disperses(self):
        u = gaussian(make_grid(128, 64.0), 0.2, 1.0)
        tr = evolve(u, 4.0, 1e-2, sample_every=10)
        assert tr.fate == SCATTER and tr.mass_drift() < 1e-12

    def test_collapse_aborts(self):
        # supercritical Gaussian with negative energy
        u = gaussian(make_grid(256, 16.0), 3.0, 0.8)
        assert Norms.of(u).energy < 0
        tr = evolve(u, 1.0, 1e-3, sample_every=10)
        assert tr.fate == BLOWUP and tr.aborted_at is not None and tr.aborted_at > 0.01

    def test_wraparound_flag(self):
        u = gaussian(make_grid(64, 12.0), 0.5, 0.7)
        tr = evolve(u, 3 * wraparound_time(u), 1e-2)
        assert any("wrap-around" in f for f in tr.flags)


class TestStepperExamples:
    def test_plane_wave_phase(self):
        spec = make_grid(32, 2 * np.pi)
        X, Y = spec.mesh()
        k, a, dt = 3.0, 0.7, 1e-3
        u = Field(spec, a * np.exp(1j * k * X))
        v = strang_step(u, dt)
        phase = np.angle(v.values / u.values)
        assert np.max(np.abs(phase - dt * (-k * k + a**2 + a**4))) < 1e-12

    def test_momentum_conserved(self):
        from cqnls.functionals import momentum

        spec = make_grid(128, 32.0)
        u = Field.from_function(spec, lambda X, Y: 0.8 * np.exp(-((X - 1) ** 2 + Y**2) / 3 + 0.5j * X + 0.2j * Y))
        p0 = momentum(u)
        v = Field(spec, Stepper(spec, 1e-2).advance(u.values, 100))
        assert np.max(np.abs(momentum(v) - p0)) < 1e-10 * np.max(np.abs(p0))

    def test_real_data_has_zero_virial_derivative(self):
        spec = make_grid(128, 32.0)
        cut = Cutoff.build(spec, 8.0)
        from cqnls.dynamics import virial_dzR

        assert virial_dzR(gaussian(spec, 1.0, 2.0), cut) == pytest.approx(0.0, abs=1e-14)
        assert virial_zR(Field.zeros(spec), cut) == 0.0

    def test_soliton_run_is_undecided(self):
        from cqnls.dynamics import UNDECIDED
        from cqnls.groundstate import critical_mass, minimize_mc

        s = minimize_mc(0.9 * critical_mass(), spec=make_grid(256, 32.0))
        tr = evolve(s.profile, 0.5, 1e-3, sample_every=100)
        assert tr.fate == UNDECIDED and tr.valid

    def test_unresolved_initial_data_rejected(self):
        with pytest.raises(ResolutionError):
            evolve(gaussian(make_grid(32, 64.0), 0.6, 8.0), 0.1, 1e-2)
