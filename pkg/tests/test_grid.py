import numpy as np
import pytest

from cqnls.grid import (
    Field,
    ResolutionWarning,
    check_resolution,
    grad_norm_sq,
    integrate,
    laplacian,
    load_field,
    lp_norm_p,
    make_grid,
    resample,
    save_field,
    spectral_mass,
)


def gaussian(spec, w=1.0):
    return Field.from_function(spec, lambda X, Y: np.exp(-(X**2 + Y**2) / (2 * w * w)))


class TestGridSpec:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            make_grid(100, 10.0)

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            make_grid(64, -1.0)

    def test_nodes_and_wavenumbers(self):
        s = make_grid(8, 8.0)
        assert s.x[0] == -4.0 and s.spacing == 1.0
        assert np.isclose(s.wavenumbers[1], 2 * np.pi / 8)


class TestIntegrals:
    def test_gaussian_norms(self):
        u = gaussian(make_grid(128, 24.0))
        assert abs(lp_norm_p(u, 2) - np.pi) < 1e-12
        assert abs(lp_norm_p(u, 4) - np.pi / 2) < 1e-12
        assert abs(grad_norm_sq(u) - np.pi) < 1e-10
        assert abs(integrate(u.abs2(), u.spec) - np.pi) < 1e-12

    def test_parseval(self):
        u = gaussian(make_grid(64, 20.0))
        assert abs(spectral_mass(u) - lp_norm_p(u, 2)) < 1e-12

    def test_laplacian_of_gaussian(self):
        u = gaussian(make_grid(128, 24.0))
        X, Y = u.spec.mesh()
        r2 = X**2 + Y**2
        assert np.max(np.abs(laplacian(u) - (r2 - 2) * np.exp(-r2 / 2))) < 1e-10

    def test_under_resolved_warns(self):
        u = gaussian(make_grid(32, 40.0), w=0.3)
        with pytest.warns(ResolutionWarning):
            check_resolution(np.fft.fft2(u.values), u.spec)


class TestFieldIO:
    @pytest.mark.parametrize("suffix", [".field", ".json"])
    def test_round_trip_exact(self, tmp_path, suffix):
        rng = np.random.default_rng(0)
        spec = make_grid(8, 3.0)
        u = Field(spec, rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
        path = tmp_path / f"u{suffix}"
        save_field(u, path, {"note": "x"})
        v, meta = load_field(path)
        assert v.spec == spec and meta == {"note": "x"}
        assert np.array_equal(u.values, v.values)

    def test_immutable(self):
        u = gaussian(make_grid(8, 4.0))
        with pytest.raises(ValueError):
            u.values[0, 0] = 1.0

    def test_resample_identity_and_refine(self):
        u = gaussian(make_grid(64, 20.0))
        assert np.allclose(resample(u, u.spec).values, u.values, atol=1e-13)
        fine = resample(u, make_grid(128, 20.0))
        assert np.allclose(fine.values, gaussian(fine.spec).values, atol=1e-12)
