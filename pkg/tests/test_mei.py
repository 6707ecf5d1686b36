import math

import numpy as np
import pytest

from cqnls.grid import Field, make_grid
from cqnls.groundstate import McCurve, McPoint, critical_mass
from cqnls.mei import CurveRangeError, Region, dist_to_complement, in_set_A, k_lower_bound, mei_D


@pytest.fixture(scope="module")
def region():
    """Synthetic decreasing curve m_c = (1 - c^2/M(Q)^2) / c^2 on [0.3, 3.2]."""
    mq = critical_mass()
    cs = np.linspace(0.3, 3.2, 12)
    pts = [McPoint(c, (1 - c * c / mq**2) / c**2, 1.0, 1.0) for c in cs]
    return Region(McCurve(pts, c_max=mq))


def gaussian(a, w):
    spec = make_grid(128, 24 * w)
    return Field.from_function(spec, lambda X, Y: a * np.exp(-(X**2 + Y**2) / (2 * w * w)))


class TestRegion:
    def test_membership(self, region):
        assert region.contains(1.0, 0.0)
        assert not region.contains(1.0, 10.0)
        assert not region.contains(region.c_max, -1.0)
        assert not region.contains(-0.1, 0.0)

    def test_distance(self, region):
        assert dist_to_complement(region, 1.0, 10.0) == 0.0
        d = dist_to_complement(region, 3.3, 0.0)
        assert 0 < d <= region.c_max - 3.3
        assert d <= region.m_at(3.3, extrapolate=True)

    def test_out_of_table(self, region):
        with pytest.raises(CurveRangeError):
            region.m_at(0.1)

    def test_single_point_region_refuses_distance(self):
        r = Region(McCurve([McPoint(1.0, 0.5, 1.0, 1.0)], c_max=critical_mass()))
        with pytest.raises(ValueError):
            mei_D(r, 1.0, 0.1)


class TestIndicator:
    def test_zero(self, region):
        v = mei_D(region, 0.0, 0.0)
        assert v.value == 0.0 and v.admissible
        assert mei_D(region, Field.zeros(make_grid(16, 4.0))).value == 0.0

    def test_infinite_off_region(self, region):
        assert mei_D(region, 1.0, 100.0).value == math.inf
        assert mei_D(region, 4.0, 0.0).value == math.inf

    def test_negative_mass(self, region):
        with pytest.raises(ValueError):
            mei_D(region, -1.0, 0.0)

    def test_monotone(self, region):
        rng = np.random.default_rng(2)
        for _ in range(300):
            c, h = rng.uniform(0, 3.3), rng.uniform(0, 0.5)
            c2, h2 = c + rng.uniform(0, 0.1), h + rng.uniform(0, 0.05)
            a, b = mei_D(region, c, h), mei_D(region, c2, h2)
            if b.admissible:
                assert a.value < b.value

    def test_tends_to_infinity_at_boundary(self, region):
        m = region.m_at(2.0)
        vals = [mei_D(region, 2.0, m - eps).value for eps in (1e-1, 1e-3, 1e-5)]
        assert vals[0] < vals[1] < vals[2] and vals[2] > 1e4


class TestClassification:
    def test_small_gaussian_inside(self, region):
        rep = in_set_A(region, gaussian(0.5, 1.5))
        assert rep.status == "inside" and rep.in_A is True and not rep.blowup_criterion
        assert rep.k_lower_bound is not None and 0 < rep.k_lower_bound < rep.virial

    def test_concentrated_gaussian_has_negative_virial(self, region):
        mass = math.sqrt(math.pi) * 0.5 * 1.5
        # T_lam with large lam drives K negative at fixed mass
        v = gaussian(0.5 * 30, 1.5 / 30)
        rep = in_set_A(region, v)
        assert abs(rep.mass - mass) < 1e-9 and rep.virial < 0 and rep.in_A is False

    def test_supercritical_mass_is_outside(self, region):
        rep = in_set_A(region, gaussian(1.5, 3.0))
        assert rep.status == "outside" and rep.in_A is False and rep.D == math.inf

    def test_k_lower_bound_formula(self, region):
        mq = region.c_max
        c, h = 1.0, 0.2
        delta = 1 - (c / mq) ** 2
        want = min(delta * h, (region.m_at(c) - h) / (math.sqrt(2 / delta) - 1))
        assert k_lower_bound(region, c, h) == pytest.approx(want, rel=1e-15)
        with pytest.raises(ValueError):
            k_lower_bound(region, mq, 0.0)

    def test_report_serializes(self, region):
        rep = in_set_A(region, gaussian(0.5, 1.5))
        assert '"status": "inside"' in rep.to_json()


class TestIndicatorGeometry:
    def test_half_mass_distance(self, region):
        c = region.c_max / 2
        assert dist_to_complement(region, c, 0.0) == pytest.approx(min(c, region.graph_distance(c, 0.0)))
        assert dist_to_complement(region, region.c_max + 0.1, 0.0) == 0.0
        assert dist_to_complement(region, 2.0, region.m_at(2.0)) == 0.0

    def test_lower_bound_from_mass(self, region):
        for c in np.linspace(0.1, 3.3, 9):
            for h in (0.0, 0.01, 0.05):
                v = mei_D(region, c, h)
                if v.admissible:
                    assert v.value >= c / (region.c_max - c) and v.value >= h

    def test_k_lower_bound_degenerates_at_both_ends(self, region):
        assert k_lower_bound(region, 1.0, 0.0) == 0.0
        assert k_lower_bound(region, 1.0, region.m_at(1.0)) == 0.0
        delta = 1 - (1.0 / region.c_max) ** 2
        assert k_lower_bound(region, 1.0, 0.3) <= delta * 0.3

    def test_constant_along_flow(self, region):
        from cqnls.dynamics import evolve

        tr = evolve(gaussian(0.5, 1.5), 0.5, 1e-2, sample_every=5, order=4)
        d = [mei_D(region, m, h).value for m, h in zip(tr.mass, tr.energy)]
        assert max(abs(x - d[0]) for x in d) < 1e-6 * d[0]
