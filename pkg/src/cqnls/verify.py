"""Property suites: each returns a :class:`SuiteResult` with measured margins.

Random fields are sums of one to three complex Gaussian lumps with a linear
phase, normalized to a chosen mass and then dilated so that the point where
``K`` changes sign sits at a controlled ``lambda``.  Each field gets its own
box sized to its length scale, which keeps small-mass (hence very narrow)
fields resolved.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .functionals import (
    Norms,
    energy_gradient,
    evaluate,
    lambda_star,
    scale,
)
from .grid import Field, make_grid, resample
from .groundstate import (
    McCurve,
    critical_mass,
    gn_constants,
    minimize_mc,
    petviashvili_Q,
    shoot_Q,
    tabulate_mc,
)
from .mei import Region, in_set_A, k_lower_bound, mei_D

FIELD_N = 256
FIELD_BOX = 40.0


@dataclass
class Check:
    name: str
    passed: bool
    measured: object = None
    bound: object = None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"  [{tag}] {self.name}: measured={_fmt(self.measured)} bound={_fmt(self.bound)}"


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, passed, measured=None, bound=None) -> bool:
        self.checks.append(Check(name, bool(passed), measured, bound))
        return bool(passed)

    def report(self) -> str:
        head = f"{self.name}: {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + [c.line() for c in self.checks])

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "measured": _jsonable(c.measured), "bound": _jsonable(c.bound)}
                for c in self.checks
            ],
            "details": _jsonable(self.details),
        }


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# ------------------------------------------------------------- field families


def _lumps(rng: np.random.Generator) -> Callable:
    count = int(rng.integers(1, 4))
    centers = rng.uniform(-1.5, 1.5, (count, 2))
    widths = rng.uniform(0.7, 1.4, count)
    amps = rng.uniform(0.5, 1.0, count) * np.exp(2j * np.pi * rng.uniform(size=count))
    kx, ky = rng.uniform(-0.5, 0.5, 2)

    def base(X, Y):
        out = np.zeros(np.broadcast(X, Y).shape, dtype=complex)
        for (cx, cy), w, a in zip(centers, widths, amps):
            out += a * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * w * w))
        return out * np.exp(1j * (kx * X + ky * Y))

    return base


def random_field(
    rng: np.random.Generator, mass: float, crossing: float = 1.0, n: int = FIELD_N, dilation: Optional[float] = None
) -> Field:
    """Random smooth field with ``M = mass`` and ``lambda_star = crossing``.

    An explicit ``dilation`` replaces the crossing rule (needed at or above
    the critical mass, where ``lambda_star`` does not exist).
    """
    spec0 = make_grid(n, FIELD_BOX)
    base = _lumps(rng)
    u0 = Field.from_function(spec0, base)
    amp = mass / math.sqrt(Norms.of(u0).mass_sq)
    mu = dilation if dilation is not None else lambda_star(amp * u0) / crossing
    spec = make_grid(n, FIELD_BOX / mu)

    def gen(X, Y):
        return amp * mu * base(mu * X, mu * Y)

    return Field.from_function(spec, gen)


def field_at_energy(rng: np.random.Generator, mass: float, energy: float, n: int = FIELD_N) -> Optional[Field]:
    """Random field with ``M = mass``, ``H = energy`` and ``K > 0``, or None if out of reach.

    Along ``lambda -> T_lambda u`` the energy is ``A lambda^2 - B lambda^4``;
    the rising branch reaches every level in ``(0, A^2/(4B))``.
    """
    u = random_field(rng, mass, 1.0, n)
    nrm = Norms.of(u)
    a = 0.5 * nrm.grad_sq - 0.25 * nrm.quartic
    b = nrm.sextic / 6.0
    if not 0 < energy < a * a / (4 * b):
        return None
    lam2 = (a - math.sqrt(a * a - 4 * b * energy)) / (2 * b)
    lam = math.sqrt(lam2)
    gen = u.generator
    spec = make_grid(n, u.spec.box_length / lam)
    return Field.from_function(spec, lambda X, Y: lam * gen(lam * X, lam * Y))


# ----------------------------------------------------------------- the curve


def default_curve(points: int = 32, lo: float = 0.1, hi: float = 0.95) -> McCurve:
    """Threshold curve from ``$CQNLS_DATA_DIR/mc_curve.json`` or a fresh tabulation."""
    data_dir = os.environ.get("CQNLS_DATA_DIR")
    path = Path(data_dir) / "mc_curve.json" if data_dir else None
    if path is not None and path.exists():
        return McCurve.load(path)
    mq = critical_mass()
    curve = tabulate_mc(np.linspace(lo, hi, points) * mq)
    if path is not None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            curve.save(path)
        except OSError:
            pass
    return curve


# -------------------------------------------------------------------- suites


def suite_townes(seed: int = 0, **_) -> SuiteResult:
    res = SuiteResult("townes")
    q = shoot_Q(1e-4)
    ref = shoot_Q(1e-13)
    pet = petviashvili_Q()
    gc = gn_constants()
    mq2 = ref.extras["radial_mass_sq"]
    res.add("Q(0) at tolerance 1e-4 vs converged shooting", abs(q.central_value - ref.central_value) < 1e-3,
            abs(q.central_value - ref.central_value), 1e-3)
    res.add("Q(0) shooting vs 2D fixed-point iteration", abs(pet.central_value - ref.central_value) < 1e-3,
            abs(pet.central_value - ref.central_value), 1e-3)
    res.add("M(Q)^2 ~ 11.70 (0.1%)", abs(mq2 / 11.70 - 1) < 1e-3, mq2, 11.70)
    from .functionals import gn_quotient_quartic

    quot = gn_quotient_quartic(ref.profile)
    res.add("gn_quotient_quartic(Q) = M(Q)^2/2 (0.5%)", abs(quot / (0.5 * mq2) - 1) < 5e-3, quot, 0.5 * mq2)
    res.details.update(gc)
    return res


def suite_gradient(seed: int = 0, directions: int = 10, **_) -> SuiteResult:
    """Central differences of H against the analytic L^2 gradient."""
    res = SuiteResult("gradient")
    rng = np.random.default_rng(seed)
    mq = critical_mass()
    u = random_field(rng, 0.6 * mq, 1.3, n=128)
    grad = energy_gradient(u)
    h2 = u.spec.cell_area
    gnorm = math.sqrt(h2 * np.sum(np.abs(grad) ** 2))
    errs = []
    for _ in range(directions):
        v = random_field(rng, 1.0, rng.uniform(0.8, 1.6), n=128)
        v = resample(v, u.spec).values
        v = v + 0.3 * grad / gnorm
        exact = h2 * float(np.sum(np.conj(grad) * v).real)
        eps = 1e-4
        hp = Norms.of(Field(u.spec, u.values + eps * v)).energy
        hm = Norms.of(Field(u.spec, u.values - eps * v)).energy
        fd = (hp - hm) / (2 * eps)
        errs.append(abs(fd - exact) / abs(exact))
    res.add("max relative error over directions", max(errs) < 1e-6, max(errs), 1e-6)
    res.details["errors"] = errs
    return res


def suite_fiber_crossing(seed: int = 7, fields: int = 50, **_) -> SuiteResult:
    """Single sign change of K(T_lam u) at the closed-form lambda."""
    res = SuiteResult("fiber")
    rng = np.random.default_rng(seed)
    mq = critical_mass()
    worst_zero = 0.0
    bad = 0
    table = []
    for _ in range(fields):
        u = random_field(rng, rng.uniform(0.3, 0.97) * mq, rng.uniform(0.8, 1.25))
        lam = lambda_star(u)
        lams = lam * np.geomspace(0.6, 1.6, 21)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ks = np.array([evaluate(scale(u, x)).virial for x in lams])
            k_star = evaluate(scale(u, lam)).virial
        signs = np.sign(ks)
        changes = np.count_nonzero(np.diff(signs) != 0)
        right_place = np.all(ks[lams < lam] > 0) and np.all(ks[lams > lam] < 0)
        g = Norms.of(u).grad_sq * lam**2
        worst_zero = max(worst_zero, abs(k_star) / g)
        if changes != 1 or not right_place:
            bad += 1
        table.append((float(math.sqrt(Norms.of(u).mass_sq) / mq), float(lam), int(changes)))
    res.add("exactly one sign change, + below / - above lambda_star", bad == 0, bad, 0)
    res.add("|K(T_lambda* u)| / ||grad T_lambda* u||^2", worst_zero < 1e-8, worst_zero, 1e-8)
    res.details["table"] = table
    return res


def suite_positive_energy(seed: int = 3, fields: int = 50, **_) -> SuiteResult:
    """K >= 0 forces H >= 0, and K > 0 with u != 0 forces H > 0."""
    res = SuiteResult("positive-energy")
    rng = np.random.default_rng(seed)
    mq = critical_mass()
    worst = math.inf
    seen = 0
    for _ in range(fields):
        mass = rng.uniform(0.05, 1.3) * mq
        if mass < 0.99 * mq:
            u = random_field(rng, mass, rng.uniform(0.5, 2.0))
        else:
            u = random_field(rng, mass, dilation=rng.uniform(0.2, 1.0))
        r = evaluate(u)
        if r.virial > 0:
            seen += 1
            worst = min(worst, r.energy)
    res.add("min H over fields with K > 0", seen > 0 and worst > 0, worst, 0.0)
    return res


def suite_gn_l2(seed: int = 5, fields: int = 50, **_) -> SuiteResult:
    """2||grad u||^2 - ||u||_4^4 >= 2 (1 - M^2/M(Q)^2) ||grad u||^2 below the critical mass."""
    res = SuiteResult("gn-l2")
    rng = np.random.default_rng(seed)
    mq = critical_mass()
    worst = math.inf
    for _ in range(fields):
        u = random_field(rng, rng.uniform(0.1, 0.99) * mq, rng.uniform(0.5, 2.0))
        n = Norms.of(u)
        lhs = 2 * n.grad_sq - n.quartic
        rhs = 2 * (1 - n.mass_sq / mq**2) * n.grad_sq
        worst = min(worst, (lhs - rhs) / n.grad_sq)
    res.add("min (lhs - rhs)/||grad u||^2", worst > 0, worst, 0.0)
    return res


def suite_scattering_bounds(seed: int = 11, fields: int = 100, curve: Optional[McCurve] = None, **_) -> SuiteResult:
    """Gradient/energy bounds for fields in the scattering set with M <= (1-delta)^{1/2} M(Q)."""
    res = SuiteResult("scattering-bounds")
    region = Region(curve or default_curve())
    rng = np.random.default_rng(seed)
    mq = region.c_max
    lo, hi = region.curve.c_range
    margins = {"sextic": math.inf, "quartic": math.inf, "energy_lower": math.inf, "energy_upper": math.inf}
    used = 0
    while used < fields:
        delta = rng.uniform(0.05, 0.95)
        cap = math.sqrt(1 - delta) * mq
        mass = rng.uniform(max(lo, 0.5 * cap), min(cap, hi))
        if mass > cap:
            continue
        u = field_at_energy(rng, mass, rng.uniform(0.02, 0.98) * region.m_at(mass))
        if u is None:
            continue
        rep = in_set_A(region, u)
        if rep.in_A is not True:
            continue
        used += 1
        n = Norms.of(u)
        g = n.grad_sq
        margins["sextic"] = min(margins["sextic"], (1.5 * g - n.sextic) / g)
        margins["quartic"] = min(margins["quartic"], (2 * (1 - delta) * g - n.quartic) / g)
        margins["energy_lower"] = min(margins["energy_lower"], (n.energy - 0.25 * delta * g) / g)
        margins["energy_upper"] = min(margins["energy_upper"], (0.5 * g - n.energy) / g)
    res.add("||u||_6^6 < 3/2 ||grad u||^2", margins["sextic"] > 0, margins["sextic"], 0.0)
    res.add("||u||_4^4 <= 2(1-delta) ||grad u||^2", margins["quartic"] > 0, margins["quartic"], 0.0)
    res.add("delta/4 ||grad u||^2 < H", margins["energy_lower"] > 0, margins["energy_lower"], 0.0)
    res.add("H <= 1/2 ||grad u||^2", margins["energy_upper"] > 0, margins["energy_upper"], 0.0)
    res.details["fields"] = used
    return res


def _embedded(u: Field, factor: int = 2) -> Field:
    """Same profile on a box ``factor`` times larger at the same spacing."""
    spec = make_grid(u.spec.n_points * factor, u.spec.box_length * factor)
    return resample(u, spec)


def suite_mountain_pass(seed: int = 0, fractions=(0.3, 0.5, 0.8), **_) -> SuiteResult:
    """H(T_lam S_c) < m_c off lambda = 1 and sign K(T_lam S_c) = sign(1 - lambda)."""
    res = SuiteResult("mountain-pass")
    mq = critical_mass()
    worst_gap = math.inf
    sign_ok = True
    for f in fractions:
        s = minimize_mc(f * mq)
        big = _embedded(s.profile)
        for lam in (0.8, 0.9, 1.1, 1.25):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                r = evaluate(scale(big, lam))
            worst_gap = min(worst_gap, (s.energy - r.energy) / s.energy)
            sign_ok &= np.sign(r.virial) == np.sign(1 - lam)
    res.add("min (m_c - H(T_lam S_c)) / m_c", worst_gap > 0, worst_gap, 0.0)
    res.add("sign K(T_lam S_c) = sign(1 - lam)", sign_ok, sign_ok, True)
    return res


def suite_virial_floor(seed: int = 13, samples: int = 20, fractions=(0.3, 0.6, 0.9), **_) -> SuiteResult:
    """Minimizing I over {M = c, K <= 0} with compressed perturbations never beats m_c."""
    res = SuiteResult("virial-floor")
    rng = np.random.default_rng(seed)
    mq = critical_mass()
    worst = math.inf
    for f in fractions:
        s = minimize_mc(f * mq)
        big = _embedded(s.profile)
        c = s.mass
        X, Y = big.spec.mesh()
        width = big.spec.box_length / 16
        for _ in range(samples):
            cx, cy = rng.normal(0, width, 2)
            pert = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * width**2)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
            eps = rng.uniform(0.01, 0.2) * np.max(np.abs(big.values))
            v = big.values + eps * pert
            v *= c / math.sqrt(np.sum(np.abs(v) ** 2) * big.spec.cell_area)
            n = Norms.of(Field(big.spec, v))
            lam0 = math.sqrt(3 * (2 * n.grad_sq - n.quartic) / (4 * n.sextic))
            for lam in lam0 * np.array([1.0, 1.05, 1.2, 1.5]):
                i_val = n.scaled(lam).sextic / 6.0
                worst = min(worst, (i_val - s.energy) / s.energy)
    res.add("min (I - m_c) / m_c over {M = c, K <= 0} samples", worst > -1e-9, worst, -1e-9)
    return res


def suite_curve_bounds(seed: int = 0, curve: Optional[McCurve] = None, **_) -> SuiteResult:
    """Monotone curve, gradient lower bound, and the upper bound near M(Q)."""
    res = SuiteResult("curve-bounds")
    curve = curve or default_curve()
    mq = curve.c_max
    chat = gn_constants()["C_GN_hat"]
    res.add("m_c strictly decreasing", curve.is_strictly_decreasing(), len(curve.points))
    gaps = [(p.grad_norm_sq - chat * (1 / p.c**2 - 1 / mq**2)) / p.grad_norm_sq for p in curve.points]
    res.add("min rel. margin of ||grad S_c||^2 >= C_hat (1/c^2 - 1/M(Q)^2)", min(gaps) > 0, min(gaps), 0.0)
    lower = [(p.m_c - 0.25 * (1 - p.c**2 / mq**2) * p.grad_norm_sq) / p.m_c for p in curve.points]
    res.add("min rel. margin of m_c >= 1/4 (1 - c^2/M(Q)^2) ||grad S_c||^2", min(lower) > 0, min(lower), 0.0)
    for d in (0.9, 0.95):
        m = curve(d * mq)
        ub = 3.0 / 64.0 * mq**2 * (1 - d * d)
        res.add(f"m at {d} M(Q) <= 3/64 M(Q)^2 (1 - delta^2)", m <= ub, m, ub)
    lo_c, hi_c = curve.c_range
    if lo_c <= 0.1 * mq + 1e-12 and hi_c >= 0.9 * mq:
        r = curve(0.1 * mq) / curve(0.9 * mq)
        res.add("m(0.1 M(Q)) > 10 m(0.9 M(Q))", r > 10, r, 10.0)
    return res


def mei_family(rng, region: Region, size: int = 200):
    """Fields with K >= 0 inside, above and beside the scattering set, plus u = 0."""
    mq = region.c_max
    lo, hi = region.curve.c_range
    spec0 = make_grid(64, 16.0)
    out = [Field.zeros(spec0)]
    while len(out) < size:
        kind = rng.uniform()
        mass = rng.uniform(lo, hi)
        m = region.m_at(mass)
        if kind < 0.6:
            u = field_at_energy(rng, mass, 10 ** rng.uniform(-3, -0.005) * m, n=128)
        elif kind < 0.85:
            u = field_at_energy(rng, mass, rng.uniform(1.01, 3.0) * m, n=128)
        else:
            # Gaussians just above the critical mass, wide enough that K > 0
            a = rng.uniform(1.0005, 1.01) * mq
            w = math.sqrt(rng.uniform(2.0, 4.0) * (2 / 9) * a**4 / (math.pi**2 * (1 - a * a / (4 * math.pi))))
            amp = a / (math.sqrt(math.pi) * w)
            u = Field.from_function(make_grid(128, 24 * w), lambda X, Y: amp * np.exp(-(X**2 + Y**2) / (2 * w * w)))
        if u is not None and Norms.of(u).virial >= 0:
            out.append(u)
    return out


def suite_mei(seed: int = 17, size: int = 200, curve: Optional[McCurve] = None, **_) -> SuiteResult:
    res = SuiteResult("mei")
    region = Region(curve or default_curve())
    rng = np.random.default_rng(seed)
    mq = region.c_max
    fam = mei_family(rng, region, size)
    stats = []
    for u in fam:
        n = Norms.of(u)
        mass = math.sqrt(n.mass_sq)
        d = mei_D(region, mass, n.energy)
        rep = in_set_A(region, u) if 0 < mass < mq else None
        stats.append((u, n, mass, d, rep))

    # (i) D(u) = 0 exactly for u = 0 and only there
    zero_ok = all((d.value == 0) == (mass == 0) for _, _, mass, d, _ in stats)
    res.add("(i) D(u) = 0 iff u = 0", zero_ok, sum(d.value == 0 for *_, d, _ in stats), 1)

    # (ii) for K >= 0: 0 < D < inf iff u in A
    mismatch = 0
    for u, n, mass, d, rep in stats:
        finite_pos = d.admissible and d.value > 0
        in_a = rep is not None and rep.in_A is True
        mismatch += finite_pos != in_a
    res.add("(ii) 0 < D < inf  <=>  u in A (K >= 0)", mismatch == 0, mismatch, 0)

    # (iv) monotonicity over all ordered admissible pairs with h >= 0
    pts = np.array([(mass, n.energy, d.value) for _, n, mass, d, _ in stats if d.admissible and n.energy >= 0])
    extra = []
    for _ in range(size):
        c = rng.uniform(0, mq)
        h = rng.uniform(0, 1.2 * region.m_at(c, extrapolate=True))
        val = mei_D(region, c, h)
        if val.admissible:
            extra.append((c, h, val.value))
    pts = np.vstack([pts, np.array(extra)]) if extra else pts
    C, Hh, Dv = pts[:, 0], pts[:, 1], pts[:, 2]
    le = (C[:, None] <= C[None, :]) & (Hh[:, None] <= Hh[None, :])
    strict = le & ((C[:, None] < C[None, :]) | (Hh[:, None] < Hh[None, :]))
    viol = np.count_nonzero(le & (Dv[:, None] > Dv[None, :])) + np.count_nonzero(strict & (Dv[:, None] >= Dv[None, :]))
    res.add("(iv) D monotone (strict when strictly ordered)", viol == 0, int(viol), 0, )
    res.details["monotonicity_pairs"] = int(np.count_nonzero(le))

    # (v) and (vi) over members of A with D <= D0
    members = [(u, n, mass, d) for u, n, mass, d, rep in stats if rep is not None and rep.in_A is True]
    brackets = {}
    for d0 in (1.0, 5.0, 20.0):
        sub = [(n, mass, d) for _, n, mass, d in members if d.value <= d0]
        if not sub:
            res.add(f"(v) family with D <= {d0} nonempty", False, 0, ">0")
            continue
        r1 = [n.grad_sq / n.energy for n, _, _ in sub]
        r2 = [(n.grad_sq + n.mass_sq) / (n.energy + mass) for n, mass, _ in sub]
        brackets[d0] = {"grad/H": (min(r1), max(r1)), "H1/(H+M)": (min(r2), max(r2)), "count": len(sub)}
        res.add(f"(v) ||grad u||^2/H in [2, 4(D0+1)], D0={d0:g}",
                min(r1) >= 2 and max(r1) <= 4 * (d0 + 1), (min(r1), max(r1)), (2.0, 4 * (d0 + 1)))
        res.add(f"(v) ||u||_H1^2/(H+M) in (0, 4(D0+1)+M(Q)], D0={d0:g}",
                min(r2) > 0 and max(r2) <= 4 * (d0 + 1) + mq, (min(r2), max(r2)), (0.0, 4 * (d0 + 1) + mq))
        # (vi): m - H >= dist >= (H + M)/D0
        worst = min((region.m_at(mass) - n.energy) - d.distance for n, mass, d in sub)
        floor = min((region.m_at(mass) - n.energy) * d0 / (n.energy + mass) for n, mass, d in sub)
        res.add(f"(vi) m - H >= dist, D0={d0:g}", worst >= -1e-12, worst, 0.0)
        res.add(f"(vi) (m - H) D0/(H+M) >= 1, D0={d0:g}", floor >= 1 - 1e-12, floor, 1.0)
    res.details["brackets"] = brackets
    res.details["family"] = {"size": len(fam), "in_A": len(members)}
    return res


def suite_virial(seed: int = 0, **_) -> SuiteResult:
    """Local virial identity on Gaussian data with R = 8."""
    from .dynamics import Cutoff, virial_identity_check, virial_remainder

    res = SuiteResult("virial")
    spec = make_grid(256, 32.0)
    g = Field.from_function(spec, lambda X, Y: np.exp(-(X**2 + Y**2) / 2))
    cut = Cutoff.build(spec, 8.0)
    reports = [virial_identity_check(g, cut, dt) for dt in (2e-2, 1e-2, 5e-3)]
    target = 38 * math.pi / 9
    res.add("8K(Gaussian) = 38 pi/9", abs(reports[0]["eight_K"] - target) < 1e-9 * target, reports[0]["eight_K"], target)
    res.add("FD z_R'' vs 8K + A_R within 1%", reports[-1]["relative_discrepancy"] < 1e-2,
            reports[-1]["relative_discrepancy"], 1e-2)
    ratios = [a["relative_discrepancy"] / b["relative_discrepancy"] for a, b in zip(reports, reports[1:])]
    res.add("discrepancy ratio under dt halving ~ 4", all(3.0 < r < 5.0 for r in ratios), ratios, (3.0, 5.0))
    ar = abs(virial_remainder(g, cut))
    res.add("|A_R| < 1e-6 |8K| for data inside |x| < R", ar < 1e-6 * target, ar, 1e-6 * target)
    res.details["reports"] = reports
    return res


def suite_conservation(seed: int = 0, fraction: float = 0.9, t_end: float = 5.0, dt: float = 1e-3, **_) -> SuiteResult:
    from .dynamics import evolve

    res = SuiteResult("conservation")
    s = minimize_mc(fraction * critical_mass(), spec=make_grid(256, 32.0))
    tr = evolve(s.profile, t_end, dt, sample_every=500)
    dev = float(np.max(np.abs(np.abs(tr.final.values) - s.profile.values.real)))
    res.add("mass drift < 1e-10", tr.mass_drift() < 1e-10, tr.mass_drift(), 1e-10)
    res.add("energy drift < 1e-6", tr.energy_drift() < 1e-6, tr.energy_drift(), 1e-6)
    res.add("modulus deviation < 1e-4", dev < 1e-4, dev, 1e-4)
    res.details.update({"c_over_MQ": fraction, "omega": s.omega, "fate": tr.fate})
    return res


def dichotomy_data(lam: float, fraction: float = 0.5, n: int = 256, box: float = 32.0) -> tuple:
    """``T_lam S_c`` at ``c = fraction * M(Q)`` on an ``n``-point box of side ``box``."""
    s = minimize_mc(fraction * critical_mass())
    big = resample(s.profile, make_grid(n, box))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return scale(big, lam), s


def suite_dichotomy(seed: int = 0, curve: Optional[McCurve] = None, **_) -> SuiteResult:
    from .dynamics import BLOWUP, SCATTER, evolve

    res = SuiteResult("dichotomy")
    region = Region(curve or default_curve())
    u_in, s = dichotomy_data(0.9)
    u_out, _ = dichotomy_data(1.1)
    rep_in, rep_out = in_set_A(region, u_in), in_set_A(region, u_out)
    res.add("T_0.9 S_c classified in A", rep_in.in_A is True, rep_in.status, "inside")
    res.add("T_1.1 S_c meets the blow-up criterion", rep_out.blowup_criterion, rep_out.margins["virial"], "<0")
    clock = time.perf_counter()
    tr_in = evolve(u_in, 2.5, 1e-3, sample_every=50, region=region, order=4)
    seconds_in = time.perf_counter() - clock
    clock = time.perf_counter()
    tr_out = evolve(u_out, 2.5, 1e-3, sample_every=50, region=region, order=4)
    seconds_out = time.perf_counter() - clock
    res.add("T_0.9 S_c evolves scatter-like", tr_in.fate == SCATTER, tr_in.fate, SCATTER)
    res.add("T_1.1 S_c evolves blowup-like", tr_out.fate == BLOWUP, tr_out.fate, BLOWUP)
    bound = k_lower_bound(region, tr_in.mass[0], tr_in.energy[0])
    res.add("K(u(t)) >= K lower bound at all samples", min(tr_in.virial) >= bound, min(tr_in.virial), bound)
    res.details.update({
        "scatter_trace": {"evidence": tr_in.evidence, "flags": tr_in.flags, "valid": tr_in.valid,
                          "samples": len(tr_in.times), "seconds": seconds_in},
        "blowup_trace": {"evidence": tr_out.evidence, "flags": tr_out.flags, "aborted_at": tr_out.aborted_at,
                          "seconds": seconds_out},
    })
    return res


SUITES = {
    "townes": suite_townes,
    "gradient": suite_gradient,
    "fiber": suite_fiber_crossing,
    "positive-energy": suite_positive_energy,
    "gn-l2": suite_gn_l2,
    "scattering-bounds": suite_scattering_bounds,
    "mountain-pass": suite_mountain_pass,
    "virial-floor": suite_virial_floor,
    "curve-bounds": suite_curve_bounds,
    "mei": suite_mei,
    "virial": suite_virial,
    "conservation": suite_conservation,
    "dichotomy": suite_dichotomy,
}
SLOW = ("conservation", "dichotomy")
ALIASES = {"lemma3.1": "fiber"}


def run_suite(name: str, seed: Optional[int] = None, **kw) -> SuiteResult:
    key = ALIASES.get(name, name)
    if key not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + sorted(ALIASES)}")
    if seed is not None:
        kw["seed"] = seed
    res = SUITES[key](**kw)
    res.name = name
    return res
