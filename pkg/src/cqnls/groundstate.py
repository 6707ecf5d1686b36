"""Ground states: the Townes profile Q, constrained minimizers S_c and c -> m_c.

Two independent routes are provided.

* :func:`minimize_mc` attacks ``m_c = inf{H(u) : M(u) = c, K(u) = 0}`` on the
  2D grid.  Along each fiber ``lam -> T_lam u`` the energy is
  ``A lam^2 - B lam^4`` with ``A = ||grad u||^2/2 - ||u||_4^4/4`` and
  ``B = ||u||_6^6/6``; its maximum ``A^2/(4B)`` is attained exactly where
  ``K(T_lam u) = 0``.  The minimizer therefore works with this fiber maximum
  on the mass sphere (no resampling inside the loop) and applies the
  lam-projection once at the end, which on a uniform grid is an exact
  relabelling of the box length.
* :func:`ode_oracle` and :func:`shoot_Q` solve the radial stationary
  equations by bisection on the central value.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sfft
from scipy.integrate import quad, simpson, solve_ivp
from scipy.interpolate import PchipInterpolator
from scipy.special import k0, k0e

from .functionals import Norms
from .grid import Field, GridSpec, load_field, make_grid, resample, save_field

log = logging.getLogger(__name__)

CANONICAL_N = 256
CANONICAL_L = 32.0
ENDPOINT_MARGIN = 1e-3
DEFAULT_C_RANGE = (0.02, 0.98)
REFINE_RESIDUAL = 1e-7
MAX_N = 1024
DISTINCT_MINIMIZERS = 1e-8


class ShootingError(RuntimeError):
    """No bracket of undershooting / overshooting central values was found."""


class MinimizationError(RuntimeError):
    """The constrained minimization failed to converge or collapsed."""


# ------------------------------------------------------------------ radial ODE


class RadialProfile:
    """Positive decaying solution of ``S'' + S'/r - w S + a S^3 + b S^5 = 0``.

    Built from the last bisection bracket: the integrated trajectory is kept up
    to the radius where the two bracketing shots separate, and continued by the
    linear tail ``C K0(sqrt(w) r)`` beyond it.
    """

    def __init__(self, omega, cubic, quintic, center, sol, r_match):
        self.omega = omega
        self.cubic = cubic
        self.quintic = quintic
        self.center = center
        self._sol = sol
        self.r_match = r_match
        kappa = math.sqrt(omega)
        s_m = float(sol.sol(r_match)[0])
        self._kappa = kappa
        self._tail_c = s_m / k0(kappa * r_match)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r <= self.r_match
        r0 = self._sol.t[0]
        core = inner & (r < r0)
        mid = inner & ~core
        f = self.omega * self.center - self.cubic * self.center**3 - self.quintic * self.center**5
        out[core] = self.center + 0.25 * f * r[core] ** 2
        if np.any(mid):
            out[mid] = self._sol.sol(r[mid])[0]
        outer = ~inner
        if np.any(outer):
            z = self._kappa * r[outer]
            out[outer] = self._tail_c * k0e(z) * np.exp(-z)
        return out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        inner = r <= self.r_match
        r0 = self._sol.t[0]
        f = self.omega * self.center - self.cubic * self.center**3 - self.quintic * self.center**5
        core = inner & (r < r0)
        mid = inner & ~core
        out[core] = 0.5 * f * r[core]
        if np.any(mid):
            out[mid] = self._sol.sol(r[mid])[1]
        outer = ~inner
        if np.any(outer):
            from scipy.special import k1e

            z = self._kappa * r[outer]
            out[outer] = -self._tail_c * self._kappa * k1e(z) * np.exp(-z)
        return out

    def radial_integrals(self) -> Norms:
        """``||S||_2^2``, ``||S'||_2^2``, ``||S||_4^4``, ``||S||_6^6`` over R^2."""
        r = np.linspace(0.0, self.r_match, 20001)
        s = self(r)
        ds = self.derivative(r)

        def inner(p):
            return 2.0 * np.pi * simpson(p * r, x=r)

        def tail(fn):
            val, _ = quad(lambda t: 2.0 * np.pi * t * fn(t), self.r_match, np.inf, limit=200)
            return val

        S = lambda t: float(self(np.array([t]))[0])  # noqa: E731
        dS = lambda t: float(self.derivative(np.array([t]))[0])  # noqa: E731
        return Norms(
            mass_sq=inner(s**2) + tail(lambda t: S(t) ** 2),
            grad_sq=inner(ds**2) + tail(lambda t: dS(t) ** 2),
            quartic=inner(s**4) + tail(lambda t: S(t) ** 4),
            sextic=inner(s**6) + tail(lambda t: S(t) ** 6),
        )

    def on_grid(self, spec: GridSpec) -> Field:
        return Field(spec, self(spec.radius()))


def _rhs(r, y, omega, cubic, quintic):
    s, p = y
    return [p, -p / r + omega * s - cubic * s**3 - quintic * s**5]


def _hit_zero(r, y, *args):
    return y[0]


_hit_zero.terminal = True
_hit_zero.direction = -1


def _turn_up(r, y, *args):
    return y[1]


_turn_up.terminal = True
_turn_up.direction = 1


def _shoot(a, omega, cubic, quintic, dense=False):
    """Integrate from the centre; +1 if the shot crosses zero, -1 if it turns back up."""
    f = omega * a - cubic * a**3 - quintic * a**5
    if f >= 0:
        return -1, None
    kappa = math.sqrt(omega)
    r0 = 1e-6 / max(kappa, math.sqrt(abs(f) / a))
    y0 = [a + 0.25 * f * r0**2, 0.5 * f * r0]
    sol = solve_ivp(
        _rhs,
        (r0, 80.0 / kappa),
        y0,
        args=(omega, cubic, quintic),
        method="DOP853",
        rtol=1e-13,
        atol=1e-14 * a,
        events=(_hit_zero, _turn_up),
        dense_output=dense,
    )
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return (1 if sol.y[0, -1] < 0 else -1), sol


def shoot_radial(omega: float, cubic: float = 1.0, quintic: float = 1.0, tolerance: float = 1e-12) -> RadialProfile:
    """Bisect on S(0) between undershoot and overshoot until ``hi - lo <= tolerance * hi``.

    The integrated core is kept out to where the two bracketing shots part by
    more than ``max(1e-9, sqrt((hi - lo)/lo))`` relative; the K0 tail takes over from there, so a loose
    tolerance moves the splice inward rather than corrupting the tail.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    lo = hi = None
    a = 1.0
    for _ in range(80):
        sign, _ = _shoot(a, omega, cubic, quintic)
        if sign < 0:
            lo = a
            if hi is not None:
                break
            a *= 2.0
        else:
            hi = a
            if lo is not None:
                break
            a *= 0.5
    if lo is None or hi is None:
        raise ShootingError(f"no bracket for omega={omega}")
    if lo > hi:
        raise ShootingError(f"inverted bracket [{lo}, {hi}] for omega={omega}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tolerance * hi:
            break
        sign, _ = _shoot(mid, omega, cubic, quintic)
        if sign > 0:
            hi = mid
        else:
            lo = mid

    _, sol_lo = _shoot(lo, omega, cubic, quintic, dense=True)
    _, sol_hi = _shoot(hi, omega, cubic, quintic, dense=True)
    r_end = min(sol_lo.t[-1], sol_hi.t[-1])
    r = np.linspace(sol_lo.t[0], r_end, 40001)
    s_lo = sol_lo.sol(r)[0]
    s_hi = sol_hi.sol(r)[0]
    part = max(1e-9, math.sqrt((hi - lo) / lo))
    bad = (np.abs(s_hi - s_lo) > part * np.abs(s_lo)) | (s_hi <= 0)
    idx = int(np.argmax(bad)) if np.any(bad) else r.size - 1
    r_match = float(r[max(idx - 1, 1)])
    return RadialProfile(omega, cubic, quintic, 0.5 * (lo + hi), sol_lo, r_match)


# -------------------------------------------------------------- ground states


@dataclass
class GroundState:
    """A converged stationary profile.

    For the Townes profile ``virial_residual`` and ``equation_residual`` refer
    to the cubic problem ``-Lap Q + Q - Q^3 = 0``.  ``equation_residual`` is
    ``||defect||_2 / ||S||_2``.
    """

    profile: Field
    omega: float
    mass: float
    energy: float
    virial_residual: float
    equation_residual: float
    central_value: float = float("nan")
    extras: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        meta = {
            "omega": self.omega,
            "mass": self.mass,
            "energy": self.energy,
            "virial_residual": self.virial_residual,
            "equation_residual": self.equation_residual,
            "central_value": self.central_value,
        }
        meta.update({k: v for k, v in self.extras.items() if isinstance(v, (int, float, str, bool))})
        return meta

    def save(self, path) -> None:
        save_field(self.profile, path, metadata=self.metadata())

    @classmethod
    def load(cls, path) -> "GroundState":
        u, meta = load_field(path)
        keys = ("omega", "mass", "energy", "virial_residual", "equation_residual", "central_value")
        rest = {k: v for k, v in meta.items() if k not in keys}
        return cls(u, *(meta.get(k, float("nan")) for k in keys), extras=rest)


def stationary_defect(u: Field, omega: float, cubic: float = 1.0, quintic: float = 1.0) -> np.ndarray:
    """``-Lap u + omega u - cubic |u|^2 u - quintic |u|^4 u`` on the grid."""
    uh = np.fft.fft2(u.values)
    lap = np.fft.ifft2(-u.spec.k_squared() * uh)
    a2 = u.abs2()
    return -lap + omega * u.values - cubic * a2 * u.values - quintic * a2**2 * u.values


def _relative_defect(u: Field, omega: float, cubic=1.0, quintic=1.0) -> float:
    d = stationary_defect(u, omega, cubic, quintic)
    return float(np.sqrt(np.sum(np.abs(d) ** 2) / np.sum(u.abs2())))


def rayleigh_omega(n: Norms) -> float:
    """Frequency from testing the stationary equation against S itself."""
    return (n.quartic + n.sextic - n.grad_sq) / n.mass_sq


def _radial_state(prof: RadialProfile, spec: GridSpec, cubic: float, quintic: float) -> GroundState:
    u = prof.on_grid(spec)
    n = Norms.of(u)
    if quintic == 0.0:
        vir = abs(n.grad_sq - 0.5 * n.quartic)
    else:
        vir = abs(n.virial)
    rad = prof.radial_integrals()
    return GroundState(
        profile=u,
        omega=prof.omega,
        mass=math.sqrt(n.mass_sq),
        energy=n.energy if quintic else 0.5 * n.grad_sq - 0.25 * n.quartic,
        virial_residual=vir,
        equation_residual=_relative_defect(u, prof.omega, cubic, quintic),
        central_value=prof.center,
        extras={
            "radial_mass_sq": rad.mass_sq,
            "radial_grad_sq": rad.grad_sq,
            "radial_quartic": rad.quartic,
            "radial_sextic": rad.sextic,
            "r_match": prof.r_match,
        },
    )


def shoot_Q(tolerance: float = 1e-12, spec: Optional[GridSpec] = None) -> GroundState:
    """Townes profile ``-Lap Q + Q - Q^3 = 0`` by radial shooting, sampled on ``spec``."""
    if not 0 < tolerance <= 1e-4:
        raise ValueError("tolerance must lie in (0, 1e-4]")
    prof = _townes_profile(tolerance)
    return _radial_state(prof, spec or make_grid(CANONICAL_N, CANONICAL_L), 1.0, 0.0)


@lru_cache(maxsize=None)
def _townes_profile(tolerance: float) -> RadialProfile:
    return shoot_radial(1.0, cubic=1.0, quintic=0.0, tolerance=tolerance)


def petviashvili_Q(spec: Optional[GridSpec] = None, tol: float = 1e-13, max_iter: int = 500) -> GroundState:
    """Townes profile from the 2D fixed-point iteration, independent of shooting.

    ``Q_hat <- s^{3/2} (Q^3)_hat / (1 + k^2)`` with the stabilizing factor
    ``s = <(1 + k^2) Q_hat, Q_hat> / <(Q^3)_hat, Q_hat>``.
    """
    spec = spec or make_grid(CANONICAL_N, CANONICAL_L)
    sym = 1.0 + spec.k_squared()
    u = np.exp(-0.5 * spec.radius() ** 2) * 2.0
    for it in range(max_iter):
        uh = np.fft.fft2(u)
        nh = np.fft.fft2(u**3)
        s = float(np.sum(sym * np.abs(uh) ** 2) / np.sum(nh * np.conj(uh)).real)
        new = np.fft.ifft2(s**1.5 * nh / sym).real
        if np.max(np.abs(new - u)) < tol * np.max(np.abs(new)):
            u = new
            break
        u = new
    else:
        raise ShootingError("fixed-point iteration for Q did not converge")
    field_q = Field(spec, u)
    n = Norms.of(field_q)
    return GroundState(
        profile=field_q,
        omega=1.0,
        mass=math.sqrt(n.mass_sq),
        energy=0.5 * n.grad_sq - 0.25 * n.quartic,
        virial_residual=abs(n.grad_sq - 0.5 * n.quartic),
        equation_residual=_relative_defect(field_q, 1.0, 1.0, 0.0),
        central_value=float(u[spec.n_points // 2, spec.n_points // 2]),
        extras={"iterations": it + 1},
    )


@lru_cache(maxsize=None)
def critical_mass() -> float:
    """M(Q) = ||Q||_2 from radial quadrature of the shot profile."""
    return math.sqrt(_townes_profile(0.0).radial_integrals().mass_sq)


@lru_cache(maxsize=None)
def gn_constants() -> dict:
    """Optimal Gagliardo-Nirenberg constants.

    ``C_GN = M(Q)^2 / 2`` for ``||grad u||^2 ||u||^2 / ||u||_4^4`` and
    ``C_GN_hat`` for ``||grad u||^4 ||u||^2 / ||u||_6^6``, the latter
    evaluated on the quintic ground state ``-Lap R + R - R^5 = 0``.
    """
    q = _townes_profile(0.0).radial_integrals()
    r = shoot_radial(1.0, cubic=0.0, quintic=1.0, tolerance=0.0).radial_integrals()
    return {
        "M_Q": math.sqrt(q.mass_sq),
        "C_GN": q.grad_sq * q.mass_sq / q.quartic,
        "C_GN_half_MQ2": 0.5 * q.mass_sq,
        "C_GN_hat": r.grad_sq**2 * r.mass_sq / r.sextic,
    }


def ode_oracle(omega: float, spec: Optional[GridSpec] = None, tolerance: float = 1e-12) -> GroundState:
    """Cubic-quintic ground state at fixed ``omega`` by radial shooting.

    The default grid is the canonical box scaled by ``1/sqrt(omega)``, with
    the point count doubled (up to ``MAX_N``) while the stationary-equation
    residual exceeds ``REFINE_RESIDUAL``.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    prof = shoot_radial(omega, cubic=1.0, quintic=1.0, tolerance=tolerance)
    if spec is not None:
        return _radial_state(prof, spec, 1.0, 1.0)
    n = CANONICAL_N
    while True:
        gs = _radial_state(prof, make_grid(n, CANONICAL_L / math.sqrt(omega)), 1.0, 1.0)
        if gs.equation_residual <= REFINE_RESIDUAL or n >= MAX_N:
            return gs
        n *= 2


# ------------------------------------------------------- constrained minimizer


class _Canonical:
    """Real-valued spectral toolkit on the minimizer's working grid."""

    def __init__(self, spec: GridSpec):
        self.spec = spec
        n = spec.n_points
        self.n = n
        self.h2 = spec.cell_area
        k = spec.wavenumbers
        kr = 2.0 * np.pi * np.fft.rfftfreq(n, d=spec.spacing)
        self.KX = np.broadcast_to(k[:, None], (n, kr.size))
        self.KY = np.broadcast_to(kr[None, :], (n, kr.size))
        self.K2 = self.KX**2 + self.KY**2
        w = np.full(kr.size, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.W = w[None, :]
        self.X, self.Y = spec.mesh()

    def fft(self, u):
        return sfft.rfft2(u)

    def ifft(self, uh):
        return sfft.irfft2(uh, s=(self.n, self.n))

    def dot(self, a, b):
        return float(np.sum(a * b) * self.h2)

    def norms(self, u):
        uh = self.fft(u)
        g = float(np.sum(self.W * self.K2 * np.abs(uh) ** 2) * self.h2 / self.n**2)
        u2 = u * u
        q4 = float(np.sum(u2 * u2) * self.h2)
        q6 = float(np.sum(u2 * u2 * u2) * self.h2)
        return g, q4, q6, uh

    def fiber_max(self, u):
        g, q4, q6, _ = self.norms(u)
        a = 0.5 * g - 0.25 * q4
        b = q6 / 6.0
        return a * a / (4.0 * b) if a > 0 and b > 0 else math.inf

    def dilation(self, u, uh):
        """Generator ``u + x . grad u`` of the dilation group at lam = 1."""
        ux = self.ifft(1j * self.KX * uh)
        uy = self.ifft(1j * self.KY * uh)
        return u + self.X * ux + self.Y * uy


def _gaussian_seed(c: float, spec: GridSpec) -> np.ndarray:
    """Mass-c Gaussian in the frame where the expected decay rate is ~1.

    For ``a e^{-r^2/2}``: ``||u||^2 = pi a^2``, ``||grad u||^2 = pi a^2``,
    ``||u||_4^4 = pi a^4 / 2``, ``||u||_6^6 = pi a^6 / 3``.
    """
    a2 = c * c / math.pi
    base = Norms(math.pi * a2, math.pi * a2, 0.5 * math.pi * a2**2, math.pi * a2**3 / 3.0)
    return _reframe_width(base, c, spec, lambda X, Y, width: np.exp(-(X**2 + Y**2) / (2 * width**2)))


def _reframe_width(n: Norms, c, spec, profile):
    lam2 = 3.0 * (2.0 * n.grad_sq - n.quartic) / (4.0 * n.sextic)
    omega = rayleigh_omega(n.scaled(math.sqrt(lam2)))
    width = math.sqrt(omega / lam2)
    X, Y = spec.mesh()
    u = profile(X, Y, width)
    return u * c / math.sqrt(np.sum(u * u) * spec.cell_area)


def _canonical_from_field(seed: Field, c: float, spec: GridSpec) -> np.ndarray:
    """Map an arbitrary seed into the working frame (decay rate ~1, mass c)."""
    n = Norms.of(seed)
    if n.sextic <= 0 or 2 * n.grad_sq <= n.quartic:
        raise ValueError("seed must be nonzero and below the critical mass")
    lam = math.sqrt(3.0 * (2.0 * n.grad_sq - n.quartic) / (4.0 * n.sextic))
    omega = rayleigh_omega(n.scaled(lam))
    mu = lam / math.sqrt(omega)
    u = mu * resample(seed, spec, stretch=mu).values.real
    return u * c / math.sqrt(np.sum(u * u) * spec.cell_area)


@dataclass
class _MinResult:
    u: np.ndarray
    iterations: int
    residual: float
    fiber_max: float
    s: float
    lam: float
    reframes: int


def _descend(ctx: _Canonical, c: float, u: np.ndarray, tol: float, max_iter: int):
    """Preconditioned Barzilai-Borwein descent of the fiber maximum on ``M = c``.

    Search directions are kept orthogonal to ``u`` (mass) and to the dilation
    generator, along which the continuum functional is exactly flat.
    """
    tau = 0.5
    prev = None
    res = math.inf
    for it in range(max_iter):
        g, q4, q6, uh = ctx.norms(u)
        a = 0.5 * g - 0.25 * q4
        b = q6 / 6.0
        if a <= 0 or b <= 0:
            raise MinimizationError("iterate left the admissible cone (A <= 0); the profile collapsed")
        s = a / (2.0 * b)
        jval = a * a / (4.0 * b)
        u2 = u * u
        grad = s * (-ctx.ifft(-ctx.K2 * uh) - u2 * u) - s * s * u2 * u2 * u
        lam = ctx.dot(grad, u) / ctx.dot(u, u)

        e1 = u / math.sqrt(ctx.dot(u, u))
        gen = ctx.dilation(u, uh)
        gen -= ctx.dot(gen, e1) * e1
        e2 = gen / math.sqrt(ctx.dot(gen, gen))
        rg = grad - ctx.dot(grad, e1) * e1
        rg -= ctx.dot(rg, e2) * e2
        res = math.sqrt(ctx.dot(rg, rg))
        if res < tol * (1.0 + abs(jval)):
            return _MinResult(u, it, res, jval, s, lam, 0)

        pre = 1.0 / (max(-lam, 1e-3 * s) + s * ctx.K2)
        pg = ctx.ifft(ctx.fft(rg) * pre)
        pg -= ctx.dot(pg, e1) * e1
        pg -= ctx.dot(pg, e2) * e2
        if prev is not None:
            du = u - prev[0]
            dg = rg - prev[1]
            dp = pg - prev[2]
            sy = ctx.dot(du, dg)
            yp = ctx.dot(dg, dp)
            if sy > 0 and yp > 0:
                tau = sy / yp
            tau = min(max(tau, 1e-3), 50.0)
        prev = (u, rg, pg)
        while True:
            un = u - tau * pg
            un *= c / math.sqrt(ctx.dot(un, un))
            jn = ctx.fiber_max(un)
            if jn <= jval * (1.0 + 1e-8) + 1e-14 or tau < 1e-10:
                break
            tau *= 0.5
        if not math.isfinite(jn):
            raise MinimizationError("line search could not keep A > 0")
        u = un
    raise MinimizationError(f"no convergence after {max_iter} iterations (residual {res:.3e})")


def _minimize_canonical(c, u, ctx, tol, max_iter):
    reframes = 0
    while True:
        r = _descend(ctx, c, u, tol, max_iter)
        kappa = math.sqrt(max(-r.lam, 0.0) / r.s)
        if kappa < 0.05:
            raise MinimizationError("minimizer spread over the whole box (collapse to zero field)")
        if abs(kappa - 1.0) <= 0.15 or reframes >= 3:
            r.reframes = reframes
            return r
        mu = 1.0 / kappa
        u = mu * resample(Field(ctx.spec, r.u), ctx.spec, stretch=mu).values.real
        u *= c / math.sqrt(ctx.dot(u, u))
        reframes += 1


def _finish(c: float, r: _MinResult, ctx: _Canonical, tolerance: float) -> GroundState:
    lam_star = math.sqrt(r.s)
    spec = make_grid(ctx.spec.n_points, ctx.spec.box_length / lam_star)
    vals = lam_star * r.u
    vals *= c / math.sqrt(np.sum(vals * vals) * spec.cell_area)
    u = Field(spec, vals)
    n = Norms.of(u)
    omega = rayleigh_omega(n)
    return GroundState(
        profile=u,
        omega=omega,
        mass=math.sqrt(n.mass_sq),
        energy=n.energy,
        virial_residual=abs(n.virial),
        equation_residual=_relative_defect(u, omega),
        central_value=float(np.max(vals)),
        extras={
            "iterations": r.iterations,
            "projected_residual": r.residual,
            "fiber_max": r.fiber_max,
            "lambda_star": lam_star,
            "reframes": r.reframes,
            "tolerance": tolerance,
            "grad_norm_sq": n.grad_sq,
        },
    )


def _check_mass(c: float, policy: Optional[tuple] = None) -> float:
    mq = critical_mass()
    if not (ENDPOINT_MARGIN * mq < c < (1 - ENDPOINT_MARGIN) * mq):
        raise ValueError(f"c={c} outside (0, M(Q)={mq:.6f}) with margin {ENDPOINT_MARGIN}")
    if policy is not None:
        lo, hi = policy
        if not lo * mq <= c <= hi * mq:
            raise ValueError(f"c={c} outside the endpoint policy [{lo}, {hi}]*M(Q)")
    return mq


def minimize_mc(
    c: float,
    seed: Optional[Field] = None,
    tolerance: float = 1e-9,
    spec: Optional[GridSpec] = None,
    max_iter: int = 4000,
    endpoint_policy: Optional[tuple] = DEFAULT_C_RANGE,
) -> GroundState:
    """Minimize H on ``{M = c, K = 0}``; returns ``S_c`` with ``energy = m_c``.

    ``spec`` is the working grid (default n=256, L=32) in the frame where the
    profile decays like ``e^{-|x|}``; the returned profile lives on that grid
    with its box rescaled by ``1/lambda``, so it sits exactly on ``K = 0``.
    Without an explicit ``spec`` the grid is doubled (up to n=1024) while the
    stationary-equation residual exceeds ``REFINE_RESIDUAL``.
    """
    gs, _ = _minimize_mc(c, seed, tolerance, spec, max_iter, endpoint_policy)
    return gs


def _minimize_mc(c, seed, tolerance, spec, max_iter, endpoint_policy, canonical_seed=None):
    _check_mass(c, endpoint_policy)
    adaptive = spec is None
    ctx = _Canonical(spec or make_grid(CANONICAL_N, CANONICAL_L))
    if canonical_seed is not None:
        if canonical_seed.shape != (ctx.n, ctx.n):
            src = make_grid(canonical_seed.shape[0], ctx.spec.box_length)
            canonical_seed = resample(Field(src, canonical_seed), ctx.spec).values.real
        u = canonical_seed * c / math.sqrt(ctx.dot(canonical_seed, canonical_seed))
    elif seed is not None:
        u = _canonical_from_field(seed, c, ctx.spec)
    else:
        u = _gaussian_seed(c, ctx.spec)
    while True:
        r = _minimize_canonical(c, u, ctx, tolerance, max_iter)
        gs = _finish(c, r, ctx, tolerance)
        # Small c gives sharply peaked profiles; refine until the continuum
        # equation is met, not just the discrete one.
        if not adaptive or gs.equation_residual <= REFINE_RESIDUAL or ctx.n >= MAX_N:
            return gs, r.u
        fine = make_grid(2 * ctx.n, ctx.spec.box_length)
        u = resample(Field(ctx.spec, r.u), fine).values.real.copy()
        ctx = _Canonical(fine)
        u *= c / math.sqrt(ctx.dot(u, u))


# ------------------------------------------------------------------ the curve


@dataclass(frozen=True)
class McPoint:
    c: float
    m_c: float
    omega: float
    grad_norm_sq: float


@dataclass
class McCurve:
    """Tabulated ``c -> m_c`` with a monotone cubic (PCHIP) interpolant.

    Outside the table the curve is only available with ``extrapolate=True``:
    ``m_c ~ m_1 (c_1/c)^2`` toward ``c -> 0`` and
    ``m_c ~ m_N (1 - c^2/M(Q)^2) / (1 - c_N^2/M(Q)^2)`` toward ``M(Q)``.
    """

    points: list
    c_max: float
    method: str = "fiber-max projected descent"
    tolerances: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        self.points = [p if isinstance(p, McPoint) else McPoint(**p) for p in self.points]
        cs = [p.c for p in self.points]
        if not self.points:
            raise ValueError("empty curve")
        if any(b <= a for a, b in zip(cs, cs[1:])):
            raise ValueError("c values must be strictly increasing")
        if cs[0] <= 0 or cs[-1] >= self.c_max:
            raise ValueError("c values must lie in (0, M(Q))")
        self._interp = None
        if len(self.points) >= 2:
            self._interp = PchipInterpolator(np.array(cs), np.array([p.m_c for p in self.points]))

    @property
    def c(self) -> np.ndarray:
        return np.array([p.c for p in self.points])

    @property
    def m(self) -> np.ndarray:
        return np.array([p.m_c for p in self.points])

    @property
    def c_range(self) -> tuple:
        return self.points[0].c, self.points[-1].c

    @property
    def lower_extrapolation(self) -> str:
        return "m_c ~ m_first * (c_first/c)^2 for c < c_first"

    @property
    def upper_extrapolation(self) -> str:
        return "m_c ~ m_last * (1 - (c/M(Q))^2) / (1 - (c_last/M(Q))^2) for c > c_last"

    def is_strictly_decreasing(self) -> bool:
        m = self.m
        return bool(np.all(np.diff(m) < 0))

    def in_range(self, c: float) -> bool:
        lo, hi = self.c_range
        return lo <= c <= hi

    def __call__(self, c, extrapolate: bool = False):
        c_arr = np.asarray(c, dtype=float)
        lo, hi = self.c_range
        inside = (c_arr >= lo) & (c_arr <= hi)
        if not extrapolate and not np.all(inside):
            raise ValueError(f"c outside the tabulated range [{lo}, {hi}]")
        if self._interp is None and not (extrapolate and not np.any(inside)):
            if np.all(c_arr[inside] == lo):
                out = np.full(c_arr.shape, self.points[0].m_c)
            else:
                raise ValueError("single-point curve cannot be interpolated")
        else:
            out = np.empty(c_arr.shape)
            if np.any(inside):
                out[inside] = self._interp(c_arr[inside]) if self._interp else self.points[0].m_c
        if extrapolate:
            below = c_arr < lo
            above = c_arr > hi
            m_lo = self.points[0].m_c
            m_hi = self.points[-1].m_c
            with np.errstate(divide="ignore"):
                out[below] = m_lo * (lo / c_arr[below]) ** 2
            scale_hi = 1.0 - (hi / self.c_max) ** 2
            frac = np.clip(1.0 - (c_arr[above] / self.c_max) ** 2, 0.0, None)
            out[above] = m_hi * frac / scale_hi
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {
            "c_max": self.c_max,
            "points": [vars(p) | {} for p in self.points],
            "method": self.method,
            "tolerances": self.tolerances,
            "diagnostics": self.diagnostics,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, doc: dict) -> "McCurve":
        return cls(
            points=[McPoint(**{k: p[k] for k in ("c", "m_c", "omega", "grad_norm_sq")}) for p in doc["points"]],
            c_max=doc["c_max"],
            method=doc.get("method", ""),
            tolerances=doc.get("tolerances", {}),
            diagnostics=doc.get("diagnostics", []),
        )

    @classmethod
    def load(cls, path) -> "McCurve":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _cold_point(args):
    c, tolerance, spec, policy = args
    gs = minimize_mc(c, tolerance=tolerance, spec=spec, endpoint_policy=policy)
    return gs


def tabulate_mc(
    c_values: Sequence[float],
    tolerance: float = 1e-9,
    warm_start: bool = True,
    cross_check: Sequence[int] = (),
    spec: Optional[GridSpec] = None,
    endpoint_policy: Optional[tuple] = DEFAULT_C_RANGE,
    workers: int = 1,
    keep_states: bool = False,
):
    """Tabulate ``m_c`` over sorted, distinct ``c_values`` in (0, M(Q)).

    Warm-started runs seed each point with the previous minimizer.  Indices in
    ``cross_check`` are also solved from a cold Gaussian seed; when the two
    disagree the lower energy is kept and the other recorded as an alternate.
    Returns the curve, or ``(curve, states)`` with ``keep_states=True``.
    """
    cs = [float(c) for c in c_values]
    if not cs:
        raise ValueError("no c values")
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise ValueError("c values must be sorted and distinct")
    mq = critical_mass()
    states = []
    diagnostics = []
    if not warm_start and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            jobs = [(c, tolerance, spec, endpoint_policy) for c in cs]
            states = list(pool.map(_cold_point, jobs))
        diagnostics = [{"c": gs.mass, "iterations": gs.extras["iterations"]} for gs in states]
    else:
        prev = None
        for i, c in enumerate(cs):
            try:
                gs, canon = _minimize_mc(
                    c, None, tolerance, spec, 4000, endpoint_policy, canonical_seed=prev if warm_start else None
                )
            except (MinimizationError, ValueError) as exc:
                raise type(exc)(f"tabulate_mc failed at c={c}: {exc}") from exc
            diag = {"c": c, "iterations": gs.extras["iterations"], "equation_residual": gs.equation_residual}
            if i in cross_check:
                cold = minimize_mc(c, tolerance=tolerance, spec=spec, endpoint_policy=endpoint_policy)
                diag["cold_m_c"] = cold.energy
                if abs(cold.energy - gs.energy) > DISTINCT_MINIMIZERS * abs(gs.energy):
                    diag["alternate_m_c"] = max(cold.energy, gs.energy)
                if cold.energy < gs.energy:
                    gs = cold
            diagnostics.append(diag)
            states.append(gs)
            prev = canon if warm_start else None
            log.debug("c=%.6f m_c=%.12g omega=%.6g", c, gs.energy, gs.omega)
    points = [McPoint(gs.mass, gs.energy, gs.omega, gs.extras["grad_norm_sq"]) for gs in states]
    curve = McCurve(
        points=points,
        c_max=mq,
        tolerances={"minimizer": tolerance},
        diagnostics=diagnostics,
    )
    return (curve, states) if keep_states else curve
