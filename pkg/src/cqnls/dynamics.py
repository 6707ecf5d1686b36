"""Split-step evolution, local virial diagnostics and trajectory classification.

Strang splitting for ``i u_t + Lap u + |u|^2 u + |u|^4 u = 0``: the nonlinear
substep keeps ``|u|`` pointwise fixed, so its phase factor is exact, and the
linear substep is diagonal in Fourier space.  Both substeps are unitary, so the
discrete mass is conserved to roundoff and the composite step is time
reversible (``dt -> -dt`` undoes it).

Local virial with weight ``w(x) = R^2 chi(x/R)``:

    z_R   = int w |u|^2
    z_R'  = 2 Im int grad w . grad u  conj(u)
    z_R'' = 4 Re int d_jk w d_j u d_k conj(u) - int Lap^2 w |u|^2
            - int Lap w |u|^4 - 4/3 int Lap w |u|^6
          = 8 K(u) + A_R(u)
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy.special import expit

from .functionals import Norms
from .grid import Field, GridSpec

BLOWUP_CEILING = 0.1
MASS_DRIFT_TOL = 1e-8
ENERGY_DRIFT_TOL = 1e-6
MAX_LINEAR_PHASE = 50.0
MAX_NONLINEAR_PHASE = 0.5
STEEPNESS = 2.0

SCATTER = "scatter-like"
BLOWUP = "blowup-like"
UNDECIDED = "undecided"


class ResolutionError(RuntimeError):
    """The time step is too coarse for the grid or the field amplitude."""


# ------------------------------------------------------------------- cutoff


def _logistic_derivs(psi_derivs):
    """Derivatives 0..4 of ``expit(psi(t))`` from those of ``psi`` (Faa di Bruno)."""
    p0, p1, p2, p3, p4 = psi_derivs
    s = expit(p0)
    s1 = s * expit(-p0)
    one_m_2s = expit(-p0) - s
    s2 = s1 * one_m_2s
    s3 = s1 * (1.0 - 6.0 * s * expit(-p0))
    s4 = s2 * (1.0 - 12.0 * s * expit(-p0))
    d1 = s1 * p1
    d2 = s2 * p1**2 + s1 * p2
    d3 = s3 * p1**3 + 3.0 * s2 * p1 * p2 + s1 * p3
    d4 = s4 * p1**4 + 6.0 * s3 * p1**2 * p2 + s2 * (3.0 * p2**2 + 4.0 * p1 * p3) + s1 * p4
    return s, d1, d2, d3, d4


def _fade(t):
    """``1 - s(t)`` and four derivatives, s the C^infinity step from 0 to 1 on [0, 1].

    ``s = f(t) / (f(t) + f(1-t))`` with ``f(t) = exp(-a/t)``, i.e. ``expit(-psi)``
    for ``psi = a (1/t - 1/(1-t))``.  ``a = STEEPNESS`` balances the essential
    singularities at the ends against the slope in the middle; it minimizes
    the spectral tail of the fourth derivative.
    """
    t_raw = np.asarray(t, dtype=float)
    # within 2e-3 of either end the step is flat to exp(-500)
    t = np.clip(t_raw, 2e-3, 1.0 - 2e-3)
    a = 1.0 / t
    b = 1.0 / (1.0 - t)
    # derivatives of psi = 1/t - 1/(1-t); n-th derivative (-1)^n n! a^{n+1} - n! b^{n+1}
    psi = [a - b, -(a**2) - b**2, 2 * a**3 - 2 * b**3, -6 * a**4 - 6 * b**4, 24 * a**5 - 24 * b**5]
    psi = [STEEPNESS * p for p in psi]
    # 1 - s = expit(psi)
    out = list(_logistic_derivs(psi))
    lo, hi = t_raw < 2e-3, t_raw > 1.0 - 2e-3
    for k, d in enumerate(out):
        d[lo] = 1.0 if k == 0 else 0.0
        d[hi] = 0.0
    return out


def chi_radial(r):
    """Radial cutoff ``chi`` and its first four r-derivatives.

    ``chi = r^2`` for r <= 1, ``0`` for r >= 2, and ``r^2 (1 - s(r - 1))`` between.
    """
    r = np.asarray(r, dtype=float)
    out = [np.zeros_like(r) for _ in range(5)]
    inner = r <= 1.0
    out[0][inner] = r[inner] ** 2
    out[1][inner] = 2.0 * r[inner]
    out[2][inner] = 2.0
    mid = (r > 1.0) & (r < 2.0)
    if np.any(mid):
        rm = r[mid]
        g, g1, g2, g3, g4 = _fade(rm - 1.0)
        out[0][mid] = rm**2 * g
        out[1][mid] = 2 * rm * g + rm**2 * g1
        out[2][mid] = 2 * g + 4 * rm * g1 + rm**2 * g2
        out[3][mid] = 6 * g1 + 6 * rm * g2 + rm**2 * g3
        out[4][mid] = 12 * g2 + 8 * rm * g3 + rm**2 * g4
    return out


@dataclass(frozen=True)
class Cutoff:
    """Weight ``R^2 chi(x/R)`` and its derivative grids.

    ``grad_weight = R grad chi(x/R)``, ``hessian_chi = d_jk chi (x/R)``,
    ``laplacian_chi = Lap chi (x/R)`` and ``bilaplacian_chi = Lap^2 chi (x/R)``
    (the weight's bilaplacian is this divided by ``R^2``).
    """

    spec: GridSpec
    R: float
    chi_values: np.ndarray
    weight: np.ndarray
    grad_weight: tuple
    hessian_chi: tuple
    laplacian_chi: np.ndarray
    bilaplacian_chi: np.ndarray

    @classmethod
    def build(cls, spec: GridSpec, R: float) -> "Cutoff":
        if not 0 < R <= spec.box_length / 4:
            raise ValueError(f"R must lie in (0, L/4] = (0, {spec.box_length / 4}]")
        X, Y = spec.mesh()
        Xs, Ys = X / R, Y / R
        r = np.hypot(Xs, Ys)
        c0, c1, c2, c3, c4 = chi_radial(r)
        inner = r <= 1.0
        safe = np.where(inner, 1.0, r)
        c1_over_r = np.where(inner, 2.0, c1 / safe)
        ex, ey = np.where(inner, 0.0, Xs / safe), np.where(inner, 0.0, Ys / safe)
        hxx = np.where(inner, 2.0, c2 * ex * ex + c1_over_r * (1 - ex * ex))
        hyy = np.where(inner, 2.0, c2 * ey * ey + c1_over_r * (1 - ey * ey))
        hxy = np.where(inner, 0.0, (c2 - c1_over_r) * ex * ey)
        lap = c2 + c1_over_r
        bilap = np.where(inner, 0.0, c4 + 2 * c3 / safe - c2 / safe**2 + c1 / safe**3)
        grad = (R * c1_over_r * Xs, R * c1_over_r * Ys)
        return cls(spec, float(R), c0, R * R * c0, grad, (hxx, hxy, hyy), lap, bilap)


# ---------------------------------------------------------------- observables


def _spectral_grad(values, spec):
    uh = np.fft.fft2(values)
    KX, KY = spec.k_mesh()
    return np.fft.ifft2(1j * KX * uh), np.fft.ifft2(1j * KY * uh)


def virial_zR(u: Field, cutoff: Cutoff) -> float:
    return float(np.sum(cutoff.weight * u.abs2()) * u.spec.cell_area)


def virial_dzR(u: Field, cutoff: Cutoff) -> float:
    ux, uy = _spectral_grad(u.values, u.spec)
    gx, gy = cutoff.grad_weight
    return float(2.0 * np.sum((gx * ux + gy * uy) * np.conj(u.values)).imag * u.spec.cell_area)


def _virial_terms(u: Field, cutoff: Cutoff, subtract_flat: bool) -> float:
    ux, uy = _spectral_grad(u.values, u.spec)
    hxx, hxy, hyy = cutoff.hessian_chi
    lap = cutoff.laplacian_chi
    if subtract_flat:
        hxx, hyy, lap = hxx - 2.0, hyy - 2.0, lap - 4.0
    quad = hxx * np.abs(ux) ** 2 + hyy * np.abs(uy) ** 2 + 2.0 * hxy * (ux * np.conj(uy)).real
    a2 = u.abs2()
    total = (
        4.0 * quad
        - cutoff.bilaplacian_chi / cutoff.R**2 * a2
        - lap * a2**2
        - (4.0 / 3.0) * lap * a2**3
    )
    return float(np.sum(total) * u.spec.cell_area)


def virial_d2zR(u: Field, cutoff: Cutoff) -> float:
    """Second time derivative of z_R evaluated from the field."""
    return _virial_terms(u, cutoff, subtract_flat=False)


def virial_remainder(u: Field, cutoff: Cutoff) -> float:
    """``A_R = z_R'' - 8K`` written with integrands supported where chi differs from |x|^2."""
    return _virial_terms(u, cutoff, subtract_flat=True)


# -------------------------------------------------------------------- stepper


class Stepper:
    """Strang split-step propagator with cached linear phases.

    ``order=4`` composes three Strang steps with the triple-jump weights
    ``(w, 1 - 2w, w)``, ``w = 1/(2 - 2^{1/3})``; every substep is still a
    unitary Strang step, so mass conservation and reversibility carry over.
    """

    def __init__(self, spec: GridSpec, dt: float, order: int = 2):
        if dt == 0 or not math.isfinite(dt):
            raise ValueError("dt must be finite and nonzero")
        if order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        k2 = spec.k_squared()
        if order == 2:
            weights = (1.0,)
        else:
            w = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
            weights = (w, 1.0 - 2.0 * w, w)
        self.substeps = tuple(w * dt for w in weights)
        if max(abs(d) for d in self.substeps) * float(k2.max()) > MAX_LINEAR_PHASE:
            raise ResolutionError(
                f"dt*k_max^2 = {abs(dt) * k2.max():.3g} exceeds {MAX_LINEAR_PHASE}; reduce dt"
            )
        self.spec = spec
        self.dt = dt
        self.order = order
        self._linear_cache = {d: np.exp(-1j * d * k2) for d in set(self.substeps)}

    def _phase(self, v, h):
        a2 = v.real**2 + v.imag**2
        return v * np.exp(1j * h * (a2 + a2 * a2))

    def _linear(self, v, d):
        w = sfft.fft2(v)
        w *= self._linear_cache[d]
        return sfft.ifft2(w, overwrite_x=True)

    def step(self, v: np.ndarray) -> np.ndarray:
        for d in self.substeps:
            v = self._phase(v, 0.5 * d)
            v = self._linear(v, d)
            v = self._phase(v, 0.5 * d)
        return v

    def advance(self, v: np.ndarray, steps: int) -> np.ndarray:
        """``steps`` full steps with adjacent half-phases fused into one."""
        if steps <= 0:
            return v
        seq = self.substeps * steps
        v = self._phase(v, 0.5 * seq[0])
        for d, nxt in zip(seq[:-1], seq[1:]):
            v = self._phase(self._linear(v, d), 0.5 * (d + nxt))
        return self._phase(self._linear(v, seq[-1]), 0.5 * seq[-1])

    def check_amplitude(self, v: np.ndarray) -> None:
        a2 = float(np.max(v.real**2 + v.imag**2))
        if abs(self.dt) * (a2 + a2 * a2) > MAX_NONLINEAR_PHASE:
            raise ResolutionError(
                f"nonlinear phase per step {abs(self.dt) * (a2 + a2 * a2):.3g} exceeds {MAX_NONLINEAR_PHASE}"
            )


def strang_step(u: Field, dt: float) -> Field:
    """One Strang step: half nonlinear phase, full linear flow, half nonlinear phase."""
    st = Stepper(u.spec, dt)
    st.check_amplitude(u.values)
    return Field(u.spec, st.step(u.values))


# ---------------------------------------------------------------- evolution


@dataclass
class EvolutionTrace:
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    virial: list = field(default_factory=list)
    grad_norm_sq: list = field(default_factory=list)
    quartic: list = field(default_factory=list)
    z_R: list = field(default_factory=list)
    dz_R: list = field(default_factory=list)
    sup_norm: list = field(default_factory=list)
    fate: str = UNDECIDED
    R_used: float = float("nan")
    dt: float = float("nan")
    order: int = 2
    aborted_at: Optional[float] = None
    valid: bool = True
    flags: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict)
    final: Optional[Field] = field(default=None, repr=False)

    COLUMNS = ("t", "mass", "energy", "virial", "grad_norm_sq", "z_R", "dz_R", "sup_norm")

    def _record(self, t, u: Field, cutoff: Cutoff):
        n = Norms(
            float(np.sum(u.abs2()) * u.spec.cell_area),
            _grad_sq(u),
            float(np.sum(u.abs2() ** 2) * u.spec.cell_area),
            float(np.sum(u.abs2() ** 3) * u.spec.cell_area),
        )
        self.times.append(float(t))
        self.mass.append(math.sqrt(n.mass_sq))
        self.energy.append(n.energy)
        self.virial.append(n.virial)
        self.grad_norm_sq.append(n.grad_sq)
        self.quartic.append(n.quartic)
        self.z_R.append(virial_zR(u, cutoff))
        self.dz_R.append(virial_dzR(u, cutoff))
        self.sup_norm.append(float(np.sqrt(np.max(u.abs2()))))

    def mass_drift(self) -> float:
        m0 = self.mass[0]
        return max(abs(m - m0) for m in self.mass) / m0 if m0 > 0 else 0.0

    def energy_drift(self) -> float:
        e0 = self.energy[0]
        scale = abs(e0) if e0 != 0 else max(self.grad_norm_sq[0], 1.0)
        return max(abs(e - e0) for e in self.energy) / scale if self.energy else 0.0

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            cols = (self.times, self.mass, self.energy, self.virial, self.grad_norm_sq,
                    self.z_R, self.dz_R, self.sup_norm)
            for row in zip(*cols):
                w.writerow([repr(float(v)) for v in row])
        sidecar = path.with_suffix(".fate.json")
        sidecar.write_text(json.dumps({
            "fate": self.fate, "evidence": self.evidence, "R_used": self.R_used, "dt": self.dt, "order": self.order,
            "aborted_at": self.aborted_at, "valid": self.valid, "flags": self.flags,
            "mass_drift": self.mass_drift(), "energy_drift": self.energy_drift(),
        }, indent=1))


def _grad_sq(u: Field) -> float:
    uh = np.fft.fft2(u.values)
    n = u.spec.n_points
    return float(u.spec.cell_area * np.sum(u.spec.k_squared() * np.abs(uh) ** 2) / n**2)


def wraparound_time(u: Field) -> float:
    """``L / (4 v)`` with the rms group speed ``v = 2 ||grad u|| / ||u||``."""
    m2 = float(np.sum(u.abs2()) * u.spec.cell_area)
    if m2 == 0:
        return math.inf
    v = 2.0 * math.sqrt(_grad_sq(u) / m2)
    return math.inf if v == 0 else u.spec.box_length / (4.0 * v)


def evolve(
    u0: Field,
    t_end: float,
    dt: float = 1e-3,
    R: Optional[float] = None,
    sample_every: int = 10,
    region=None,
    ceiling: float = BLOWUP_CEILING,
    order: int = 2,
) -> EvolutionTrace:
    """Integrate to ``t_end`` (or until the blow-up ceiling) and classify the run.

    The run aborts as blowup-like once ``||u||_inf^2 * dx^2 > ceiling``.
    ``order=4`` switches to the triple-jump composition (see :class:`Stepper`).
    Passing ``region`` adds the data's static classification to the evidence.
    """
    spec = u0.spec
    R = spec.box_length / 4 if R is None else R
    cutoff = Cutoff.build(spec, R)
    stepper = Stepper(spec, dt, order)
    steps = int(round(t_end / abs(dt)))
    trace = EvolutionTrace(R_used=R, dt=dt, order=order)
    if t_end > wraparound_time(u0):
        trace.flags.append(f"t_end exceeds the wrap-around time {wraparound_time(u0):.3g}")
    dx2 = spec.cell_area
    v = u0.values.copy()
    if float(np.max(v.real**2 + v.imag**2)) * dx2 > ceiling:
        raise ResolutionError(f"initial data already exceeds the blow-up ceiling ||u||_inf^2 dx^2 > {ceiling}")
    trace._record(0.0, u0, cutoff)
    done = 0
    while done < steps:
        # the ceiling is checked every sample, and every step once it is near
        sup2 = float(np.max(v.real**2 + v.imag**2))
        chunk = 1 if sup2 * dx2 > 0.5 * ceiling else min(sample_every - done % sample_every, steps - done)
        v = stepper.advance(v, chunk)
        done += chunk
        sup2 = float(np.max(v.real**2 + v.imag**2))
        if not math.isfinite(sup2) or sup2 * dx2 > ceiling:
            trace.aborted_at = done * dt
            if math.isfinite(sup2):
                trace._record(done * dt, Field(spec, v), cutoff)
            break
        if done % sample_every == 0 or done == steps:
            trace._record(done * dt, Field(spec, v), cutoff)
    trace.final = Field(spec, v) if np.all(np.isfinite(v)) else None
    if trace.mass_drift() > MASS_DRIFT_TOL:
        trace.valid = False
        trace.flags.append(f"mass drift {trace.mass_drift():.2e}")
    if trace.energy_drift() > ENERGY_DRIFT_TOL:
        trace.valid = False
        trace.flags.append(f"energy drift {trace.energy_drift():.2e}")
    fate, evidence = classify_fate(trace, region)
    trace.fate, trace.evidence = fate, evidence
    if region is not None and len(region.curve.points) > 1:
        from .mei import in_set_A

        try:
            rep = in_set_A(region, u0)
            evidence["initial_status"] = rep.status
            evidence["initial_blowup_criterion"] = rep.blowup_criterion
        except ValueError as exc:
            evidence["initial_status"] = f"unclassified: {exc}"
    return trace


def classify_fate(trace: EvolutionTrace, region=None) -> tuple[str, dict]:
    """Heuristic fate from the sampled series.

    blowup-like: the abort fired, or ``||grad u||^2`` rises monotonically past
    100x its initial value.  scatter-like: ``||u||_4^4`` falls below 5% of its
    initial value and stays there over the last quarter of the run.
    """
    if trace.aborted_at is not None:
        return BLOWUP, {"aborted_at": trace.aborted_at, "sup_norm": trace.sup_norm[-1]}
    g = np.asarray(trace.grad_norm_sq)
    q = np.asarray(trace.quartic)
    t = np.asarray(trace.times)
    if g.size and g[0] > 0:
        hit = np.nonzero(g > 100.0 * g[0])[0]
        if hit.size:
            j = hit[0]
            below = np.nonzero(g[:j] <= 10.0 * g[0])[0]
            i = below[-1] if below.size else 0
            if np.all(np.diff(g[i : j + 1]) >= 0):
                return BLOWUP, {"growth_from": float(t[i]), "growth_to": float(t[j]), "ratio": float(g[j] / g[0])}
    if q.size == 0 or q[0] == 0:
        return SCATTER, {"reason": "zero data"}
    tail = t >= t[0] + 0.75 * (t[-1] - t[0])
    ratio = q / q[0]
    if np.all(ratio[tail] < 0.05):
        first = int(np.nonzero(ratio < 0.05)[0][0])
        return SCATTER, {"l4_below_5pct_from": float(t[first]), "final_ratio": float(ratio[-1])}
    return UNDECIDED, {"final_l4_ratio": float(ratio[-1]), "max_grad_ratio": float(g.max() / g[0]) if g[0] > 0 else 0.0}


# ------------------------------------------------------------ virial identity


def virial_identity_check(u0: Field, cutoff: Cutoff, dt: float, spacing: int = 1) -> dict:
    """Compare a 5-point finite difference of z_R with ``8K + A_R`` at t = 0.

    The stencil uses nodes ``t = j * spacing * dt``, ``j = -2..2``, obtained by
    stepping forward and backward from ``u0``.
    """
    fwd = Stepper(u0.spec, dt)
    bwd = Stepper(u0.spec, -dt)
    z = {0: virial_zR(u0, cutoff)}
    for sign, st in ((1, fwd), (-1, bwd)):
        v = u0.values.copy()
        for j in (1, 2):
            for _ in range(spacing):
                v = st.step(v)
            z[sign * j] = virial_zR(Field(u0.spec, v), cutoff)
    h = spacing * dt
    fd = (-z[-2] + 16 * z[-1] - 30 * z[0] + 16 * z[1] - z[2]) / (12 * h * h)
    k = Norms.of(u0).virial
    a_r = virial_remainder(u0, cutoff)
    direct = 8 * k + a_r
    return {
        "dt": dt,
        "stencil_spacing": h,
        "fd_second_derivative": fd,
        "eight_K": 8 * k,
        "A_R": a_r,
        "direct": direct,
        "direct_unsplit": virial_d2zR(u0, cutoff),
        "relative_discrepancy": abs(fd - direct) / abs(direct),
    }
