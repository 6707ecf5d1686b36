"""Admissible region, mass-energy indicator D and membership in the scattering set.

The region is

    Omega = {(c, h) : 0 <= c < M(Q), h < m_c}

and ``D(c, h) = h + (h + c) / dist((c, h), complement)`` on Omega, ``+inf``
elsewhere.  ``m_c`` comes from an :class:`~cqnls.groundstate.McCurve`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .functionals import Norms
from .grid import Field
from .groundstate import McCurve

BOUNDARY_BAND = 1e-6
REFINE = 10


class CurveRangeError(ValueError):
    """A mass falls outside the tabulated part of the threshold curve."""


@dataclass(frozen=True)
class MeiValue:
    value: float
    distance: float
    admissible: bool


class Region:
    """Omega built from a threshold curve, with a polyline for distance queries.

    The polyline samples the monotone interpolant ten times finer than the
    table, and is continued by the curve's extrapolation models down toward
    ``c = 0`` and across to ``(M(Q), 0)``.
    """

    def __init__(self, curve: McCurve):
        self.curve = curve
        self.c_max = curve.c_max
        if len(curve.points) < 2:
            self.boundary_polyline = None
            return
        cs = curve.c
        fine = [np.linspace(a, b, REFINE + 1)[:-1] for a, b in zip(cs[:-1], cs[1:])]
        c_tab = np.concatenate(fine + [cs[-1:]])
        lo, hi = curve.c_range
        c_low = np.geomspace(lo * 1e-3, lo, 200)[:-1]
        c_high = np.linspace(hi, self.c_max, 201)[1:]
        c_all = np.concatenate([c_low, c_tab, c_high])
        h_all = curve(c_all, extrapolate=True)
        self.boundary_polyline = np.column_stack([c_all, h_all])
        self._table_slice = slice(c_low.size, c_low.size + c_tab.size)

    def _require_polyline(self):
        if self.boundary_polyline is None:
            raise ValueError("single-point curve: distance queries need at least two table rows")

    def m_at(self, c: float, extrapolate: bool = False) -> float:
        if not extrapolate and not self.curve.in_range(c):
            lo, hi = self.curve.c_range
            raise CurveRangeError(f"mass {c:.17g} outside the tabulated range [{lo:.6g}, {hi:.6g}]")
        if len(self.curve.points) < 2 and c != self.curve.points[0].c:
            raise ValueError("single-point curve cannot be interpolated")
        return float(self.curve(c, extrapolate=extrapolate))

    def contains(self, c: float, h: float) -> bool:
        if c < 0 or c >= self.c_max:
            return False
        return h < self.m_at(c, extrapolate=True)

    def graph_distance(self, c: float, h: float) -> float:
        self._require_polyline()
        P = self.boundary_polyline
        a, b = P[:-1], P[1:]
        d = b - a
        w = np.array([c, h]) - a
        t = np.clip(np.einsum("ij,ij->i", w, d) / np.einsum("ij,ij->i", d, d), 0.0, 1.0)
        proj = a + t[:, None] * d
        return float(np.min(np.hypot(proj[:, 0] - c, proj[:, 1] - h)))


def dist_to_complement(region: Region, c: float, h: float) -> float:
    """Euclidean distance from (c, h) to the complement of Omega (0 outside Omega)."""
    region._require_polyline()
    if not region.contains(c, h):
        return 0.0
    return min(region.c_max - c, region.graph_distance(c, h))


def mei_D(region: Region, c: Union[float, Field], h: Optional[float] = None) -> MeiValue:
    """``D(c, h)``; a :class:`Field` argument is first mapped to ``(M(u), H(u))``."""
    if isinstance(c, Field):
        n = Norms.of(c)
        c, h = math.sqrt(n.mass_sq), n.energy
    if c < 0:
        raise ValueError("mass must be nonnegative")
    dist = dist_to_complement(region, c, h)
    if dist <= 0:
        return MeiValue(math.inf, 0.0, False)
    return MeiValue(h + (h + c) / dist, dist, True)


@dataclass
class Classification:
    mass: float
    energy: float
    virial: float
    mQ_mass: float
    margins: dict
    status: str
    in_A: Optional[bool]
    blowup_criterion: bool
    D: float
    k_lower_bound: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), default=_json_float)


def _json_float(x):
    return float(x)


def in_set_A(region: Region, u: Field) -> Classification:
    """Membership in ``{M < M(Q), H < m_M, K > 0}`` with the three margins.

    A margin within ``BOUNDARY_BAND`` of zero makes the verdict indeterminate
    (``in_A`` is then ``None``).  ``blowup_criterion`` is the sign-reversed
    condition ``K < 0, H < m_M``.
    """
    n = Norms.of(u)
    mass, energy, virial = math.sqrt(n.mass_sq), n.energy, n.virial
    mass_margin = region.c_max - mass
    if mass_margin <= 0:
        return Classification(
            mass, energy, virial, float("nan"),
            {"mass": mass_margin, "energy": float("nan"), "virial": virial},
            "outside", False, False, math.inf, None,
        )
    m = region.m_at(mass)
    margins = {"mass": mass_margin, "energy": m - energy, "virial": virial}
    near = any(abs(v) <= BOUNDARY_BAND for v in margins.values())
    inside = all(v > 0 for v in margins.values())
    if near:
        status, verdict = "boundary/indeterminate", None
    else:
        status, verdict = ("inside" if inside else "outside"), inside
    below = margins["energy"] > BOUNDARY_BAND
    d = mei_D(region, mass, energy).value if len(region.curve.points) > 1 else float("nan")
    klb = k_lower_bound(region, mass, energy) if below else None
    return Classification(
        mass, energy, virial, m, margins, status, verdict,
        bool(below and virial < -BOUNDARY_BAND), d, klb,
    )


def k_lower_bound(region: Region, mass0: float, energy0: float) -> float:
    """``min(delta H0, ((2/delta)^{1/2} - 1)^{-1} (m_{M0} - H0))``, ``delta = 1 - (M0/M(Q))^2``.

    A lower bound for K along the flow of data in the scattering set.
    """
    if mass0 >= region.c_max:
        raise ValueError(f"mass {mass0} is at or above M(Q) = {region.c_max}")
    delta = 1.0 - (mass0 / region.c_max) ** 2
    m = region.m_at(mass0)
    return min(delta * energy0, (m - energy0) / (math.sqrt(2.0 / delta) - 1.0))
