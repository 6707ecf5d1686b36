"""Mass, energy, virial and the mass-preserving dilation T_lambda.

    M(u) = ||u||_2
    H(u) = 1/2 ||grad u||^2 - 1/4 ||u||_4^4 - 1/6 ||u||_6^6
    K(u) = ||grad u||^2 - 1/2 ||u||_4^4 - 2/3 ||u||_6^6
    I(u) = H(u) - K(u)/2 = 1/6 ||u||_6^6
    S_w(u) = w/2 M(u)^2 + H(u)

Under ``T_lam u(x) = lam * u(lam x)`` the L^2 norm is fixed, the gradient term
and ``||u||_4^4`` pick up ``lam^2`` and ``||u||_6^6`` picks up ``lam^4``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .grid import Field, check_resolution, grad_norm_sq, gradient, lp_norm_p, resample


@dataclass(frozen=True)
class Norms:
    """The four integrals everything else is built from."""

    mass_sq: float
    grad_sq: float
    quartic: float
    sextic: float

    @classmethod
    def of(cls, u: Field) -> "Norms":
        return cls(lp_norm_p(u, 2), grad_norm_sq(u), lp_norm_p(u, 4), lp_norm_p(u, 6))

    def scaled(self, lam: float) -> "Norms":
        return Norms(self.mass_sq, lam**2 * self.grad_sq, lam**2 * self.quartic, lam**4 * self.sextic)

    @property
    def energy(self) -> float:
        return 0.5 * self.grad_sq - 0.25 * self.quartic - self.sextic / 6.0

    @property
    def virial(self) -> float:
        return self.grad_sq - 0.5 * self.quartic - 2.0 * self.sextic / 3.0


@dataclass(frozen=True)
class FunctionalReport:
    mass: float
    energy: float
    virial: float
    residual: float
    lyapunov: Optional[float] = None

    @property
    def mass_sq(self) -> float:
        return self.mass**2

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def evaluate(u: Field, omega: Optional[float] = None) -> FunctionalReport:
    n = Norms.of(u)
    lyap = None if omega is None else 0.5 * omega * n.mass_sq + n.energy
    return FunctionalReport(
        mass=math.sqrt(n.mass_sq),
        energy=n.energy,
        virial=n.virial,
        residual=n.sextic / 6.0,
        lyapunov=lyap,
    )


def energy_gradient(u: Field) -> np.ndarray:
    """L^2 gradient of H: -(Lap u + |u|^2 u + |u|^4 u).

    Exact for the discrete energy, i.e. ``dH(u)[v] = Re <grad, v>`` with the
    grid inner product ``<f, g> = h^2 sum conj(f) g``.
    """
    uh = np.fft.fft2(u.values)
    lap = np.fft.ifft2(-u.spec.k_squared() * uh)
    a2 = u.abs2()
    return -(lap + a2 * u.values + a2**2 * u.values)


def scale(u: Field, lam: float) -> Field:
    """``T_lam u(x) = lam * u(lam x)`` on the same grid."""
    if not lam > 0:
        raise ValueError(f"scale factor must be positive, got {lam!r}")
    if lam == 1.0:
        return u
    if u.generator is not None:
        gen = u.generator
        return Field.from_function(u.spec, lambda X, Y: lam * gen(lam * X, lam * Y))
    out = resample(u, u.spec, stretch=lam)
    if lam > 1.0:
        check_resolution(np.fft.fft2(out.values), out.spec, "scale()")
    else:
        edge = np.max(np.abs(u.values)) * 1e-6
        X, Y = u.spec.mesh()
        half = 0.5 * u.spec.box_length * lam
        lost = np.abs(u.values[(np.abs(X) > half) | (np.abs(Y) > half)])
        if lost.size and np.max(lost) > edge:
            warnings.warn("scale(): part of the profile is stretched past the box", stacklevel=2)
    return Field(u.spec, lam * out.values)


def lambda_star_from_norms(n: Norms) -> float:
    if n.sextic <= 0:
        raise ValueError("lambda_star undefined for the zero field")
    lead = 2.0 * n.grad_sq - n.quartic
    if lead <= 0:
        raise ValueError(
            "2||grad u||^2 - ||u||_4^4 <= 0: the field is at or beyond the critical mass"
        )
    return math.sqrt(3.0 * lead / (4.0 * n.sextic))


def lambda_star(u: Field) -> float:
    """Unique lam > 0 with K(T_lam u) = 0 (K > 0 below it, K < 0 above)."""
    return lambda_star_from_norms(Norms.of(u))


def gn_quotient_quartic(u: Field) -> float:
    """||grad u||^2 ||u||_2^2 / ||u||_4^4; its infimum is C_GN = M(Q)^2 / 2."""
    q4 = lp_norm_p(u, 4)
    if q4 <= 0:
        raise ValueError("quotient undefined for the zero field")
    return grad_norm_sq(u) * lp_norm_p(u, 2) / q4


def gn_quotient_sextic(u: Field) -> float:
    """||grad u||^4 ||u||_2^2 / ||u||_6^6."""
    q6 = lp_norm_p(u, 6)
    if q6 <= 0:
        raise ValueError("quotient undefined for the zero field")
    return grad_norm_sq(u) ** 2 * lp_norm_p(u, 2) / q6


def momentum(u: Field) -> np.ndarray:
    """``Im int conj(u) grad u`` as a 2-vector."""
    ux, uy = gradient(u)
    conj = np.conj(u.values)
    h2 = u.spec.cell_area
    return np.array([h2 * np.sum(conj * ux).imag, h2 * np.sum(conj * uy).imag])
