"""Periodic square grids, complex fields and spectral quadrature.

The plane is truncated to the box [-L/2, L/2)^2 sampled at ``n`` points per
axis.  Transforms use the numpy convention (forward unnormalized, inverse
carries 1/N^2), so Parseval on the grid reads

    h^2 * sum |u_j|^2 = (h^2 / N^2) * sum |u_hat_k|^2,    h = L / n.

All quadrature weights are applied explicitly in :func:`integrate` and
:func:`grad_norm_sq`.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

Generator = Callable[[np.ndarray, np.ndarray], np.ndarray]

NYQUIST_BAND = 0.75
NYQUIST_WARN_FRACTION = 1e-6


class ResolutionWarning(UserWarning):
    """A field carries non-negligible spectral energy near the grid cutoff."""


@dataclass(frozen=True)
class GridSpec:
    n_points: int
    box_length: float

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 8, got {n!r}")
        if not np.isfinite(self.box_length) or self.box_length <= 0:
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")
        object.__setattr__(self, "n_points", int(n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def spacing(self) -> float:
        return self.box_length / self.n_points

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def x(self) -> np.ndarray:
        """Node coordinates along one axis, starting at -L/2."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers 2*pi*m/L in FFT order (0, 1, ..., -N/2, ..., -1)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.x
        return np.meshgrid(x, x, indexing="ij")

    def radius(self) -> np.ndarray:
        X, Y = self.mesh()
        return np.hypot(X, Y)

    def k_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.wavenumbers
        return np.meshgrid(k, k, indexing="ij")

    def k_squared(self) -> np.ndarray:
        KX, KY = self.k_mesh()
        return KX**2 + KY**2

    def to_dict(self) -> dict:
        return {"n_points": self.n_points, "box_length": self.box_length}


def make_grid(n_points: int, box_length: float) -> GridSpec:
    return GridSpec(n_points, box_length)


@dataclass(frozen=True)
class Field:
    """Complex samples on a :class:`GridSpec`, indexed ``values[i, j] = u(x_i, y_j)``.

    ``generator``, when present, is a closed-form profile ``f(X, Y)`` that
    reproduces ``values`` on the grid; :func:`cqnls.functionals.scale` uses it
    to rescale analytically instead of interpolating.
    """

    spec: GridSpec
    values: np.ndarray
    generator: Optional[Generator] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = self.spec.n_points
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.size != n * n:
            raise ValueError(f"expected {n * n} samples, got {vals.size}")
        vals = vals.reshape(n, n).copy()
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, spec: GridSpec, f: Generator) -> "Field":
        X, Y = spec.mesh()
        return cls(spec, np.broadcast_to(f(X, Y), X.shape), generator=f)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "Field":
        return cls(spec, np.zeros((spec.n_points, spec.n_points)))

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.spec, values)

    def __mul__(self, a) -> "Field":
        a = complex(a)
        gen = self.generator
        new_gen = None if gen is None else (lambda X, Y: a * gen(X, Y))
        return Field(self.spec, a * self.values, generator=new_gen)

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        if other.spec != self.spec:
            raise ValueError("fields live on different grids")
        return Field(self.spec, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return self + (-1.0) * other

    @property
    def flat(self) -> np.ndarray:
        """Row-major samples, length n_points**2."""
        return self.values.ravel()

    def abs2(self) -> np.ndarray:
        return self.values.real**2 + self.values.imag**2


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f)


def integrate(f, spec: Optional[GridSpec] = None) -> float:
    """Riemann sum h^2 * sum(f) of a real field (or array on ``spec``)."""
    if isinstance(f, Field):
        spec = f.spec
        vals = f.values.real
    else:
        if spec is None:
            raise TypeError("a GridSpec is required for bare arrays")
        vals = np.asarray(f)
    return float(spec.cell_area * np.sum(vals))


def lp_norm_p(u: Field, p: int) -> float:
    """Return ``||u||_p^p`` (the p-th power, not the root) for p in {2, 4, 6}."""
    if p not in (2, 4, 6):
        raise ValueError(f"unsupported exponent p={p!r}; expected 2, 4 or 6")
    return integrate(u.abs2() ** (p // 2), u.spec)


def spectral_mass(u: Field) -> float:
    """``||u||_2^2`` evaluated on the Fourier side."""
    n = u.spec.n_points
    uh = np.fft.fft2(u.values)
    return float(u.spec.cell_area * np.sum(np.abs(uh) ** 2) / n**2)


def nyquist_fraction(uh: np.ndarray, spec: GridSpec) -> float:
    """Share of spectral energy in modes with max(|kx|, |ky|) above 3/4 of Nyquist."""
    n = spec.n_points
    m = np.abs(np.fft.fftfreq(n) * n)
    band = np.maximum.outer(m, m) > NYQUIST_BAND * (n // 2)
    e = np.abs(uh) ** 2
    total = float(np.sum(e))
    return float(np.sum(e[band]) / total) if total > 0 else 0.0


def check_resolution(uh: np.ndarray, spec: GridSpec, what: str = "field") -> float:
    frac = nyquist_fraction(uh, spec)
    if frac > NYQUIST_WARN_FRACTION:
        warnings.warn(
            f"{what}: {frac:.2e} of spectral energy lies in the Nyquist band",
            ResolutionWarning,
            stacklevel=3,
        )
    return frac


def grad_norm_sq(u: Field, warn: bool = True) -> float:
    """``||grad u||_2^2`` as (h^2/N^2) * sum |k|^2 |u_hat|^2."""
    spec = u.spec
    n = spec.n_points
    uh = np.fft.fft2(u.values)
    if warn:
        check_resolution(uh, spec)
    return float(spec.cell_area * np.sum(spec.k_squared() * np.abs(uh) ** 2) / n**2)


def laplacian(u: Field) -> np.ndarray:
    uh = np.fft.fft2(u.values)
    return np.fft.ifft2(-u.spec.k_squared() * uh)


def gradient(u: Field) -> tuple[np.ndarray, np.ndarray]:
    uh = np.fft.fft2(u.values)
    KX, KY = u.spec.k_mesh()
    return np.fft.ifft2(1j * KX * uh), np.fft.ifft2(1j * KY * uh)


def _interp_matrix(src: GridSpec, points: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant of ``src`` at ``points``.

    Points outside the source box map to zero rather than wrapping around.
    The Nyquist mode is split symmetrically so real data stays real.
    """
    n = src.n_points
    k = src.wavenumbers.copy()
    E = np.exp(1j * np.outer(points - src.x[0], k)) / n
    nyq = n // 2
    E[:, nyq] = np.cos(k[nyq] * (points - src.x[0])) / n
    outside = (points < src.x[0]) | (points >= src.x[0] + src.box_length)
    E[outside] = 0.0
    return E


def resample(u: Field, spec: GridSpec, stretch: float = 1.0) -> Field:
    """Evaluate the spectral interpolant of ``u`` at ``stretch * x`` on ``spec``.

    Points that fall outside the source box get zero, so the source must have
    decayed at its boundary.  Separable: O(n^3) instead of O(n^4).
    """
    uh = np.fft.fft2(u.values)
    E = _interp_matrix(u.spec, stretch * spec.x)
    return Field(spec, E @ uh @ E.T)


# ---------------------------------------------------------------- file format


def _fmt(v: float) -> str:
    return repr(float(v))


def save_field(u: Field, path, metadata: Optional[dict] = None) -> None:
    """Write ``u`` as a JSON header line followed by ``re,im`` CSV rows.

    ``.json`` paths get the pure-JSON variant instead.
    """
    path = Path(path)
    header = dict(u.spec.to_dict())
    if metadata:
        header["metadata"] = metadata
    flat = u.flat
    if path.suffix == ".json":
        doc = dict(header, re=[float(v) for v in flat.real], im=[float(v) for v in flat.imag])
        path.write_text(json.dumps(doc))
        return
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        fh.write("re,im\n")
        for z in flat:
            fh.write(f"{_fmt(z.real)},{_fmt(z.imag)}\n")


def load_field(path) -> tuple[Field, dict]:
    """Inverse of :func:`save_field`; returns the field and header metadata."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        doc = json.loads(text)
        spec = GridSpec(doc["n_points"], doc["box_length"])
        vals = np.asarray(doc["re"]) + 1j * np.asarray(doc["im"])
        return Field(spec, vals), doc.get("metadata", {})
    first, rest = text.split("\n", 1)
    header = json.loads(first)
    spec = GridSpec(header["n_points"], header["box_length"])
    body = np.loadtxt(rest.splitlines()[1:], delimiter=",", ndmin=2)
    vals = body[:, 0] + 1j * body[:, 1]
    return Field(spec, vals), header.get("metadata", {})
