"""Rectangular grids, physical constants and differentiation on grids.

Periodic grids use Fourier (spectral) differentiation.  Non-periodic grids
include both end points and use fourth-order finite differences, with
one-sided fourth-order stencils at the two outermost points of each axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sfft

MAX_POINTS_3D = 128


class GridError(ValueError):
    """Invalid grid description."""


@dataclass(frozen=True)
class PhysicsParams:
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.hbar > 0):
            raise ValueError(f"mass and hbar must be positive, got m={self.mass}, hbar={self.hbar}")

    @property
    def h(self) -> float:
        """Planck's constant h = 2*pi*hbar."""
        return 2.0 * np.pi * self.hbar


def _as_tuple(value, dim, cast):
    if np.isscalar(value):
        return (cast(value),) * dim
    return tuple(cast(v) for v in value)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid in 1, 2 or 3 dimensions.

    Periodic axes sample ``lower + j*(upper-lower)/n`` for ``j < n`` (the
    upper end is the image of the lower one).  Non-periodic axes sample both
    end points, ``lower + j*(upper-lower)/(n-1)``.
    """

    n_points: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: bool = True

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n_points))
        dim = len(n)
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "lower", _as_tuple(self.lower, dim, float))
        object.__setattr__(self, "upper", _as_tuple(self.upper, dim, float))
        object.__setattr__(self, "periodic", bool(self.periodic))
        if dim not in (1, 2, 3):
            raise GridError(f"grid dimension must be 1, 2 or 3, got {dim}")
        if len(self.lower) != dim or len(self.upper) != dim:
            raise GridError("lower/upper must match the number of axes")
        for k, nk in enumerate(n):
            if nk < 8 or nk % 2:
                raise GridError(f"axis {k}: n_points must be even and >= 8, got {nk}")
            if not self.upper[k] > self.lower[k]:
                raise GridError(f"axis {k}: upper must exceed lower")
        if dim == 3 and max(n) > MAX_POINTS_3D:
            raise GridError(f"3D grids are capped at {MAX_POINTS_3D} points per axis")

    @classmethod
    def cube(cls, n: int, lower: float, upper: float, dim: int, periodic: bool = True) -> "Grid":
        return cls((n,) * dim, (lower,) * dim, (upper,) * dim, periodic)

    @property
    def dim(self) -> int:
        return len(self.n_points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_points

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def spacing(self) -> np.ndarray:
        n = np.asarray(self.n_points)
        return self.lengths / (n if self.periodic else n - 1)

    @property
    def dV(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def axes(self) -> list[np.ndarray]:
        return [lo + h * np.arange(n) for lo, h, n in zip(self.lower, self.spacing, self.n_points)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes, indexing="ij")

    def radius_squared(self) -> np.ndarray:
        return sum(x**2 for x in self.mesh())

    def points(self) -> np.ndarray:
        """Coordinates of every grid point, shape ``(size, dim)`` in C order."""
        return np.stack([x.ravel() for x in self.mesh()], axis=1)

    def wavenumbers(self) -> list[np.ndarray]:
        return [2 * np.pi * sfft.fftfreq(n, d=h) for n, h in zip(self.n_points, self.spacing)]

    def quadrature_weights(self) -> np.ndarray:
        """Rectangle rule on periodic axes, trapezoid rule otherwise."""
        w = np.ones(self.shape)
        if not self.periodic:
            for axis in range(self.dim):
                idx = [slice(None)] * self.dim
                for end in (0, -1):
                    idx[axis] = end
                    w[tuple(idx)] *= 0.5
        return w * self.dV

    def integrate(self, f: np.ndarray) -> float | complex:
        return np.sum(f * self.quadrature_weights())

    def boundary_distance(self) -> np.ndarray:
        """Distance, in cells, from each point to the nearest non-periodic wall."""
        if self.periodic:
            return np.full(self.shape, np.iinfo(np.int64).max)
        dist = [np.minimum(np.arange(n), np.arange(n)[::-1]) for n in self.n_points]
        return np.minimum.reduce(np.meshgrid(*dist, indexing="ij"))

    def contains(self, r: Sequence[float]) -> bool:
        r = np.asarray(r, dtype=float)
        if self.periodic:
            return bool(np.all(r >= self.lower) and np.all(r < self.upper))
        return bool(np.all(r >= self.lower) and np.all(r <= self.upper))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n_points": list(self.n_points),
            "lower": list(self.lower),
            "upper": list(self.upper),
            "periodic": self.periodic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(tuple(d["n_points"]), tuple(d["lower"]), tuple(d["upper"]), d.get("periodic", True))


# --- differentiation -------------------------------------------------------

# fourth-order stencils (offsets relative to the evaluation point)
_D1_CENTRAL = np.array([1, -8, 0, 8, -1]) / 12.0
_D2_CENTRAL = np.array([-1, 16, -30, 16, -1]) / 12.0
_D1_EDGE = (
    np.array([-25, 48, -36, 16, -3, 0]) / 12.0,
    np.array([-3, -10, 18, -6, 1, 0]) / 12.0,
)
_D2_EDGE = (
    np.array([45, -154, 214, -156, 61, -10]) / 12.0,
    np.array([10, -15, -4, 14, -6, 1]) / 12.0,
)


def _fd_axis(f: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    f = np.moveaxis(f, axis, 0)
    n = f.shape[0]
    out = np.empty_like(f)
    central = _D1_CENTRAL if order == 1 else _D2_CENTRAL
    out[2:-2] = sum(c * f[j : n - 4 + j] for j, c in enumerate(central) if c)
    edge = _D1_EDGE if order == 1 else _D2_EDGE
    head = f[:6]
    tail = f[::-1][:6]
    sign = -1.0 if order == 1 else 1.0
    for i, w in enumerate(edge):
        out[i] = np.tensordot(w, head, axes=(0, 0))
        out[n - 1 - i] = sign * np.tensordot(w, tail, axes=(0, 0))
    return np.moveaxis(out / h**order, 0, axis)


def _spectral_axis(f: np.ndarray, k: np.ndarray, axis: int, order: int, keep_nyquist: bool = False) -> np.ndarray:
    shape = [1] * f.ndim
    shape[axis] = -1
    mult = (1j * k) ** order
    if order % 2 and not keep_nyquist:
        # odd derivatives of the Nyquist mode are not representable on the grid
        n = len(k)
        mult = mult.copy()
        mult[n // 2] = 0.0
    out = sfft.ifft(sfft.fft(f, axis=axis) * mult.reshape(shape), axis=axis)
    return out.real if np.isrealobj(f) else out


def derivative(f: np.ndarray, grid: Grid, axis: int, order: int = 1, keep_nyquist: bool = False) -> np.ndarray:
    """First or second derivative of ``f`` along one axis.

    ``keep_nyquist`` retains the Nyquist mode in spectral first derivatives so
    that two successive first derivatives compose to the spectral second
    derivative (only sensible for complex data).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if grid.periodic:
        return _spectral_axis(f, grid.wavenumbers()[axis], axis, order, keep_nyquist)
    return _fd_axis(f, grid.spacing[axis], axis, order)


def gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Gradient with the component index first, shape ``(dim, *grid.shape)``."""
    return np.stack([derivative(f, grid, k, 1) for k in range(grid.dim)])


def divergence(v: np.ndarray, grid: Grid) -> np.ndarray:
    return sum(derivative(v[k], grid, k, 1) for k in range(grid.dim))


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    if grid.periodic:
        k2 = sum(k**2 for k in np.meshgrid(*grid.wavenumbers(), indexing="ij", sparse=True))
        out = sfft.ifftn(-k2 * sfft.fftn(f))
        return out.real if np.isrealobj(f) else out
    return sum(derivative(f, grid, k, 2) for k in range(grid.dim))


def lowpass(f: np.ndarray, grid: Grid, strength: float = 36.0, order: int = 36) -> np.ndarray:
    """Exponential spectral filter ``exp(-strength (|k|/k_max)^order)`` per axis (periodic grids).

    With the default parameters the factor is 1 - 5e-10 at half the Nyquist
    wavenumber, 0.99 at 0.8 and 2e-16 at the Nyquist wavenumber itself.
    """
    if not grid.periodic:
        raise GridError("spectral low-pass needs a periodic grid")
    F = sfft.fftn(f)
    for axis, k in enumerate(grid.wavenumbers()):
        shape = [1] * grid.dim
        shape[axis] = -1
        F *= np.exp(-strength * (np.abs(k) / np.abs(k).max()) ** order).reshape(shape)
    out = sfft.ifftn(F)
    return out.real if np.isrealobj(f) else out


def fd_gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Fourth-order finite-difference gradient regardless of periodicity.

    Used for fields that are smooth but not periodic on the box (external
    potentials, the quantum potential itself).
    """
    return np.stack([_fd_axis(f, grid.spacing[k], k, 1) for k in range(grid.dim)])
