"""Field containers: wavefunctions, polar (Madelung) fields, scalar/vector fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, PhysicsParams

DEFAULT_NODE_EPS = 1e-6


class DegenerateStateError(ValueError):
    """Raised for identically vanishing wavefunctions."""


class NormalizationError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WaveField:
    grid: Grid
    psi: np.ndarray
    params: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != self.grid.shape:
            raise ValueError(f"psi shape {psi.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(psi)):
            raise ValueError("wavefunction has non-finite samples")
        object.__setattr__(self, "psi", _frozen(psi))

    def norm2(self) -> float:
        return float(self.grid.integrate(np.abs(self.psi) ** 2))

    def normalize(self) -> "WaveField":
        n2 = self.norm2()
        if n2 == 0.0:
            raise DegenerateStateError("cannot normalize a zero wavefunction")
        return self.replace(self.psi / np.sqrt(n2))

    def replace(self, psi: np.ndarray) -> "WaveField":
        return WaveField(self.grid, psi, self.params)

    def check_normalized(self, tol: float = 1e-8) -> None:
        n2 = self.norm2()
        if abs(n2 - 1.0) > tol:
            raise NormalizationError(f"wavefunction norm^2 = {n2:.12g}, expected 1")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real field on a grid.  Masked points hold NaN and are flagged in ``mask``."""

    grid: Grid
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        mask = np.zeros(self.grid.shape, bool) if self.mask is None else np.asarray(self.mask, bool)
        values = np.where(mask, np.nan, values) if mask.any() else values
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))

    def __getitem__(self, idx):
        """Value at a grid index; ``np.ma.masked`` at masked points."""
        if self.mask[idx]:
            return np.ma.masked
        return self.values[idx]

    def masked(self) -> np.ma.MaskedArray:
        return np.ma.masked_array(self.values, self.mask)

    def filled(self, fill: float = 0.0) -> np.ndarray:
        return np.where(self.mask, fill, self.values)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.filled() + other.filled(), self.mask | other.mask)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.filled() - other.filled(), self.mask | other.mask)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Real vector field, components first: ``values.shape == (dim, *grid.shape)``."""

    grid: Grid
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.dim, *self.grid.shape):
            raise ValueError(f"vector field shape {values.shape} does not match grid")
        mask = np.zeros(self.grid.shape, bool) if self.mask is None else np.asarray(self.mask, bool)
        values = np.where(mask, np.nan, values) if mask.any() else values
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))

    def __getitem__(self, idx):
        idx = idx if isinstance(idx, tuple) else (idx,)
        if self.mask[idx]:
            return np.ma.masked
        return self.values[(slice(None), *idx)]

    def filled(self, fill: float = 0.0) -> np.ndarray:
        return np.where(self.mask, fill, self.values)

    def norm(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(np.sum(self.filled() ** 2, axis=0)), self.mask)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.filled() + other.filled(), self.mask | other.mask)


@dataclass(frozen=True, eq=False)
class PolarField:
    """Madelung form ``psi = R exp(iS/hbar)``.

    ``S`` is the principal-branch phase times hbar, so it is defined modulo
    ``2*pi*hbar`` and depends on the (global) gauge.
    """

    grid: Grid
    R: np.ndarray
    S: np.ndarray
    node_mask: np.ndarray
    params: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self):
        for name in ("R", "S", "node_mask"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def reconstruct(self) -> np.ndarray:
        return self.R * np.exp(1j * self.S / self.params.hbar)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Phase-space second moments ordered ``(x_1..x_n, p_1..p_n)``."""

    sigma: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError("covariance matrix must be 2n x 2n")
        if np.max(np.abs(s - s.T)) > 1e-12 * max(1.0, np.max(np.abs(s))):
            raise ValueError("covariance matrix is not symmetric")
        n = s.shape[0] // 2
        for block in (s[:n, :n], s[n:, n:]):
            if np.min(np.linalg.eigvalsh(block)) <= 0:
                raise ValueError("position and momentum blocks must be positive-definite")
        object.__setattr__(self, "sigma", _frozen(0.5 * (s + s.T)))
        if self.mean is not None:
            object.__setattr__(self, "mean", _frozen(np.asarray(self.mean, float)))

    @property
    def n(self) -> int:
        return self.sigma.shape[0] // 2
