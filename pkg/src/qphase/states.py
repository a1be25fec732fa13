"""Closed-form reference states, their energies and external potentials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate, special

from .fields import ScalarField, VectorField, WaveField
from .grid import Grid, PhysicsParams

KINDS = ("coherent3d", "oscillator1d", "well1d", "gaussian_packet", "plane_modulated")
EIGENSTATE_KINDS = ("coherent3d", "oscillator1d", "well1d")
TRUNCATION_TOL = 1e-10


class StateError(ValueError):
    pass


class NotAnEigenstateError(StateError):
    pass


class TruncationError(StateError):
    """The grid cuts off more than the allowed probability mass."""


@dataclass(frozen=True)
class StateSpec:
    """Named analytic state.

    ``sigma`` is the position standard deviation of ``|psi|^2`` for the
    Gaussian kinds; ``x0``/``p0`` are scalars or per-axis sequences.  For
    ``plane_modulated`` the momentum ``p0`` points along the first axis.
    """

    kind: str
    params: PhysicsParams = field(default_factory=PhysicsParams)
    omega: float = 1.0
    n: int = 0
    L: float = 1.0
    x0: Any = 0.0
    p0: Any = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StateError(f"unknown state kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "oscillator1d" and (int(self.n) != self.n or self.n < 0):
            raise StateError("oscillator quantum number must be an integer >= 0")
        if self.kind == "well1d" and (int(self.n) != self.n or self.n < 1):
            raise StateError("well quantum number must be an integer >= 1")
        if self.kind == "well1d" and not self.L > 0:
            raise StateError("well width L must be positive")
        if self.kind in ("gaussian_packet", "plane_modulated") and not self.sigma > 0:
            raise StateError("sigma must be positive")
        if self.kind in ("coherent3d", "oscillator1d") and not self.omega > 0:
            raise StateError("omega must be positive")

    @property
    def is_eigenstate(self) -> bool:
        return self.kind in EIGENSTATE_KINDS

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind, "mass": self.params.mass, "hbar": self.params.hbar}
        if self.kind in ("coherent3d", "oscillator1d"):
            d["omega"] = self.omega
        if self.kind in ("oscillator1d", "well1d"):
            d["n"] = int(self.n)
        if self.kind == "well1d":
            d["L"] = self.L
        if self.kind == "gaussian_packet":
            d["x0"] = np.atleast_1d(self.x0).tolist() if np.ndim(self.x0) else self.x0
        if self.kind in ("gaussian_packet", "plane_modulated"):
            d["p0"] = np.atleast_1d(self.p0).tolist() if np.ndim(self.p0) else self.p0
            d["sigma"] = self.sigma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpec":
        d = dict(d)
        params = PhysicsParams(d.pop("mass", 1.0), d.pop("hbar", 1.0))
        return cls(params=params, **d)


def default_grid(spec: StateSpec, dim: int | None = None, n: int | None = None) -> Grid:
    """Grid used by the verification suites for each kind."""
    if spec.kind == "coherent3d":
        return Grid.cube(n or 64, -6.0, 6.0, 3)
    if spec.kind == "oscillator1d":
        half = max(8.0, 2.0 * math.sqrt(2 * spec.n + 1)) * math.sqrt(spec.params.hbar / (spec.params.mass * spec.omega))
        return Grid.cube(n or 256, -half, half, 1)
    if spec.kind == "well1d":
        return Grid((n or 256,), (0.0,), (spec.L,), periodic=False)
    d = dim or 1
    centre = np.broadcast_to(np.asarray(spec.x0, float), (d,)) if spec.kind == "gaussian_packet" else np.zeros(d)
    half = 10.0 * spec.sigma
    return Grid((n or (128 if d == 1 else 48),) * d, tuple(centre - half), tuple(centre + half))


def _axis_vector(value, dim: int) -> np.ndarray:
    v = np.asarray(value, float)
    if v.ndim == 0:
        return np.full(dim, float(v))
    if v.shape != (dim,):
        raise StateError(f"expected a scalar or {dim} components, got {v.shape}")
    return v


def _gaussian_outside_mass(centre: np.ndarray, std: np.ndarray, grid: Grid) -> float:
    inside = 1.0
    for c, s, lo, hi in zip(centre, std, grid.lower, grid.upper):
        inside *= 0.5 * (special.erf((hi - c) / (math.sqrt(2) * s)) - special.erf((lo - c) / (math.sqrt(2) * s)))
    return 1.0 - inside


def _hermite_function(n: int, xi: np.ndarray) -> np.ndarray:
    """Unnormalized ``H_n(xi) exp(-xi^2/2)`` by the stable three-term recurrence."""
    h_prev = np.zeros_like(xi)
    h = np.exp(-(xi**2) / 2)
    for k in range(n):
        h_prev, h = h, math.sqrt(2.0 / (k + 1)) * xi * h - math.sqrt(k / (k + 1)) * h_prev
    return h


def _closed_form(spec: StateSpec, grid: Grid) -> np.ndarray:
    m, hbar = spec.params.mass, spec.params.hbar
    X = grid.mesh()
    if spec.kind == "coherent3d":
        if grid.dim != 3:
            raise StateError("coherent3d requires a 3D grid")
        return np.exp(-m * spec.omega * grid.radius_squared() / (2 * hbar)).astype(complex)
    if spec.kind == "oscillator1d":
        if grid.dim != 1:
            raise StateError("oscillator1d requires a 1D grid")
        xi = X[0] * math.sqrt(m * spec.omega / hbar)
        return _hermite_function(int(spec.n), xi).astype(complex)
    if spec.kind == "well1d":
        if grid.dim != 1 or grid.periodic or grid.lower[0] != 0.0 or abs(grid.upper[0] - spec.L) > 1e-14 * spec.L:
            raise StateError("well1d requires a non-periodic 1D grid spanning exactly (0, L)")
        psi = np.sin(spec.n * math.pi * X[0] / spec.L).astype(complex)
        psi[0] = psi[-1] = 0.0
        return psi
    x0 = _axis_vector(spec.x0, grid.dim) if spec.kind == "gaussian_packet" else np.zeros(grid.dim)
    if spec.kind == "gaussian_packet":
        p0 = _axis_vector(spec.p0, grid.dim)
    else:
        p0 = np.zeros(grid.dim)
        p0[0] = float(spec.p0)
    arg = sum(-((x - c) ** 2) / (4 * spec.sigma**2) + 1j * p * x / hbar for x, c, p in zip(X, x0, p0))
    return np.exp(arg)


def truncated_mass(spec: StateSpec, grid: Grid) -> float:
    """Probability mass of the exact state lying outside the grid box."""
    m, hbar = spec.params.mass, spec.params.hbar
    if spec.kind == "well1d":
        return 0.0
    if spec.kind == "coherent3d":
        std = np.full(3, math.sqrt(hbar / (2 * m * spec.omega)))
        return _gaussian_outside_mass(np.zeros(3), std, grid)
    if spec.kind == "oscillator1d":
        scale = math.sqrt(hbar / (m * spec.omega))
        norm = math.sqrt(math.pi) * scale

        def dens(x):
            return _hermite_function(int(spec.n), np.asarray(x / scale)) ** 2 / norm

        lo, hi = grid.lower[0], grid.upper[0]
        out = integrate.quad(dens, -np.inf, lo, epsabs=1e-16)[0] + integrate.quad(dens, hi, np.inf, epsabs=1e-16)[0]
        return float(out)
    x0 = _axis_vector(spec.x0, grid.dim) if spec.kind == "gaussian_packet" else np.zeros(grid.dim)
    return _gaussian_outside_mass(x0, np.full(grid.dim, spec.sigma), grid)


def realize(spec: StateSpec, grid: Grid) -> WaveField:
    """Sample the closed form on ``grid`` and normalize by quadrature."""
    lost = truncated_mass(spec, grid)
    if lost > TRUNCATION_TOL:
        raise TruncationError(f"grid truncates {lost:.3e} of the probability mass (limit {TRUNCATION_TOL:g})")
    return WaveField(grid, _closed_form(spec, grid), spec.params).normalize()


def exact_energy(spec: StateSpec) -> float:
    m, hbar, w = spec.params.mass, spec.params.hbar, spec.omega
    if spec.kind == "coherent3d":
        return 1.5 * w * hbar
    if spec.kind == "oscillator1d":
        return (spec.n + 0.5) * w * hbar
    if spec.kind == "well1d":
        return hbar**2 * spec.n**2 * math.pi**2 / (2 * m * spec.L**2)
    raise NotAnEigenstateError(f"{spec.kind} is not an energy eigenstate")


@dataclass(frozen=True)
class Potential:
    """External potential generator; call it on a grid to get a field.

    ``kind`` is ``harmonic`` (``m omega^2 |r|^2 / 2``), ``free`` or ``well``
    (zero inside, walls imposed by the grid boundary condition).
    """

    kind: str
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.kind not in ("harmonic", "free", "well"):
            raise ValueError(f"unknown potential kind {self.kind!r}")

    def __call__(self, grid: Grid) -> ScalarField:
        if self.kind == "harmonic":
            return ScalarField(grid, 0.5 * self.mass * self.omega**2 * grid.radius_squared())
        return ScalarField(grid, np.zeros(grid.shape))

    def at(self, r) -> float:
        r = np.asarray(r, float)
        if self.kind == "harmonic":
            return 0.5 * self.mass * self.omega**2 * float(np.dot(r, r))
        return 0.0

    def force(self, grid: Grid) -> VectorField:
        """Classical force ``-grad V`` in closed form."""
        if self.kind == "harmonic":
            return VectorField(grid, -self.mass * self.omega**2 * np.stack(grid.mesh()))
        return VectorField(grid, np.zeros((grid.dim, *grid.shape)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "mass": self.mass, "omega": self.omega}


def exact_potential(spec: StateSpec) -> Potential:
    if spec.kind in ("coherent3d", "oscillator1d"):
        return Potential("harmonic", spec.params.mass, spec.omega)
    if spec.kind == "well1d":
        return Potential("well", spec.params.mass)
    raise NotAnEigenstateError(f"{spec.kind} has no associated binding potential")
