"""Fermi operator, Fermi Hamiltonian function and Fermi sets of a state.

For ``psi = R exp(iS/hbar)`` the Fermi Hamiltonian is

    H_F(r, p) = |p - grad S(r)|^2 / 2m - Q(r),

whose zero set is the Fermi hypersurface; the Fermi set is ``H_F <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grid as _g
from . import interp
from .fields import ScalarField, VectorField, WaveField
from .states import Potential, StateSpec, exact_energy
from .symplectic import QuadraticForm
from .wavefield import (
    bohm_momentum_field,
    core_mask,
    gradient_field,
    node_mask,
    node_threshold,
    quantum_force,
    quantum_potential,
)


class MaskedPointError(ValueError):
    """Evaluation requested at a node (masked point)."""


class PreconditionError(ValueError):
    pass


class NoClosedFormError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FermiHamiltonian:
    gradS0: VectorField
    Q0: ScalarField
    wavefield: WaveField
    eps_node: float

    @property
    def grid(self) -> _g.Grid:
        return self.Q0.grid

    @property
    def params(self):
        return self.wavefield.params

    def fields_at(self, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``grad S`` and ``Q`` at arbitrary points ``r`` of shape ``(M, dim)``.

        Periodic grids interpolate the smooth ingredients ``psi``, ``grad psi``,
        ``R`` and ``lap R`` spectrally and recombine them pointwise; walled
        grids interpolate ``grad S`` and ``Q`` with cubic splines.
        """
        r = np.atleast_2d(np.asarray(r, float))
        grid = self.grid
        interp.check_inside(grid, r)
        hbar, m = self.params.hbar, self.params.mass
        if grid.periodic:
            psi = self.wavefield.psi
            R = np.abs(psi)
            stack = np.concatenate(
                [psi[None], _g.gradient(psi, grid), R[None], _g.laplacian(R, grid)[None]]
            )
            vals = interp.spectral_interpolate(stack, grid, r)
            d = grid.dim
            psi_r, dpsi_r = vals[:, 0], vals[:, 1 : 1 + d]
            R_r, lapR_r = vals[:, 1 + d].real, vals[:, 2 + d].real
            amp = np.abs(psi_r)
            if np.any(amp < self.eps_node):
                raise MaskedPointError("evaluation point lies in the node mask")
            gradS = hbar * np.imag(np.conj(psi_r)[:, None] * dpsi_r) / amp[:, None] ** 2
            Q = -(hbar**2) / (2 * m) * lapR_r / R_r
            return gradS, Q
        idx = np.rint(interp.fractional_index(grid, r)).astype(int)
        idx = np.clip(idx, 0, np.array(grid.shape)[:, None] - 1)
        if np.any(self.Q0.mask[tuple(idx)]):
            raise MaskedPointError("evaluation point lies in the node mask")
        stack = np.concatenate([self.gradS0.filled(), self.Q0.filled()[None]])
        vals = interp.spline_interpolate(stack, grid, r, order=3)
        return vals[:, : grid.dim], vals[:, grid.dim]


def build_fermi_hamiltonian(wf: WaveField, eps_node: float | None = None) -> FermiHamiltonian:
    eps = node_threshold(wf, eps_node)
    return FermiHamiltonian(bohm_momentum_field(wf, eps), quantum_potential(wf, eps), wf, eps)


def eval_fermi(fh: FermiHamiltonian, r, p) -> np.ndarray | float:
    """``H_F(r, p)``; accepts single points or batches of shape ``(M, dim)``."""
    single = np.ndim(r) == 1
    r = np.atleast_2d(np.asarray(r, float))
    p = np.atleast_2d(np.asarray(p, float))
    gradS, Q = fh.fields_at(r)
    H = np.sum((p - gradS) ** 2, axis=1) / (2 * fh.params.mass) - Q
    return float(H[0]) if single else H


def _regularized_gauge_field(wf: WaveField, delta: float) -> np.ndarray:
    num = wf.params.hbar * np.imag(np.conj(wf.psi) * _g.gradient(wf.psi, wf.grid))
    return num / (np.abs(wf.psi) ** 2 + delta**2)


def apply_fermi_operator(wf: WaveField, eps_node: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``(1/2m)(-i hbar grad - grad S)^2 - Q`` to ``psi``.

    The covariant derivative is applied twice as a first-order operator,
    ``u = (-i hbar grad - A) psi`` then ``(-i hbar div - A.) u``.  ``A`` is
    regularized far below the node threshold so that it stays bounded in the
    tails without affecting unmasked points.  Returns the result and the node mask.
    """
    grid, hbar, m = wf.grid, wf.params.hbar, wf.params.mass
    eps = node_threshold(wf, eps_node)
    A = _regularized_gauge_field(wf, 1e-3 * eps)
    dpsi = np.stack([_g.derivative(wf.psi, grid, k, keep_nyquist=True) for k in range(grid.dim)])
    u = -1j * hbar * dpsi - A * wf.psi
    kinetic = sum(
        -1j * hbar * _g.derivative(u[k], grid, k, keep_nyquist=True) - A[k] * u[k] for k in range(grid.dim)
    ) / (2 * m)
    q = quantum_potential(wf, eps)
    return kinetic - q.filled() * wf.psi, q.mask


def fermi_operator_residual(wf: WaveField, eps_node: float | None = None) -> float:
    """``||H_F psi|| / ||psi||`` over unmasked points."""
    out, mask = apply_fermi_operator(wf, eps_node)
    w = wf.grid.quadrature_weights() * ~mask
    return float(np.sqrt(np.sum(np.abs(out) ** 2 * w) / np.sum(np.abs(wf.psi) ** 2 * w)))


def _potential_field(V, grid: _g.Grid) -> ScalarField:
    return V(grid) if isinstance(V, Potential) else V


def _classical_force(V, grid: _g.Grid) -> VectorField:
    if isinstance(V, Potential):
        return V.force(grid)
    g = gradient_field(V)
    return VectorField(grid, -g.filled(), g.mask)


@dataclass(frozen=True, eq=False)
class EnergyDecomposition:
    kinetic: ScalarField
    quantum: ScalarField
    potential: ScalarField
    total: ScalarField


def energy_decomposition(wf: WaveField, V, eps_node: float | None = None) -> EnergyDecomposition:
    """Pointwise ``E = |grad S|^2/2m + Q + V``."""
    gradS = bohm_momentum_field(wf, eps_node)
    kin = ScalarField(wf.grid, np.sum(gradS.filled() ** 2, axis=0) / (2 * wf.params.mass), gradS.mask)
    Q = quantum_potential(wf, eps_node)
    Vf = _potential_field(V, wf.grid)
    return EnergyDecomposition(kin, Q, Vf, kin + Q + Vf)


def phase_gradient_norm(wf: WaveField, eps_node: float | None = None) -> float:
    """Density-weighted ``sqrt(int rho |grad S|^2)``; zero for states real up to a constant phase."""
    mask = node_mask(wf, eps_node)
    num = wf.params.hbar * np.imag(np.conj(wf.psi) * _g.gradient(wf.psi, wf.grid))
    rho = np.where(mask, 1.0, np.abs(wf.psi) ** 2)
    integrand = np.where(mask, 0.0, np.sum(num**2, axis=0) / rho)
    return float(np.sqrt(wf.grid.integrate(integrand) / wf.norm2()))


def _require_real(wf: WaveField, tol: float) -> None:
    g = phase_gradient_norm(wf)
    if g > tol:
        raise PreconditionError(f"state is not real up to a constant phase (|grad S| = {g:.3e})")


def default_region(wf: WaveField) -> np.ndarray:
    return core_mask(wf, margin=0 if wf.grid.periodic else 3)


def stationary_identity_check(wf: WaveField, V, E: float, region: np.ndarray | None = None, tol: float = 1e-8) -> float:
    """``max |V + Q - E|`` over the verification region of a real state."""
    _require_real(wf, tol)
    Q = quantum_potential(wf)
    Vf = _potential_field(V, wf.grid)
    region = default_region(wf) if region is None else region
    sel = region & ~Q.mask & ~Vf.mask
    return float(np.max(np.abs(Vf.values[sel] + Q.values[sel] - E)))


def force_balance_field(wf: WaveField, V, tol: float = 1e-8) -> VectorField:
    """``F_c + F_Q = -grad V - grad Q``; vanishes for real bound eigenstates."""
    _require_real(wf, tol)
    return _classical_force(V, wf.grid) + quantum_force(quantum_potential(wf))


@dataclass(frozen=True, eq=False)
class FermiSetQuadratic:
    form: QuadraticForm
    units: str = "hbar=1 units: A mixes energy/length^2 and energy/momentum^2; E energy"

    def to_dict(self) -> dict:
        return {"A": self.form.A.tolist(), "E": self.form.E, "n": self.form.n, "units": self.units}

    @classmethod
    def from_dict(cls, d: dict) -> "FermiSetQuadratic":
        return cls(QuadraticForm(np.asarray(d["A"], float), d["E"]), d.get("units", ""))


def fermi_set_quadratic(spec: StateSpec) -> FermiSetQuadratic:
    """Closed-form Fermi ellipsoid of an oscillator ground state."""
    if spec.kind == "coherent3d":
        n = 3
    elif spec.kind == "oscillator1d" and spec.n == 0:
        n = 1
    else:
        raise NoClosedFormError(f"no closed-form Fermi set for {spec.kind} (n={spec.n}); sample eval_fermi instead")
    m, w = spec.params.mass, spec.omega
    A = np.diag([m * w**2] * n + [1.0 / m] * n)
    units = f"m={m:g}, omega={w:g}, hbar={spec.params.hbar:g}"
    return FermiSetQuadratic(QuadraticForm(A, exact_energy(spec)), units)


def sample_fermi_surface(fh: FermiHamiltonian, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Random points on ``H_F = 0``, returned as rows ``(r..., p..., H_F(r, p))``.

    Positions are drawn among unmasked grid points with ``Q > 0`` and moved
    by a random sub-cell offset (offsets landing on ``Q <= 0`` are dropped, so
    fewer than ``n_samples`` rows may be returned); momenta are placed on the sphere
    ``|p - grad S| = sqrt(2 m Q)``.  ``H_F`` is then re-evaluated through
    ``eval_fermi``, so the last column measures interpolation consistency.
    """
    grid = fh.grid
    ok = ~fh.Q0.mask & (fh.Q0.filled(-1.0) > 0) & core_mask(fh.wavefield)
    if grid.periodic is False:
        ok &= grid.boundary_distance() > 0
    cand = np.argwhere(ok)
    if len(cand) == 0:
        return np.empty((0, 2 * grid.dim + 1))
    pick = cand[rng.integers(len(cand), size=n_samples)]
    r = np.asarray(grid.lower) + pick * grid.spacing
    r += rng.uniform(-0.25, 0.25, size=r.shape) * grid.spacing
    r = np.clip(r, grid.lower, np.asarray(grid.upper) - 1e-12)
    gradS, Q = fh.fields_at(r)
    keep = Q > 0
    r, gradS, Q = r[keep], gradS[keep], Q[keep]
    u = rng.normal(size=r.shape)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    p = gradS + np.sqrt(2 * fh.params.mass * Q)[:, None] * u
    H = eval_fermi(fh, r, p)
    return np.column_stack([r, p, H])


def fermi_volume_mc(fh: FermiHamiltonian, n_samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo phase-space volume of the Fermi set and its standard error.

    Positions are sampled uniformly among grid cells; the momentum section at
    each position is a ball of radius ``sqrt(2 m Q)`` (empty where ``Q <= 0``
    or masked), whose volume is added in closed form.
    """
    grid, d = fh.grid, fh.grid.dim
    Q = fh.Q0.filled(-1.0).ravel()
    w = (fh.grid.quadrature_weights() / fh.grid.dV).ravel()
    idx = rng.integers(Q.size, size=n_samples)
    radius2 = np.maximum(2 * fh.params.mass * Q[idx], 0.0)
    ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius2 ** (d / 2) * w[idx]
    box = grid.dV * Q.size
    return float(box * ball.mean()), float(box * ball.std(ddof=1) / math.sqrt(n_samples))
