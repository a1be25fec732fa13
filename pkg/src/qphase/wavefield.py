"""Pointwise Bohm observables of a gridded wavefunction.

All phase gradients are computed as ``hbar*Im(conj(psi)*grad psi)/|psi|^2``
so the branch cut of ``arg(psi)`` never enters a derivative.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from . import grid as _g
from .fields import (
    DEFAULT_NODE_EPS,
    CovarianceMatrix,
    DegenerateStateError,
    PolarField,
    ScalarField,
    VectorField,
    WaveField,
)


class UnderResolvedWarning(RuntimeWarning):
    """The amplitude carries significant energy near the grid's Nyquist limit."""


def node_threshold(wf: WaveField, eps_node: float | None = None) -> float:
    amp = np.abs(wf.psi)
    peak = amp.max()
    if peak == 0.0:
        raise DegenerateStateError("wavefunction vanishes identically")
    return DEFAULT_NODE_EPS * peak if eps_node is None else float(eps_node)


def node_mask(wf: WaveField, eps_node: float | None = None) -> np.ndarray:
    return np.abs(wf.psi) < node_threshold(wf, eps_node)


def polar_decompose(wf: WaveField, eps_node: float | None = None) -> PolarField:
    """Split ``psi`` into amplitude ``R`` and action ``S`` (principal branch)."""
    eps = node_threshold(wf, eps_node)
    if eps <= 0:
        raise ValueError("eps_node must be positive")
    R = np.abs(wf.psi)
    S = wf.params.hbar * np.angle(wf.psi)
    return PolarField(wf.grid, R, S, R < eps, wf.params)


def density(wf: WaveField) -> ScalarField:
    return ScalarField(wf.grid, np.abs(wf.psi) ** 2)


def _im_psi_grad_psi(wf: WaveField) -> np.ndarray:
    dpsi = _g.gradient(wf.psi, wf.grid)
    return np.imag(np.conj(wf.psi) * dpsi)


def bohm_momentum_field(wf: WaveField, eps_node: float | None = None) -> VectorField:
    """Bohm momentum ``grad S``; masked (NaN) at nodes."""
    mask = node_mask(wf, eps_node)
    rho = np.where(mask, 1.0, np.abs(wf.psi) ** 2)
    return VectorField(wf.grid, wf.params.hbar * _im_psi_grad_psi(wf) / rho, mask)


def probability_current(wf: WaveField) -> VectorField:
    """``j = rho grad S / m``, evaluated as ``hbar Im(psi* grad psi)/m``.

    This form is regular everywhere and tends to zero at nodes with rho.
    """
    return VectorField(wf.grid, wf.params.hbar / wf.params.mass * _im_psi_grad_psi(wf))


def current_divergence(wf: WaveField) -> np.ndarray:
    """``div j`` by differentiating the current field."""
    return _g.divergence(probability_current(wf).values, wf.grid)


def current_divergence_expanded(wf: WaveField) -> np.ndarray:
    """``div(rho grad S/m)`` expanded by the product rule into ``hbar Im(psi* lap psi)/m``."""
    lap = _g.laplacian(wf.psi, wf.grid)
    return wf.params.hbar / wf.params.mass * np.imag(np.conj(wf.psi) * lap)


def _check_resolution(R: np.ndarray, grid: _g.Grid, tol: float = 1e-6) -> None:
    if not grid.periodic:
        return
    spec = np.abs(sfft.fftn(R)) ** 2
    total = spec.sum()
    high = np.zeros(grid.shape, bool)
    for axis, n in enumerate(grid.n_points):
        k = np.abs(sfft.fftfreq(n) * n)
        shape = [1] * grid.dim
        shape[axis] = n
        high |= (k > n / 3).reshape(shape)
    frac = spec[high].sum() / total
    if frac > tol:
        warnings.warn(
            f"amplitude has {frac:.2e} of its spectral energy in the top third of wavenumbers;"
            " quantum potential will be inaccurate",
            UnderResolvedWarning,
            stacklevel=3,
        )


def quantum_potential(wf: WaveField, eps_node: float | None = None) -> ScalarField:
    """``Q = -(hbar^2/2m) lap(R)/R`` off the node mask."""
    R = np.abs(wf.psi)
    mask = R < node_threshold(wf, eps_node)
    _check_resolution(R, wf.grid)
    lapR = _g.laplacian(R, wf.grid)
    safe = np.where(mask, 1.0, R)
    hbar, m = wf.params.hbar, wf.params.mass
    Q = -(hbar**2) / (2 * m) * lapR / safe
    return ScalarField(wf.grid, Q, mask)


def regularized_quantum_potential(wf: WaveField, delta: float, dealias: bool = False) -> np.ndarray:
    """``-(hbar^2/2m) lap(R) R/(R^2 + delta^2)``: equals Q where R >> delta, decays to 0 in the tails.

    ``dealias`` (periodic grids only) first damps the amplitude's highest
    Fourier modes with an exponential filter.  ``|psi|`` has aliased high-wavenumber content
    wherever it is small, and feeding that back through Q makes nonlinear
    evolution unstable in the tails.
    """
    R = np.abs(wf.psi)
    if dealias and wf.grid.periodic:
        R = _g.lowpass(R, wf.grid)
    lapR = _g.laplacian(R, wf.grid)
    return -(wf.params.hbar**2) / (2 * wf.params.mass) * lapR * R / (R**2 + delta**2)


def quantum_force(q: ScalarField) -> VectorField:
    """``F_Q = -grad Q``.

    Q is generally not periodic on the box (it grows like ``-|r|^2`` for
    bound states), so the fourth-order finite-difference gradient is used on
    every grid; points whose stencil touches the mask are masked.
    """
    g = gradient_field(q)
    return VectorField(q.grid, -g.filled(), g.mask)


def gradient_field(f: ScalarField) -> VectorField:
    """Fourth-order finite-difference gradient of a (generally non-periodic) scalar field."""
    G = _g.fd_gradient(f.values, f.grid)
    mask = f.mask | np.any(np.isnan(G), axis=0)
    return VectorField(f.grid, np.nan_to_num(G), mask)


def sign_change_mask(wf: WaveField) -> np.ndarray:
    """Points adjacent to a sign change of ``psi`` after removing its global phase.

    Only meaningful for states that are real up to a constant phase; nodes of
    such states usually fall between grid points and are invisible to an
    amplitude threshold.
    """
    psi = wf.psi
    ref = psi.flat[np.argmax(np.abs(psi))]
    real = np.real(psi * np.conj(ref) / abs(ref))
    out = np.zeros(psi.shape, bool)
    for axis in range(psi.ndim):
        a = np.moveaxis(real, axis, 0)
        flip = a[1:] * a[:-1] < 0
        o = np.moveaxis(out, axis, 0)
        o[1:] |= flip
        o[:-1] |= flip
    return out


def core_mask(wf: WaveField, rel_amplitude: float = 1e-2, margin: int = 0) -> np.ndarray:
    """Verification region: well-resolved amplitude, away from walls and nodes.

    Points are excluded where ``R < rel_amplitude * max R``, at sign changes
    of a real-up-to-phase state, and (non-periodic grids) at the walls; the
    excluded set is then grown by ``margin`` cells.
    """
    R = np.abs(wf.psi)
    bad = R < rel_amplitude * R.max()
    bad |= sign_change_mask(wf)
    if not wf.grid.periodic:
        bad |= wf.grid.boundary_distance() == 0
    if margin:
        bad = ndimage.binary_dilation(bad, iterations=margin)
    return ~bad


def covariance_matrix(wf: WaveField, tol: float = 1e-8) -> CovarianceMatrix:
    """Phase-space covariance ``(x..., p...)`` of a normalized state.

    Position moments use quadrature over ``|psi|^2``.  On periodic grids the
    momentum moments use the discrete momentum-space density; on walled grids
    they use ``<p_i p_j> = hbar^2 Re int d_i psi* d_j psi``, the same quantity
    with the Dirichlet boundary built in.  The cross block is
    ``Re <psi| x_i p_j |psi> - <x_i><p_j>``.
    """
    wf.check_normalized(tol)
    grid, psi, hbar = wf.grid, wf.psi, wf.params.hbar
    n = grid.dim
    w = grid.quadrature_weights()
    rho = np.abs(psi) ** 2
    X = grid.mesh()
    mx = np.array([np.sum(x * rho * w) for x in X])
    dpsi = _g.gradient(psi, grid)
    if grid.periodic:
        phi2 = np.abs(sfft.fftn(psi)) ** 2
        phi2 /= phi2.sum()
        K = np.meshgrid(*grid.wavenumbers(), indexing="ij")
        P = [hbar * k for k in K]
        mp = np.array([np.sum(p * phi2) for p in P])
        spp = np.array([[np.sum((P[i] - mp[i]) * (P[j] - mp[j]) * phi2) for j in range(n)] for i in range(n)])
    else:
        mp = np.array([np.real(np.sum(np.conj(psi) * (-1j * hbar) * dpsi[i] * w)) for i in range(n)])
        spp = np.array(
            [
                [hbar**2 * np.real(np.sum(np.conj(dpsi[i]) * dpsi[j] * w)) - mp[i] * mp[j] for j in range(n)]
                for i in range(n)
            ]
        )
    sxx = np.array([[np.sum((X[i] - mx[i]) * (X[j] - mx[j]) * rho * w) for j in range(n)] for i in range(n)])
    sxp = np.array(
        [
            [np.real(np.sum(np.conj(psi) * X[i] * (-1j * hbar) * dpsi[j] * w)) - mx[i] * mp[j] for j in range(n)]
            for i in range(n)
        ]
    )
    sigma = np.block([[sxx, sxp], [sxp.T, spp]])
    return CovarianceMatrix(0.5 * (sigma + sigma.T), np.concatenate([mx, mp]))
