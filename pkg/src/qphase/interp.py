"""Off-grid evaluation of gridded fields."""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from .grid import Grid


class OutOfDomainError(ValueError):
    pass


def check_inside(grid: Grid, points: np.ndarray) -> None:
    lo = np.asarray(grid.lower)
    hi = np.asarray(grid.upper)
    bad = np.any((points < lo) | (points > hi), axis=1)
    if np.any(bad):
        raise OutOfDomainError(f"{int(bad.sum())} point(s) lie outside the grid box {grid.lower}..{grid.upper}")


def spectral_interpolate(fields: np.ndarray, grid: Grid, points: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic fields at arbitrary points.

    ``fields`` has shape ``(n_fields, *grid.shape)``; returns ``(n_points, n_fields)``.
    The Nyquist mode is split symmetrically so real data interpolate to real values.
    """
    fields = np.asarray(fields)
    points = np.atleast_2d(np.asarray(points, float))
    axes = tuple(range(1, grid.dim + 1))
    C = sfft.fftn(fields, axes=axes) / np.prod(grid.shape)
    out = np.empty((len(points), len(fields)), dtype=complex)
    ks = grid.wavenumbers()
    for start in range(0, len(points), chunk):
        pts = points[start : start + chunk]
        T = None
        for axis in range(grid.dim):
            n = grid.n_points[axis]
            phase = np.outer(pts[:, axis] - grid.lower[axis], ks[axis])
            E = np.exp(1j * phase)
            E[:, n // 2] = np.cos(phase[:, n // 2])
            if T is None:
                # one BLAS contraction over the first axis: (m, f, rest...)
                T = np.tensordot(E, C, axes=(1, 1))
            else:
                T = np.einsum("mfa...,ma->mf...", T, E)
        out[start : start + chunk] = T
    return out if np.iscomplexobj(fields) else out.real


def fractional_index(grid: Grid, points: np.ndarray) -> np.ndarray:
    """Grid index coordinates of physical points, shape ``(dim, n_points)``."""
    points = np.atleast_2d(points)
    return ((points - np.asarray(grid.lower)) / grid.spacing).T


def spline_coefficients(fields: np.ndarray, grid: Grid, order: int = 3) -> np.ndarray:
    """Prefiltered B-spline coefficients for repeated evaluation of real fields."""
    mode = "grid-wrap" if grid.periodic else "mirror"
    return np.stack([ndimage.spline_filter(f, order=order, mode=mode) for f in np.asarray(fields, float)])


def spline_evaluate(coeffs: np.ndarray, grid: Grid, points: np.ndarray, order: int = 3) -> np.ndarray:
    """Evaluate prefiltered spline coefficients; returns ``(n_points, n_fields)``."""
    mode = "grid-wrap" if grid.periodic else "mirror"
    idx = fractional_index(grid, points)
    return np.stack(
        [ndimage.map_coordinates(c, idx, order=order, mode=mode, prefilter=False) for c in coeffs], axis=1
    )


def spline_interpolate(fields: np.ndarray, grid: Grid, points: np.ndarray, order: int = 3) -> np.ndarray:
    return spline_evaluate(spline_coefficients(fields, grid, order), grid, points, order)
