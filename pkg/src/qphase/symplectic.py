"""Linear symplectic geometry of quadratic phase-space sets.

Coordinates are ordered ``(x_1..x_n, p_1..p_n)`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

PAIRING_TOL = 1e-10


class SpectrumError(ValueError):
    """Symplectic spectrum undefined (matrix not positive-definite)."""


class NotSeparableError(ValueError):
    """The requested conjugate plane is coupled to other coordinates."""


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """The phase-space set ``{z : z^T A z / 2 <= E}``."""

    A: np.ndarray
    E: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
            raise ValueError("A must be a 2n x 2n matrix")
        if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise ValueError("A must be symmetric")
        if not self.E > 0:
            raise ValueError("level E must be positive")
        A = 0.5 * (A + A.T)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "E", float(self.E))

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2

    def contains(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(z)
        return 0.5 * np.einsum("ki,ij,kj->k", z, self.A, z) <= self.E

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "E": self.E, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticForm":
        return cls(np.asarray(d["A"], float), d["E"])


@dataclass(frozen=True)
class SymplecticSpectrum:
    nu: tuple[float, ...]

    @property
    def max(self) -> float:
        return self.nu[0]

    @property
    def min(self) -> float:
        return self.nu[-1]


def standard_symplectic_matrix(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_eigenvalues(M: np.ndarray) -> np.ndarray:
    """Williamson eigenvalues of a symmetric positive-definite ``M``, descending.

    The eigenvalues of ``J M`` are ``+-i nu_j``; the pairing is checked.
    """
    M = np.asarray(M, float)
    if np.min(np.linalg.eigvalsh(0.5 * (M + M.T))) <= 0:
        raise SpectrumError("symplectic spectrum requires a positive-definite matrix")
    n = M.shape[0] // 2
    lam = np.linalg.eigvals(standard_symplectic_matrix(n) @ M)
    scale = np.max(np.abs(lam))
    if np.max(np.abs(lam.real)) > PAIRING_TOL * scale:
        raise SpectrumError("eigenvalues of J M are not purely imaginary")
    upper = np.sort(lam.imag[lam.imag > 0])[::-1]
    lower = np.sort(-lam.imag[lam.imag < 0])[::-1]
    if len(upper) != n or len(lower) != n or np.max(np.abs(upper - lower)) > PAIRING_TOL * scale:
        raise SpectrumError("eigenvalues of J M do not come in conjugate pairs")
    return 0.5 * (upper + lower)


def williamson_spectrum(q: QuadraticForm) -> SymplecticSpectrum:
    return SymplecticSpectrum(tuple(float(v) for v in symplectic_eigenvalues(q.A)))


def capacity_quadratic(q: QuadraticForm) -> float:
    """Linear symplectic capacity (Gromov width) ``2 pi E / nu_max``."""
    return 2.0 * math.pi * q.E / williamson_spectrum(q).max


def conjugate_section_area(q: QuadraticForm, axis: int, tol: float = 1e-12) -> float:
    """Area of the section of the ellipsoid by the ``(x_k, p_k)`` plane, ``axis = k`` 1-based."""
    n = q.n
    if not 1 <= axis <= n:
        raise ValueError(f"axis must lie in 1..{n}")
    i, j = axis - 1, axis - 1 + n
    others = [k for k in range(2 * n) if k not in (i, j)]
    coupling = q.A[np.ix_([i, j], others)]
    if coupling.size and np.max(np.abs(coupling)) > tol:
        raise NotSeparableError(f"plane (x_{axis}, p_{axis}) is coupled to other coordinates")
    block = q.A[np.ix_([i, j], [i, j])]
    return 2.0 * math.pi * q.E / math.sqrt(np.linalg.det(block))


@dataclass(frozen=True)
class RSResult:
    passed: bool
    margin: float
    nu: tuple[float, ...]


def rs_check(sigma, hbar: float = 1.0, tol: float = 1e-12) -> RSResult:
    """Robertson-Schroedinger condition ``Sigma + i hbar J / 2 >= 0``.

    Equivalent to every symplectic eigenvalue of ``Sigma`` being at least
    ``hbar/2``; in one degree of freedom it reads
    ``dx^2 dp^2 - Cov(x, p)^2 >= hbar^2/4``.
    """
    S = getattr(sigma, "sigma", sigma)
    nu = symplectic_eigenvalues(S)
    margin = float(nu[-1] - hbar / 2)
    return RSResult(bool(margin >= -tol), margin, tuple(float(v) for v in nu))


@dataclass(frozen=True)
class BlobResult:
    passed: bool
    ratio: float
    capacity: float


def quantum_blob_contained(q: QuadraticForm, hbar: float = 1.0) -> BlobResult:
    """Whether the capacity reaches ``h/2 = pi hbar``; ``ratio`` is capacity in units of ``h/2``."""
    c = capacity_quadratic(q)
    ratio = c / (math.pi * hbar)
    return BlobResult(bool(ratio >= 1.0 - 1e-12), ratio, c)


def wigner_ellipsoid(sigma) -> QuadraticForm:
    """Covariance ellipsoid ``{z : z^T Sigma^-1 z / 2 <= 1}`` of a Gaussian state."""
    S = getattr(sigma, "sigma", sigma)
    return QuadraticForm(np.linalg.inv(S), 1.0)


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """``exp(J H)`` for a random symmetric ``H``; ``J H`` is Hamiltonian so the result is symplectic."""
    H = rng.normal(scale=scale, size=(2 * n, 2 * n))
    H = 0.5 * (H + H.T)
    return linalg.expm(standard_symplectic_matrix(n) @ H)


def random_positive_definite(n: int, rng: np.random.Generator) -> np.ndarray:
    B = rng.normal(size=(2 * n, 2 * n))
    return B @ B.T + 0.5 * np.eye(2 * n)
