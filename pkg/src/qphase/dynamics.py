"""Time evolution, Madelung residuals, Bohmian trajectories and node diagnostics."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from . import grid as _g
from . import interp
from .fields import ScalarField, WaveField
from .states import Potential
from .wavefield import (
    bohm_momentum_field,
    core_mask,
    node_mask,
    node_threshold,
    quantum_potential,
    regularized_quantum_potential,
    sign_change_mask,
)

log = logging.getLogger(__name__)

NORM_DRIFT_TOL = 1e-6


class PropagationError(RuntimeError):
    """Propagation aborted (norm drift)."""


class NodeFormationError(RuntimeError):
    """A node appeared where the nonlinear equation needs Q to be defined."""


class TimeSpacingError(ValueError):
    pass


PotentialLike = Potential | ScalarField | Callable[[_g.Grid], ScalarField]


@dataclass(frozen=True)
class PropagationConfig:
    """Settings for split-step propagation.

    ``q_refresh`` only affects the nonlinear equation: ``"half"`` recomputes
    Q before each potential half-step (second order), ``"step"`` once per
    step from the pre-step frame (first order in the nonlinearity).
    ``dealias`` damps the top Fourier modes of the amplitude before Q is formed on
    periodic grids, which keeps the nonlinear evolution stable.
    """

    dt: float
    n_steps: int
    potential: PotentialLike | None = None
    record_every: int = 1
    scheme: str = "strang_split"
    q_refresh: str = "half"
    q_delta: float = 1e-6
    dealias: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1 or self.record_every < 1:
            raise ValueError("n_steps and record_every must be >= 1")
        if self.scheme != "strang_split":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if self.q_refresh not in ("half", "step"):
            raise ValueError("q_refresh must be 'half' or 'step'")

    def potential_field(self, grid: _g.Grid) -> np.ndarray:
        if self.potential is None:
            return np.zeros(grid.shape)
        V = self.potential if isinstance(self.potential, ScalarField) else self.potential(grid)
        return V.filled()

    def describe(self) -> dict:
        pot = self.potential
        if isinstance(pot, Potential):
            pot_desc = pot.to_dict()
        elif pot is None:
            pot_desc = None
        else:
            pot_desc = type(pot).__name__
        return {
            "dt": self.dt,
            "n_steps": self.n_steps,
            "record_every": self.record_every,
            "scheme": self.scheme,
            "q_refresh": self.q_refresh,
            "q_delta": self.q_delta,
            "dealias": self.dealias,
            "potential": pot_desc,
        }


@dataclass(frozen=True, eq=False)
class Timeseries:
    times: np.ndarray
    frames: list
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, float)
        if len(times) != len(self.frames):
            raise ValueError("times and frames differ in length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)

    @property
    def grid(self) -> _g.Grid:
        return self.frames[0].grid

    def __len__(self) -> int:
        return len(self.frames)


# --- split-step machinery ---------------------------------------------------


class _Kinetic:
    """Exact free propagator over ``dt``: Fourier on periodic grids, sine basis with walls."""

    def __init__(self, grid: _g.Grid, hbar: float, mass: float, dt: float):
        self.grid = grid
        if grid.periodic:
            ks = grid.wavenumbers()
        else:
            ks = [np.pi * np.arange(1, n - 1) / L for n, L in zip(grid.n_points, grid.lengths)]
        k2 = sum(k**2 for k in np.meshgrid(*ks, indexing="ij", sparse=True))
        self.phase = np.exp(-1j * hbar * k2 * dt / (2 * mass))
        self.max_energy = hbar**2 * sum(np.max(k**2) for k in ks) / (2 * mass)

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        if self.grid.periodic:
            return sfft.ifftn(self.phase * sfft.fftn(psi))
        inner = tuple(slice(1, -1) for _ in range(self.grid.dim))
        out = np.zeros_like(psi)
        coef = sfft.dstn(psi[inner].real, type=1) + 1j * sfft.dstn(psi[inner].imag, type=1)
        coef *= self.phase
        out[inner] = sfft.idstn(coef.real, type=1) + 1j * sfft.idstn(coef.imag, type=1)
        return out


def _check_stability(kin: _Kinetic, dt: float, hbar: float) -> None:
    ratio = dt * kin.max_energy / hbar
    if ratio > 0.5:
        log.info("dt*E_max/hbar = %.3g exceeds 0.5; splitting error may be large at high wavenumbers", ratio)


def _norm_guard(psi: np.ndarray, grid: _g.Grid, step: int) -> None:
    n2 = float(grid.integrate(np.abs(psi) ** 2))
    if not math.isfinite(n2) or abs(n2 - 1.0) > NORM_DRIFT_TOL:
        raise PropagationError(f"norm drifted to {n2:.12g} at step {step}; aborting")


def _steps(wf0: WaveField, cfg: PropagationConfig, potential_step):
    """Yield ``(step, psi)`` after every Strang step (``psi`` is reused; copy to keep)."""
    wf0.check_normalized(1e-8)
    grid, params = wf0.grid, wf0.params
    kin = _Kinetic(grid, params.hbar, params.mass, cfg.dt)
    _check_stability(kin, cfg.dt, params.hbar)
    psi = np.array(wf0.psi)
    for step in range(1, cfg.n_steps + 1):
        psi = potential_step(psi)
        psi = kin(psi)
        psi = potential_step(psi)
        if step % cfg.record_every == 0 or step == cfg.n_steps:
            _norm_guard(psi, grid, step)
        yield step, psi


def _run(wf0: WaveField, cfg: PropagationConfig, potential_step) -> Timeseries:
    times, frames = [0.0], [wf0]
    for step, psi in _steps(wf0, cfg, potential_step):
        if step % cfg.record_every == 0:
            times.append(step * cfg.dt)
            frames.append(WaveField(wf0.grid, psi, wf0.params))
    return Timeseries(np.array(times), frames, cfg.describe())


def propagate_schrodinger(wf0: WaveField, cfg: PropagationConfig) -> Timeseries:
    """Linear Schroedinger evolution by second-order Strang splitting.

    Each step is ``exp(-iV dt/2hbar) exp(-iK dt/hbar) exp(-iV dt/2hbar)``.
    Frames are kept every ``record_every`` steps, the initial frame included.
    """
    return _run(wf0, cfg, _linear_stepper(wf0, cfg))


def _linear_stepper(wf0: WaveField, cfg: PropagationConfig):
    V = cfg.potential_field(wf0.grid)
    half = np.exp(-1j * V * cfg.dt / (2 * wf0.params.hbar))
    return lambda psi: half * psi


def interior_nodes(wf: WaveField, eps_node: float | None = None, tail_level: float = 1e-3) -> np.ndarray:
    """Points at or beside a node of ``psi`` away from the box boundary.

    The tail is the region connected to the box faces where ``|psi|`` is
    below ``tail_level * max|psi|``; nothing there counts.  Elsewhere two
    kinds are flagged: masked points, and neighbouring pairs whose values
    differ in phase by more than pi/2, which on a resolved field means a
    zero lies between them.
    """
    mask = node_mask(wf, eps_node)
    amp = np.abs(wf.psi)
    low = amp < tail_level * amp.max()
    labels, _ = ndimage.label(low)
    faces = np.zeros(low.shape, bool)
    for axis in range(low.ndim):
        idx = [slice(None)] * low.ndim
        for end in (0, -1):
            idx[axis] = end
            faces[tuple(idx)] = True
    touching = np.unique(labels[faces & low])
    tail = low & np.isin(labels, touching[touching > 0])
    out = mask & ~tail
    psi = wf.psi
    for axis in range(psi.ndim):
        a = [slice(None)] * psi.ndim
        b = [slice(None)] * psi.ndim
        a[axis], b[axis] = slice(None, -1), slice(1, None)
        a, b = tuple(a), tuple(b)
        jump = (np.real(psi[a] * np.conj(psi[b])) < 0) & ~tail[a] & ~tail[b]
        out[a] |= jump
        out[b] |= jump
    return out


def propagate_classical_nonlinear(wf0: WaveField, cfg: PropagationConfig) -> Timeseries:
    """Evolution with the quantum potential removed from the phase dynamics.

    Solves ``i hbar psi_t = -(hbar^2/2m) lap psi - Q psi + V psi``, whose
    phase obeys the classical Hamilton-Jacobi equation.  The potential
    half-steps multiply by ``exp(-i (V - Q) dt/2hbar)``; since they leave
    ``|psi|`` (hence Q) unchanged they are exact.  Q is regularized in the
    far tails (below ``q_delta * max|psi|``) where it is numerically
    undefined.  A node appearing away from the tails halts the run.
    """
    return _run(wf0, cfg, _classical_stepper(wf0, cfg))


def _classical_stepper(wf0: WaveField, cfg: PropagationConfig):
    grid, hbar = wf0.grid, wf0.params.hbar
    if interior_nodes(wf0).any():
        raise NodeFormationError("initial state has nodes; the quantum potential is not globally defined")
    V = cfg.potential_field(grid)
    delta = cfg.q_delta * np.abs(wf0.psi).max()
    state = {"Q": None, "count": 0}

    def q_of(psi):
        return regularized_quantum_potential(WaveField(grid, psi, wf0.params), delta, cfg.dealias)

    def potential_step(psi):
        # called twice per step: before and after the kinetic step
        first = state["count"] % 2 == 0
        state["count"] += 1
        if first:
            if interior_nodes(WaveField(grid, psi, wf0.params)).any():
                raise NodeFormationError(f"node formed at step {state['count'] // 2}")
            state["Q"] = q_of(psi)
        elif cfg.q_refresh == "half":
            state["Q"] = q_of(psi)
        return np.exp(-1j * (V - state["Q"]) * cfg.dt / (2 * hbar)) * psi

    return potential_step


@dataclass(frozen=True)
class ResidualScan:
    """Madelung residual maxima at checkpoints along one propagation run."""

    times: np.ndarray
    hj: np.ndarray
    continuity: np.ndarray
    offsets: np.ndarray

    @property
    def max_hj(self) -> float:
        return float(np.max(self.hj))

    @property
    def max_continuity(self) -> float:
        return float(np.max(self.continuity))


def residual_scan(
    wf0: WaveField,
    cfg: PropagationConfig,
    every: int,
    classical: bool = False,
    include_q: bool = True,
    region: Callable[[WaveField], np.ndarray] | None = None,
) -> ResidualScan:
    """Propagate and evaluate Madelung residuals every ``every`` steps without storing frames.

    At each checkpoint step ``c`` the residuals use frames ``c-1, c, c+1``
    (time step ``cfg.dt``).  ``region`` maps a frame to its evaluation
    region (default: ``core_mask`` of that frame).
    """
    stepper = _classical_stepper(wf0, cfg) if classical else _linear_stepper(wf0, cfg)
    grid, params = wf0.grid, wf0.params
    prev = [None, wf0.psi]
    pending = None
    times, hj, cont, offs = [], [], [], []
    for step, psi in _steps(wf0, cfg, stepper):
        frame = np.array(psi)
        if pending is not None:
            ts = Timeseries(np.array([step - 2, step - 1, step]) * cfg.dt,
                            [WaveField(grid, f, params) for f in (prev[0], prev[1], frame)])
            r = madelung_residuals(ts, cfg.potential, include_q=include_q, region=region)
            times.append(r.times[0])
            hj.append(r.max_hj())
            cont.append(r.max_continuity())
            offs.append(r.offsets()[0])
            pending = None
        if step % every == 0 and step < cfg.n_steps:
            pending = step
        prev = [prev[1], frame]
    return ResidualScan(np.array(times), np.array(hj), np.array(cont), np.array(offs))


def time_reversal_error(wf0: WaveField, cfg: PropagationConfig) -> float:
    """Max ``|psi|`` error after ``n_steps`` forward then the same number backward."""
    fwd = propagate_schrodinger(wf0, PropagationConfig(cfg.dt, cfg.n_steps, cfg.potential, cfg.n_steps))
    end = fwd.frames[-1]
    V = cfg.potential_field(wf0.grid)
    kin = _Kinetic(wf0.grid, wf0.params.hbar, wf0.params.mass, -cfg.dt)
    half = np.exp(1j * V * cfg.dt / (2 * wf0.params.hbar))
    psi = np.array(end.psi)
    for _ in range(cfg.n_steps):
        psi = half * kin(half * psi)
    return float(np.max(np.abs(psi - wf0.psi)))


# --- Madelung residuals -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class MadelungResiduals:
    """Residual fields at each interior frame of a timeseries.

    ``hj`` is ``dS/dt + |grad S|^2/2m + V (+ Q)``; the phase is only defined
    up to a spatially constant (time-dependent) gauge term, so comparisons use
    ``hj - offset`` where ``offset`` is the Chebyshev centre of ``hj`` over
    the evaluation region.
    """

    times: np.ndarray
    hj: list
    continuity: list
    regions: list

    def offsets(self) -> np.ndarray:
        out = []
        for f, reg in zip(self.hj, self.regions):
            v = f.values[reg & ~f.mask]
            out.append(0.5 * (v.max() + v.min()))
        return np.array(out)

    def max_hj(self) -> float:
        """Max over frames of ``max |hj - offset|`` on the evaluation region."""
        worst = 0.0
        for f, reg in zip(self.hj, self.regions):
            v = f.values[reg & ~f.mask]
            worst = max(worst, 0.5 * (v.max() - v.min()))
        return worst

    def max_continuity(self) -> float:
        return max(float(np.max(np.abs(f.values[reg & ~f.mask]))) for f, reg in zip(self.continuity, self.regions))


def _uniform_spacing(times: np.ndarray) -> float:
    d = np.diff(times)
    if len(times) < 3:
        raise TimeSpacingError("need at least 3 frames for centred time differences")
    if np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]):
        raise TimeSpacingError("frames are not uniformly spaced in time")
    return float(d[0])


def madelung_residuals(
    ts: Timeseries,
    V: PotentialLike | None = None,
    include_q: bool = True,
    eps_node: float | None = None,
    region: Callable[[WaveField], np.ndarray] | None = None,
) -> MadelungResiduals:
    """Hamilton-Jacobi and continuity residuals of a timeseries.

    ``dS/dt`` is ``hbar Im(psi_dot/psi)`` with centred differences of frames,
    so it is gauge-safe; ``div j`` is the spectral (or FD) divergence of
    ``hbar Im(psi* grad psi)/m``.  ``region`` maps a frame to the boolean
    evaluation region (default: ``core_mask``).
    """
    h = _uniform_spacing(ts.times)
    grid = ts.grid
    if V is None:
        Vf = np.zeros(grid.shape)
    elif isinstance(V, ScalarField):
        Vf = V.filled()
    else:
        Vf = V(grid).filled()
    region = region or (lambda wf: core_mask(wf, margin=0 if wf.grid.periodic else 3))
    hj, cont, regs = [], [], []
    for i in range(1, len(ts) - 1):
        wf = ts.frames[i]
        params = wf.params
        psi_dot = (ts.frames[i + 1].psi - ts.frames[i - 1].psi) / (2 * h)
        mask = node_mask(wf, eps_node)
        rho = np.abs(wf.psi) ** 2
        safe = np.where(mask, 1.0, rho)
        S_t = params.hbar * np.imag(np.conj(wf.psi) * psi_dot) / safe
        gradS = bohm_momentum_field(wf, eps_node).filled()
        r_hj = S_t + np.sum(gradS**2, axis=0) / (2 * params.mass) + Vf
        if include_q:
            r_hj = r_hj + quantum_potential(wf, eps_node).filled()
        rho_t = (np.abs(ts.frames[i + 1].psi) ** 2 - np.abs(ts.frames[i - 1].psi) ** 2) / (2 * h)
        j = params.hbar / params.mass * np.imag(np.conj(wf.psi) * _g.gradient(wf.psi, grid))
        r_c = rho_t + _g.divergence(j, grid)
        hj.append(ScalarField(grid, r_hj, mask))
        cont.append(ScalarField(grid, r_c, mask))
        regs.append(region(wf))
    return MadelungResiduals(ts.times[1:-1], hj, cont, regs)


# --- Bohmian trajectories ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """Tracer paths; ``positions[s, k]`` is seed ``s`` at ``times[k]`` (NaN after termination).

    ``status`` is ``"ok"``, ``"exited"`` (left the grid box) or ``"node"``
    (entered the node mask).
    """

    seeds: np.ndarray
    times: np.ndarray
    positions: np.ndarray
    status: tuple

    def displacement(self) -> np.ndarray:
        """``|r(t_final) - r(0)|`` per seed (NaN for terminated paths)."""
        return np.linalg.norm(self.positions[:, -1] - self.positions[:, 0], axis=1)

    def max_excursion(self) -> np.ndarray:
        return np.nanmax(np.linalg.norm(self.positions - self.positions[:, :1], axis=2), axis=1)


class _VelocityFrames:
    """Velocity ``hbar Im(psi* grad psi)/(m |psi|^2)`` at arbitrary points of one frame."""

    def __init__(self, ts: Timeseries, eps: float):
        self.ts = ts
        self.eps = eps
        self.order = 5 if ts.grid.periodic else 3
        self._cache: dict[int, np.ndarray] = {}

    def _coeffs(self, i: int) -> np.ndarray:
        if i not in self._cache:
            if len(self._cache) > 3:
                self._cache.pop(min(self._cache))
            wf = self.ts.frames[i]
            d = _g.gradient(wf.psi, wf.grid)
            parts = [wf.psi.real, wf.psi.imag, *d.real, *d.imag]
            self._cache[i] = interp.spline_coefficients(np.stack(parts), wf.grid, self.order)
        return self._cache[i]

    def __call__(self, i: int, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grid = self.ts.grid
        vals = interp.spline_evaluate(self._coeffs(i), grid, r, self.order)
        dim = grid.dim
        psi = vals[:, 0] + 1j * vals[:, 1]
        dpsi = vals[:, 2 : 2 + dim] + 1j * vals[:, 2 + dim :]
        amp2 = np.abs(psi) ** 2
        params = self.ts.frames[i].params
        v = params.hbar / params.mass * np.imag(np.conj(psi)[:, None] * dpsi) / np.maximum(amp2, 1e-300)[:, None]
        return v, np.sqrt(amp2) < self.eps


def _snap_seeds(seeds: np.ndarray, wf: WaveField, eps: float) -> np.ndarray:
    grid = wf.grid
    mask = np.abs(wf.psi) < eps
    idx = np.clip(np.rint(interp.fractional_index(grid, seeds)).astype(int).T, 0, np.array(grid.shape) - 1)
    bad = mask[tuple(idx.T)]
    if not bad.any():
        return seeds
    free = np.argwhere(~mask)
    seeds = seeds.copy()
    for s in np.flatnonzero(bad):
        nearest = free[np.argmin(np.sum((free - idx[s]) ** 2, axis=1))]
        seeds[s] = np.asarray(grid.lower) + nearest * grid.spacing
    warnings.warn(f"{int(bad.sum())} seed(s) started in the node mask and were moved to the nearest unmasked grid point")
    return seeds


def integrate_bohm_trajectories(
    ts: Timeseries, seeds: Sequence, substeps: int = 1, eps_node: float | None = None
) -> TrajectoryEnsemble:
    """Integrate ``dr/dt = grad S / m`` with classical RK4.

    Space: B-spline interpolation of ``psi`` and ``grad psi`` (quintic on
    periodic grids, cubic with walls) recombined into the velocity; time:
    linear interpolation of the velocity between neighbouring frames.  Each
    frame interval is split into ``substeps`` RK4 steps.
    """
    grid = ts.grid
    seeds = np.atleast_2d(np.asarray(seeds, float))
    if seeds.shape[1] != grid.dim:
        raise ValueError("seed dimension does not match the grid")
    eps = node_threshold(ts.frames[0], eps_node)
    seeds = _snap_seeds(seeds, ts.frames[0], eps)
    vel = _VelocityFrames(ts, eps)
    lo, hi = np.asarray(grid.lower), np.asarray(grid.upper)
    n_seeds = len(seeds)
    out = np.full((n_seeds, len(ts), grid.dim), np.nan)
    out[:, 0] = seeds
    status = np.array(["ok"] * n_seeds, dtype=object)
    r = seeds.copy()
    alive = np.ones(n_seeds, bool)

    def velocity(k: int, frac: float, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v0, m0 = vel(k, pts)
        if frac == 0.0:
            return v0, m0
        v1, m1 = vel(k + 1, pts)
        return (1 - frac) * v0 + frac * v1, m0 | m1

    for k in range(len(ts) - 1):
        H = (ts.times[k + 1] - ts.times[k]) / substeps
        for s in range(substeps):
            if not alive.any():
                break
            pts = r[alive]
            f0 = s / substeps
            fm = (s + 0.5) / substeps
            f1 = (s + 1) / substeps
            k1, n1 = velocity(k, f0, pts)
            k2, n2 = velocity(k, fm, pts + 0.5 * H * k1)
            k3, n3 = velocity(k, fm, pts + 0.5 * H * k2)
            k4, n4 = velocity(k, f1 if f1 < 1 else 1.0, pts + H * k3)
            new = pts + H / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            hit_node = n1 | n2 | n3 | n4
            exited = np.any((new < lo) | (new > hi), axis=1)
            ids = np.flatnonzero(alive)
            status[ids[hit_node]] = "node"
            status[ids[exited & ~hit_node]] = "exited"
            r[ids] = new
            alive[ids[hit_node | exited]] = False
        out[alive, k + 1] = r[alive]
    return TrajectoryEnsemble(seeds, ts.times.copy(), out, tuple(status))


def sample_seeds(wf: WaveField, n: int, rng: np.random.Generator, region: np.ndarray | None = None) -> np.ndarray:
    """Draw positions from ``|psi|^2`` (cell-jittered), restricted to ``region`` (default off-mask)."""
    grid = wf.grid
    p = np.abs(wf.psi) ** 2 * grid.quadrature_weights()
    region = ~node_mask(wf) if region is None else region
    p = np.where(region, p, 0.0).ravel()
    idx = rng.choice(p.size, size=n, p=p / p.sum())
    cells = np.stack(np.unravel_index(idx, grid.shape), axis=1)
    jitter = rng.uniform(-0.5, 0.5, size=cells.shape)
    if not grid.periodic:
        jitter = np.where((cells == 0), np.abs(jitter), jitter)
        jitter = np.where((cells == np.array(grid.shape) - 1), -np.abs(jitter), jitter)
    return np.asarray(grid.lower) + (cells + jitter) * grid.spacing


def wasserstein_to_density(samples: np.ndarray, wf: WaveField, n_quantiles: int = 100_000) -> float:
    """1-Wasserstein distance between 1D samples and ``|psi|^2`` (piecewise-linear CDF)."""
    from scipy.stats import wasserstein_distance

    grid = wf.grid
    if grid.dim != 1:
        raise ValueError("1D states only")
    x = grid.axes[0]
    rho = np.abs(wf.psi) ** 2
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    q = np.interp((np.arange(n_quantiles) + 0.5) / n_quantiles, cdf, x)
    return float(wasserstein_distance(np.ravel(samples), q))


# --- nodes ---------------------------------------------------------------------


@dataclass(frozen=True)
class NodeReport:
    position: float
    index: int
    shells: tuple
    fit_constant: float
    fit_inverse_square: float
    behaviour: str


@dataclass(frozen=True)
class NodeDiagnostics:
    nodes: tuple
    eps_node: float

    def to_dict(self) -> dict:
        return {
            "eps_node": self.eps_node,
            "nodes": [
                {
                    "position": n.position,
                    "index": n.index,
                    "shells": [dict(zip(("cells", "distance", "Q_left", "Q_right"), s)) for s in n.shells],
                    "fit": {"Q_far": n.fit_constant, "c_inverse_square": n.fit_inverse_square},
                    "behaviour": n.behaviour,
                }
                for n in self.nodes
            ],
        }


def node_diagnostics(
    wf: WaveField, eps_node: float | None = None, shells: Sequence[int] = (3, 4, 6, 8, 12, 16)
) -> NodeDiagnostics:
    """Locate nodes of a 1D state and tabulate Q on shells around each.

    Nodes are interior sign changes of the gauge-fixed real part of a state
    that is real up to a global phase (located by linear interpolation) and interior local minima of ``R`` below the node
    threshold.  On each shell at ``k`` cells from the node Q is sampled on
    both sides; ``Q(d) = Q_far + c/d^2`` is fitted by least squares and the
    behaviour is labelled ``constant`` when Q varies by less than 1e-4
    relative across shells, ``divergent`` when ``|Q|`` grows toward the node,
    ``other`` otherwise.
    """
    if wf.grid.dim != 1:
        raise ValueError("node diagnostics support 1D states only")
    grid = wf.grid
    x = grid.axes[0]
    eps = node_threshold(wf, eps_node)
    psi = wf.psi
    ref = psi[np.argmax(np.abs(psi))]
    gauged = psi * np.conj(ref) / abs(ref)
    real = gauged.real
    R = np.abs(psi)
    # sign changes of the real part are nodes only for states that are real up to a global phase
    is_real = np.max(np.abs(gauged.imag)) <= 1e-8 * R.max()
    lo_edge = 1 if not grid.periodic else 0
    cands: list[tuple[float, int, int]] = []
    for j in range(lo_edge, len(x) - 1 - lo_edge) if is_real else ():
        a, b = real[j], real[j + 1]
        if a * b < 0:
            t = a / (a - b)
            cands.append((x[j] + t * (x[j + 1] - x[j]), j, j + 1))
    for j in range(1, len(x) - 1):
        if R[j] < eps and R[j] <= R[j - 1] and R[j] <= R[j + 1]:
            if not any(j in (c[1], c[2]) for c in cands):
                cands.append((x[j], j - 1, j + 1))
    Q = quantum_potential(wf, eps).values
    reports = []
    for pos, left, right in sorted(cands):
        rows = []
        for k in shells:
            jl, jr = left - (k - 1), right + (k - 1)
            if jl < 0 or jr >= len(x):
                continue
            d = 0.5 * ((pos - x[jl]) + (x[jr] - pos))
            rows.append((int(k), float(d), float(Q[jl]), float(Q[jr])))
        if len(rows) >= 2:
            d = np.array([r[1] for r in rows])
            q = np.array([0.5 * (r[2] + r[3]) for r in rows])
            A = np.column_stack([np.ones_like(d), 1 / d**2])
            (c0, c2), *_ = np.linalg.lstsq(A, q, rcond=None)
            spread = (q.max() - q.min()) / max(abs(q).max(), 1e-300)
            if spread < 1e-4:
                kind = "constant"
            elif abs(q[0]) > abs(q[-1]) and np.all(np.diff(np.abs(q)) < 0):
                kind = "divergent"
            else:
                kind = "other"
        else:
            c0, c2, kind = float("nan"), float("nan"), "unresolved"
        reports.append(NodeReport(float(pos), int(left), tuple(rows), float(c0), float(c2), kind))
    return NodeDiagnostics(tuple(reports), eps)


__all__ = [
    "PropagationConfig",
    "Timeseries",
    "PropagationError",
    "NodeFormationError",
    "TimeSpacingError",
    "propagate_schrodinger",
    "propagate_classical_nonlinear",
    "time_reversal_error",
    "madelung_residuals",
    "residual_scan",
    "ResidualScan",
    "MadelungResiduals",
    "integrate_bohm_trajectories",
    "TrajectoryEnsemble",
    "sample_seeds",
    "wasserstein_to_density",
    "interior_nodes",
    "node_diagnostics",
    "NodeDiagnostics",
    "sign_change_mask",
]
