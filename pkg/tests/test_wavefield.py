import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qphase.fields import WaveField
from qphase.grid import Grid, PhysicsParams
from qphase.states import StateSpec, default_grid, realize
from qphase.wavefield import (
    UnderResolvedWarning,
    bohm_momentum_field,
    core_mask,
    covariance_matrix,
    current_divergence,
    current_divergence_expanded,
    density,
    node_mask,
    polar_decompose,
    probability_current,
    quantum_force,
    quantum_potential,
)

LINE = Grid((128,), (-10.0,), (10.0,))


def smooth_state(coeffs, phase_coeffs):
    x = LINE.axes[0]
    amp = np.exp(-(x**2) / 4) * (1.5 + np.tanh(sum(c * x**k for k, c in enumerate(coeffs, 1)) / 10))
    phase = sum(c * np.sin((k + 1) * x / 3) for k, c in enumerate(phase_coeffs))
    return WaveField(LINE, amp * np.exp(1j * phase), PhysicsParams()).normalize()


coeff = st.floats(-1, 1, allow_nan=False)


@given(st.lists(coeff, min_size=1, max_size=3), st.lists(coeff, min_size=1, max_size=3))
def test_polar_form_reconstructs_state(c, p):
    wf = smooth_state(c, p)
    pol = polar_decompose(wf)
    assert np.all(pol.R >= 0)
    keep = ~pol.node_mask
    err = np.abs(pol.reconstruct()[keep] - wf.psi[keep]) / np.abs(wf.psi).max()
    assert err.max() < 1e-10


@given(st.floats(-10, 10), st.lists(coeff, min_size=1, max_size=3))
def test_bohm_momentum_is_gauge_invariant(c, p):
    wf = smooth_state([0.3], p)
    shifted = wf.replace(wf.psi * np.exp(1j * c))
    sel = core_mask(wf)
    a = bohm_momentum_field(wf).filled()[:, sel]
    b = bohm_momentum_field(shifted).filled()[:, sel]
    np.testing.assert_allclose(a, b, atol=1e-10)


@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_quantum_potential_scale_covariant(lam):
    wf = smooth_state([0.2, -0.4], [0.5])
    q1 = quantum_potential(wf).filled()
    q2 = quantum_potential(WaveField(LINE, lam * wf.psi, wf.params)).filled()
    sel = core_mask(wf)
    assert np.max(np.abs(q1[sel] - q2[sel])) < 1e-12 * max(1.0, np.max(np.abs(q1[sel])))


def test_coherent_polar_form(coherent):
    pol = polar_decompose(coherent)
    r2 = coherent.grid.radius_squared()
    R = np.exp(-r2 / 2)
    R /= math.sqrt(coherent.grid.integrate(R**2))
    np.testing.assert_allclose(pol.R, R, atol=1e-14)
    assert np.max(np.abs(pol.S[~pol.node_mask])) < 1e-12


def test_plane_phase_state_has_linear_phase():
    g = Grid((64,), (0.0,), (2 * np.pi,))
    x = g.axes[0]
    p0 = 3.0
    pol = polar_decompose(WaveField(g, np.exp(1j * p0 * x), PhysicsParams()).normalize())
    np.testing.assert_allclose(np.exp(1j * pol.S), np.exp(1j * p0 * x), atol=1e-12)


def test_well_node_encoded_as_phase_jump(well2):
    pol = polar_decompose(well2)
    x = well2.grid.axes[0]
    assert pol.node_mask[0] and pol.node_mask[-1]
    left, right = pol.S[(x > 0.1) & (x < 0.45)], pol.S[(x > 0.55) & (x < 0.9)]
    assert abs(abs(left.mean() - right.mean()) - np.pi) < 1e-12
    np.testing.assert_allclose(pol.R, np.abs(well2.psi))
    s = pol.S[~pol.node_mask]
    assert np.all(np.isclose(s, 0.0) | np.isclose(np.abs(s), np.pi))


def test_density_examples():
    g = Grid((256,), (-8.0,), (8.0,))
    wf = realize(StateSpec("gaussian_packet", sigma=1.0), g)
    assert g.integrate(density(wf).values) == pytest.approx(1.0, abs=1e-10)
    gc = Grid.cube(16, -4.0, 4.0, 3)
    raw = WaveField(gc, np.exp(-gc.radius_squared() / 2).astype(complex), PhysicsParams())
    rho = density(raw).values
    i0, i1 = (8, 8, 8), (10, 9, 8)
    r2 = gc.radius_squared()[i1]
    assert rho[i0] / rho[i1] == pytest.approx(np.exp(r2), rel=1e-12)
    spec = StateSpec("well1d", n=1, L=2.0)
    w = realize(spec, default_grid(spec))
    assert density(w).values[128] == pytest.approx(2 / 2.0, rel=1e-4)  # grid point nearest L/2


def test_real_state_has_no_momentum_or_current(coherent):
    sel = core_mask(coherent)
    assert np.max(np.abs(bohm_momentum_field(coherent).filled()[:, sel])) < 1e-12
    assert np.max(np.abs(probability_current(coherent).filled())) < 1e-14


def test_plane_modulated_momentum_and_current():
    spec = StateSpec("plane_modulated", p0=1.5, sigma=1.0)
    wf = realize(spec, default_grid(spec))
    gradS = bohm_momentum_field(wf)
    sel = core_mask(wf)
    assert np.max(np.abs(gradS.filled()[0][sel] - 1.5)) < 1e-8
    j = probability_current(wf).filled()[0]
    rho = density(wf).values
    assert np.max(np.abs(j - rho * 1.5)) < 1e-8
    np.testing.assert_allclose(j, rho * gradS.filled()[0] / wf.params.mass, atol=1e-12)


def test_well_momentum_masked_at_node(well2):
    f = bohm_momentum_field(well2)
    assert f.mask[0] and f.mask[-1]
    assert np.all(np.isfinite(f.values[:, ~f.mask]))


def test_current_divergence_two_ways_agree():
    spec = StateSpec("gaussian_packet", x0=[0.5, -0.3], p0=[1.0, 0.5], sigma=1.0)
    wf = realize(spec, default_grid(spec, dim=2))
    assert np.max(np.abs(current_divergence(wf) - current_divergence_expanded(wf))) < 1e-8


def test_oscillator_quantum_potential(coherent):
    Q = quantum_potential(coherent)
    exact = 1.5 - 0.5 * coherent.grid.radius_squared()
    sel = core_mask(coherent) & ~Q.mask
    assert np.max(np.abs(Q.values[sel] - exact[sel])) < 1e-6
    assert Q.values[32, 32, 32] == pytest.approx(1.5, abs=1e-8)


def test_quantum_potential_converges_spectrally():
    spec = StateSpec("coherent3d")
    errs = []
    for n in (8, 16, 32):
        wf = realize(spec, default_grid(spec, n=n))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnderResolvedWarning)
            Q = quantum_potential(wf)
        sel = core_mask(wf) & ~Q.mask
        errs.append(np.max(np.abs(Q.values[sel] - (1.5 - 0.5 * wf.grid.radius_squared()[sel]))))
    assert errs[0] / errs[1] >= 4 and errs[1] / errs[2] >= 4


def test_well_quantum_potential_is_constant():
    for n in (1, 2, 3):
        spec = StateSpec("well1d", n=n)
        wf = realize(spec, default_grid(spec))
        Q = quantum_potential(wf)
        sel = core_mask(wf, margin=3) & ~Q.mask
        E = n**2 * np.pi**2 / 2
        assert np.max(np.abs(Q.values[sel] - E)) / E < 1e-6


def test_plane_wave_has_zero_quantum_potential():
    g = Grid((32, 32), (0.0, 0.0), (1.0, 1.0))
    X, _ = g.mesh()
    wf = WaveField(g, np.exp(2j * np.pi * 3 * X), PhysicsParams()).normalize()
    assert np.max(np.abs(quantum_potential(wf).filled())) < 1e-10


def test_under_resolved_state_warns():
    g = Grid((16,), (-1.0,), (1.0,))
    x = g.axes[0]
    with pytest.warns(UnderResolvedWarning):
        quantum_potential(WaveField(g, np.exp(-(x**2) / 0.01) + 0j, PhysicsParams()).normalize())


def test_quantum_force_oscillator(coherent):
    F = quantum_force(quantum_potential(coherent))
    r = np.stack(coherent.grid.mesh())
    sel = core_mask(coherent) & ~F.mask
    assert np.max(np.abs(F.filled()[:, sel] - r[:, sel])) < 1e-6


def test_quantum_force_vanishes_for_well():
    spec = StateSpec("well1d", n=1)
    wf = realize(spec, default_grid(spec))
    F = quantum_force(quantum_potential(wf))
    sel = core_mask(wf, margin=3) & ~F.mask
    assert np.max(np.abs(F.filled()[0][sel])) < 1e-6


def test_covariance_coherent(coherent):
    cov = covariance_matrix(coherent)
    np.testing.assert_allclose(cov.sigma, 0.5 * np.eye(6), atol=1e-12)
    np.testing.assert_allclose(cov.mean, 0.0, atol=1e-12)


def test_covariance_translation_invariant():
    base = StateSpec("gaussian_packet", sigma=0.8)
    moved = StateSpec("gaussian_packet", sigma=0.8, x0=1.5, p0=-2.0)
    a = covariance_matrix(realize(base, default_grid(base, n=256)))
    b = covariance_matrix(realize(moved, default_grid(moved, n=256)))
    np.testing.assert_allclose(a.sigma, b.sigma, atol=1e-10)
    np.testing.assert_allclose(b.mean, [1.5, -2.0], atol=1e-10)
    assert a.sigma[0, 0] == pytest.approx(0.64, abs=1e-10)
    assert abs(a.sigma[0, 1]) < 1e-10


def test_covariance_well_ground_state():
    L = 1.0
    spec = StateSpec("well1d", n=1, L=L)
    cov = covariance_matrix(realize(spec, default_grid(spec, n=1024)))
    assert cov.sigma[0, 0] == pytest.approx(L**2 * (1 / 12 - 1 / (2 * np.pi**2)), rel=1e-5)
    assert cov.sigma[1, 1] == pytest.approx(np.pi**2 / L**2, rel=1e-5)


def test_node_mask_threshold(well2):
    mask = node_mask(well2)
    assert mask[0] and mask[-1]
    assert mask.sum() <= 3
