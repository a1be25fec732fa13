import math
import warnings

import numpy as np
import pytest

from qphase.fermi import (
    MaskedPointError,
    NoClosedFormError,
    PreconditionError,
    build_fermi_hamiltonian,
    energy_decomposition,
    eval_fermi,
    fermi_operator_residual,
    fermi_set_quadratic,
    fermi_volume_mc,
    force_balance_field,
    sample_fermi_surface,
    stationary_identity_check,
)
from qphase.grid import PhysicsParams
from qphase.states import Potential, StateSpec, default_grid, exact_energy, exact_potential, realize
from qphase.wavefield import UnderResolvedWarning, core_mask


@pytest.fixture(scope="module")
def coherent_fh(coherent):
    return build_fermi_hamiltonian(coherent)


def test_eval_fermi_coherent_examples(coherent_fh):
    assert eval_fermi(coherent_fh, [0, 0, 0], [0, 0, 0]) == pytest.approx(-1.5, abs=1e-8)
    assert eval_fermi(coherent_fh, [0, 0, 0], [1, 1, 1]) == pytest.approx(0.0, abs=1e-8)
    assert eval_fermi(coherent_fh, [1.0, 0.5, -0.5], [0, 0, 0]) == pytest.approx(-1.5 + 0.75, abs=1e-7)


def test_eval_fermi_matches_closed_form_ellipsoid(coherent_fh, rng):
    r = rng.uniform(-1.5, 1.5, size=(1000, 3))
    p = rng.normal(size=(1000, 3))
    H = eval_fermi(coherent_fh, r, p)
    exact = 0.5 * np.sum(p**2, axis=1) + 0.5 * np.sum(r**2, axis=1) - 1.5
    assert np.max(np.abs(H - exact)) < 1e-6
    form = fermi_set_quadratic(StateSpec("coherent3d")).form
    z = np.hstack([r, p])
    quad = 0.5 * np.einsum("ij,jk,ik->i", z, form.A, z) - form.E
    near = np.abs(quad) < 1e-6
    assert np.array_equal((H <= 0)[~near], (quad <= 0)[~near])


def test_eval_fermi_rejects_masked_point(well2):
    fh = build_fermi_hamiltonian(well2)
    with pytest.raises(MaskedPointError):
        eval_fermi(fh, [0.0], [0.0])


def test_fermi_operator_annihilates_states():
    for spec, n in [
        (StateSpec("coherent3d"), 32),
        (StateSpec("gaussian_packet", x0=0.5, p0=1.0, sigma=1.0), 64),
        (StateSpec("plane_modulated", p0=2.0, sigma=1.0), 96),
    ]:
        wf = realize(spec, default_grid(spec, n=n))
        assert fermi_operator_residual(wf) < 1e-6, spec.kind


def test_fermi_operator_residual_converges_for_complex_state():
    spec = StateSpec("gaussian_packet", x0=0.5, p0=1.0, sigma=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnderResolvedWarning)
        coarse, fine = (fermi_operator_residual(realize(spec, default_grid(spec, n=n))) for n in (16, 32))
    assert coarse / fine >= 4


def test_fermi_operator_annihilates_arbitrary_smooth_phase():
    spec = StateSpec("gaussian_packet", sigma=1.0)
    g = default_grid(spec, dim=2, n=64)
    X, Y = g.mesh()
    base = realize(spec, g)
    wf = base.replace(base.psi * np.exp(0.3j * np.sin(X) * np.cos(0.5 * Y) + 0.1j * X * Y))
    assert fermi_operator_residual(wf) < 1e-6


def test_stationary_identity_for_eigenstates(coherent, well2):
    assert stationary_identity_check(coherent, Potential("harmonic"), 1.5) < 1e-6
    spec = StateSpec("well1d", n=2)
    assert stationary_identity_check(well2, exact_potential(spec), exact_energy(spec)) < 1e-6


def test_stationary_identity_requires_real_state():
    spec = StateSpec("gaussian_packet", p0=1.0)
    wf = realize(spec, default_grid(spec))
    with pytest.raises(PreconditionError):
        stationary_identity_check(wf, Potential("free"), 0.5)
    with pytest.raises(PreconditionError):
        force_balance_field(wf, Potential("free"))


def test_energy_decomposition_coherent(coherent):
    dec = energy_decomposition(coherent, Potential("harmonic"))
    sel = core_mask(coherent) & ~dec.total.mask
    assert np.max(np.abs(dec.kinetic.values[sel])) < 1e-12
    assert np.max(np.abs(dec.total.values[sel] - 1.5)) < 1e-6


def test_energy_decomposition_broad_plane_modulated():
    spec = StateSpec("plane_modulated", p0=2.0, sigma=4.0)
    wf = realize(spec, default_grid(spec, n=256))
    dec = energy_decomposition(wf, Potential("free"))
    sel = core_mask(wf)
    assert np.max(np.abs(dec.kinetic.values[sel] - 2.0)) < 1e-8
    # Q of a Gaussian envelope is hbar^2/(4 m sigma^2) at its centre
    centre = np.argmin(np.abs(wf.grid.axes[0]))
    assert dec.quantum.values[centre] == pytest.approx(1 / (4 * 16.0), rel=1e-6)


def test_force_balance_vanishes_for_eigenstates(coherent):
    F = force_balance_field(coherent, Potential("harmonic"))
    sel = core_mask(coherent) & ~F.mask
    assert np.max(np.abs(F.filled()[:, sel])) < 1e-5
    spec = StateSpec("well1d", n=3)
    wf = realize(spec, default_grid(spec))
    Fw = force_balance_field(wf, exact_potential(spec))
    selw = core_mask(wf, margin=3) & ~Fw.mask
    assert np.max(np.abs(Fw.filled()[0][selw])) < 1e-3


def test_force_balance_nonzero_off_eigenstate():
    spec = StateSpec("gaussian_packet", sigma=0.5)
    wf = realize(spec, default_grid(spec))
    F = force_balance_field(wf, Potential("harmonic"))
    assert np.max(np.abs(F.filled()[0][core_mask(wf)])) > 0.1


def test_fermi_set_quadratic_examples():
    spec = StateSpec("oscillator1d", n=0, omega=3.0, params=PhysicsParams(mass=2.0))
    fs = fermi_set_quadratic(spec)
    np.testing.assert_allclose(fs.form.A, np.diag([18.0, 0.5]))
    assert fs.form.E == pytest.approx(1.5)
    d = fs.to_dict()
    assert type(fs).from_dict(d).to_dict() == d
    with pytest.raises(NoClosedFormError):
        fermi_set_quadratic(StateSpec("oscillator1d", n=1))
    with pytest.raises(NoClosedFormError):
        fermi_set_quadratic(StateSpec("well1d", n=1))


def test_surface_samples_lie_on_zero_level(coherent_fh, rng):
    rows = sample_fermi_surface(coherent_fh, 500, rng)
    assert rows.shape[1] == 7 and len(rows) > 400
    assert np.max(np.abs(rows[:, -1])) < 1e-8
    r, p = rows[:, :3], rows[:, 3:6]
    exact = 0.5 * np.sum(p**2 + r**2, axis=1) - 1.5
    assert np.max(np.abs(exact)) < 1e-6


def test_fermi_volume_monte_carlo(coherent_fh, rng):
    vol, err = fermi_volume_mc(coherent_fh, 200_000, rng)
    assert abs(vol - 4.5 * math.pi**3) < 3 * err
