"""Bohm trajectories of a freely spreading packet follow |psi|^2.

Tracers start from |psi(0)|^2 and are advanced with RK4 through the velocity
field grad S / m.  Their final positions are compared with |psi(t)|^2 by the
1-Wasserstein distance, next to the distance of a fresh direct sample.
"""

import numpy as np

from qphase import (
    Potential,
    PropagationConfig,
    StateSpec,
    default_grid,
    integrate_bohm_trajectories,
    propagate_schrodinger,
    realize,
    sample_seeds,
    wasserstein_to_density,
)

rng = np.random.default_rng(2)
spec = StateSpec("gaussian_packet", p0=0.5, sigma=1.0)
wf = realize(spec, default_grid(spec, n=256))
ts = propagate_schrodinger(wf, PropagationConfig(1e-2, 200, Potential("free"), 5))
ens = integrate_bohm_trajectories(ts, sample_seeds(wf, 5000, rng))

end = ts.frames[-1]
print(f"t = {ts.times[-1]:.1f}, tracers ok: {ens.status.count('ok')} / {len(ens.status)}")
print(f"W1(tracers, |psi|^2)       = {wasserstein_to_density(ens.positions[:, -1, 0], end):.4f}")
print(f"W1(direct sample, |psi|^2) = {wasserstein_to_density(sample_seeds(end, 5000, rng)[:, 0], end):.4f}")
print(f"centre tracer: x(0) = 0 -> x(t) = {integrate_bohm_trajectories(ts, [[0.0]]).positions[0, -1, 0]:.6f} (p0 t = 1.0)")
