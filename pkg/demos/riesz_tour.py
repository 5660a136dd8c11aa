"""Riesz tensor of a B-valued wave function, its energy condition and the vectorfield X."""

import numpy as np

from dwkpilot import quantum as qm
from dwkpilot import riesz as rz
from dwkpilot.clifford import PolarData, b_from_polar

lam = 0.1
rng = np.random.default_rng(1)
p = PolarData(0.8, 0.13, np.array([np.cosh(0.5), np.sinh(0.5), 0, 0]))
t = rz.riesz_from_b(b_from_polar(p, lam))
print("T^{mu nu} from the Clifford trace:\n", np.round(t.t, 6))
print("same from the polar closed form:", np.allclose(t.t, rz.riesz_from_polar(p, lam).t))
print("T u - rho u:", np.abs(t.apply(p.u) - p.rho * p.u).max())
print("dominant energy condition:", rz.dec_check(t, trials=20000))

# a plane wave cut off in space has a finite X; without the cut-off it has none
q = np.arange(-4, 4 + 0.0125, 0.025)
field = qm.cutoff_planewave(qm.analytic_gaussian_psi(0, q, 1.0, 1.0, lam), qm.Potential.harmonic(1.0), lam, q, 3.0,
                            [0.0, 1.0])
for i in range(2):
    x = rz.xtilde_from_slice(field.time_slice(i))
    print(f"t = {field.axes[0][i]}: X-tilde = {np.round(x.x_tilde, 12)}, X-hat = {np.round(x.x_hat, 12)}")

xh = rz.random_unit_timelike(rng, 5)
print("varrho - rho for random observers:", rz.varrho_gap(PolarData(np.full(5, 0.8), np.full(5, 0.13),
                                                                    np.repeat(p.u[:, None], 5, 1)), lam, xh))
