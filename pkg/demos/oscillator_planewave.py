"""Quantum plane wave for the harmonic oscillator next to its classical counterpart.

The Gaussian profile keeps its width sqrt(lam / 2 omega) while its centre
follows q0 cos(omega sigma).  The guided beable tracks the same curve, and the
classical oscillator solution gives it too as long as no caustic is reached.
"""

import numpy as np

from dwkpilot import classical as cl
from dwkpilot import guiding as gd
from dwkpilot import quantum as qm

omega, lam, q0 = 1.0, 0.1, 1.0
q = np.arange(-5, 6 + 0.005, 0.01)
sigma = np.linspace(0, np.pi, 3142)
prof = qm.crank_nicolson_evolve(qm.analytic_gaussian_psi(0, q, omega, q0, lam), qm.Potential.harmonic(omega),
                                lam, sigma, q, store_every=10, substeps=4)
mean, var = prof.moments()
print(" sigma    <q>       q0 cos   std/exact")
for s, m, v in list(zip(prof.sigma_grid, mean, var))[::20]:
    print(f"{s:6.3f}  {m:+.5f}  {q0 * np.cos(omega * s):+.5f}  {np.sqrt(v / (lam / 2 / omega)):.6f}")

vel = gd.ProfileVelocity(prof)
_, path = gd.planewave_guiding(vel, np.array([q0, q0 + 0.2]), np.pi, 2000)
print("beables at sigma = pi:", path[-1], "expected", [-q0, -q0 + 0.2])

p = cl.HarmonicParams(omega, q0)
S = cl.SVectorField.named("oscillator", omega=omega, q0=q0)
cpath = cl.classical_guiding_integrate(S, [0, 0, 0, 0], [q0], [1, 0, 0, 0], 1.4, 1400)
print("classical RK4 vs closed form, max error:", np.max(np.abs(cpath.phi[:, 0] - cl.classical_beable(cpath.s, p))))
try:
    cl.oscillator_f(np.pi / 2, 0.3, p)
except cl.CausticError as exc:
    print("classical solution stops at the caustic:", exc)
