"""Equivariance in a few seconds: 2e4 samples over half an oscillator period."""

import numpy as np
from scipy import stats

from dwkpilot import guiding as gd
from dwkpilot import quantum as qm

omega, lam, q0 = 1.0, 0.1, 1.0
q = np.arange(-4, 4 + 0.005, 0.01)
prof = qm.crank_nicolson_evolve(qm.analytic_gaussian_psi(0, q, omega, q0, lam), qm.Potential.harmonic(omega),
                                lam, np.linspace(0, np.pi, 1572), q, store_every=10, substeps=2)
exact = lambda s, x: stats.norm.cdf(x, q0 * np.cos(omega * s), np.sqrt(lam / (2 * omega)))  # noqa: E731
res = gd.monte_carlo_equivariance(prof, 20000, 42, [np.pi / 4, np.pi / 2, np.pi], workers=4, exact_cdf=exact)
for s, k, ke in zip(res.sigma_check, res.ks, res.ks_exact):
    print(f"sigma = {s:.4f}: KS to evolved g {k:.4f}, to exact Gaussian {ke:.4f}")
print("99% DKW band for this N:", np.sqrt(np.log(2 / 0.01) / (2 * 20000)))
