"""
Energy bookkeeping on a Taylor-Green run
========================================

Integrate the damped system on a 16^3 box, then check that the discrete
energy balance closes at second order and that the w inequality holds.
"""

import numpy as np

from gnsdecay import GridSpec, PhysicalParams, SolverConfig, make_initial_data, simulate
from gnsdecay.ledger import u_energy_residual, w_inequality_check

params = PhysicalParams(alpha=1.0, beta=3.0, nu=1.0)
u0 = make_initial_data("taylor_green", GridSpec(16))

residuals = {}
for dt in (0.02, 0.01):
    rec = simulate(u0, SolverConfig(u0.grid, params, dt=dt, t_end=1.0, record_every=dt))
    residuals[dt] = np.max(np.abs(u_energy_residual(rec, params)))
    print(f"dt={dt}  ||u(1)||^2={rec.norm_series.l2_sq[-1]:.6f}  max residual={residuals[dt]:.3e}")
print("halving ratio:", residuals[0.02] / residuals[0.01])

ledger = w_inequality_check(rec, rec.u0, params, prefactor=4.0)
print("w inequality ok:", ledger.ok, " smallest prefactor needed:", ledger.min_prefactor)
