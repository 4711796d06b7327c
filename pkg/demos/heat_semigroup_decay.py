"""
Linear decay on the whole space
===============================

The fractional heat flow of L1-type data loses L2 energy like t^(-3/(2 alpha)).
Data whose transform vanishes near the origin decays faster.
"""

import numpy as np

from gnsdecay import RadialInitialData, l2_sq_r3, semigroup_rate_fit

gauss = RadialInitialData.gaussian()
for t in (0.0, 1.0, 10.0, 100.0):
    print(f"t={t:6.1f}  quadrature={l2_sq_r3(gauss, 1.0, t):.12f}  exact={(np.pi / (1 + 2 * t)) ** 1.5:.12f}")

for alpha in (0.5, 0.75, 1.0, 1.25):
    rec = semigroup_rate_fit(gauss, alpha)
    print(f"alpha={alpha:4}  fitted slope {rec.fitted_exponent:+.4f}  predicted {rec.theory_exponent:+.4f}")

shell = semigroup_rate_fit(RadialInitialData.shell(), 1.0, window=(1.0, 100.0), samples=30)
print("shell data:", f"{shell.fitted_exponent:+.3f}", "flagged" if shell.flagged else "", shell.notes)
