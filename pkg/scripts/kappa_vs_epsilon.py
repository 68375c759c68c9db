"""How the sampled kappa of the cubic example at 0 depends on the ball radius.

The infimum of e/|A - a+| over a level-L ball tends to the smallest
linearized ratio (4, from mode 1) as the radius shrinks; the cubic term
pulls it down on larger balls.  Measured at level 0, a ball of radius
1e-2 already contains the critical points -2/(3 n^2) e_n of high modes,
so the ratio collapses there; higher levels keep those points outside.
"""

import numpy as np

from scflow.analysis import estimate_kappa
from scflow.functionals import CubicExample, cubic_critical_point

N = 32
F = CubicExample(N)
crit = cubic_critical_point([], N)
print(f"{'epsilon':>10} {'level':>6} {'raw inf':>12} {'kappa':>12}")
for level in (0, 4, 10):
    for eps in np.logspace(-1, -5, 5):
        est = estimate_kappa(F, crit, epsilon=eps, level=level)
        print(f"{eps:>10.0e} {level:>6d} {est.raw_infimum:>12.8f} {est.kappa:>12.8f}")
