"""
Where the per-feature tradeoffs bottom out
==========================================

The grid argmin of V_i(lambda) should land within one grid step of
(noise^2 / n) / theta_i^2, and the ratio of the two locations is
(theta_1 / theta_2)^2 no matter what noise level or sample size is used.
"""

import numpy as np

from ddlab.model_core import figure2_model
from ddlab.sweep import minima_locations

for sigma, n in [(0.5, 100), (1.0, 100), (1.0, 1000), (15.0, 100)]:
    locs = minima_locations(figure2_model(sigma), n)
    ratio = locs[1].grid_lambda / locs[0].grid_lambda
    print(f"sigma={sigma:5}, n={n:5}:",
          ", ".join(f"V{l.feature + 1}: {l.grid_lambda:.3e} ({l.steps_off:.2f} steps off)" for l in locs),
          f"ratio={ratio:.5f}")

print("expected ratio (1.5 / 10)^2 =", (1.5 / 10) ** 2)
