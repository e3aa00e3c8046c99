"""
Double descent in ridge regression, and how to remove it
=========================================================

Two features: a strong, high-variance one (theta = 1.5, sigma = 1) and a
weak-looking, low-variance one (theta = 10, sigma = 0.15).  Each contributes
a U-shaped bias/variance tradeoff V_i(lambda), with its minimum at
lambda_i = (noise^2 / n) / theta_i^2.  The two minima sit far apart, so a
single uniform lambda traces two dips.
"""

import numpy as np

from ddlab.model_core import figure2_model
from ddlab.ridge import optimal_lambdas, optimal_risk
from ddlab.sweep import figure2_curves, inverse_lambda_grid

model = figure2_model(noise_std=15.0)
n = 100
grid = inverse_lambda_grid(1e-2, 1e4, 100)

out = figure2_curves(model, n, grid)
uni, ali = out["uniform"], out["aligned"]

# where each feature wants its penalty
print("optimal per-feature lambdas:", optimal_lambdas(model, n))

# the uniform curve has two interior minima
for i, v in out["uniform_report"].interior_minima:
    print(f"uniform minimum at 1/lambda = {grid[i]:8.3f}, risk = {v:.4f}")

# scaling each penalty by (theta_1 / theta_i)^2 lines the minima up
for i, v in out["aligned_report"].interior_minima:
    print(f"aligned minimum at 1/lambda = {grid[i]:8.3f}, risk = {v:.4f}")

print("grid-min uniform:", uni.grid_min()[1])
print("grid-min aligned:", ali.grid_min()[1])
print("closed-form optimum:", optimal_risk(model, n))

# a coarse text plot of the two curves
for k in range(0, grid.size, 25):
    bar_u = int((uni.total[k] - 227) * 20)
    bar_a = int((ali.total[k] - 227) * 20)
    print(f"{grid[k]:10.3g}  U {'#' * bar_u}")
    print(f"{'':10}  A {'*' * bar_a}")

# with little noise (sigma = 1) no tradeoff has a visible U and the curve
# just goes down
low = figure2_curves(figure2_model(1.0), n, grid)
print("sigma = 1 descents:", low["uniform_report"].descent_count,
      "interior minima:", len(low["uniform_report"].interior_minima))
