"""
Weight decay in a two-layer relu network
========================================

A relu network with 64 hidden units is trained to convergence on 128 samples
from a model with geometrically decaying feature scales, for a range of
weight-decay strengths.  The layer_scale argument penalizes the second layer
more than the first.  Full runs take a while; the settings below are reduced
(fewer seeds, a shorter iteration cap) so the script finishes in under a minute.
"""

import numpy as np

from ddlab.model_core import geometric_model
from ddlab.sweep import detect_descents, inverse_lambda_grid
from ddlab.two_layer import TrainConfig, default_checkpoints, nn_epoch_curve, nn_lambda_sweep

model = geometric_model(d=16, decay=0.5, noise_std=0.5)
print("null risk:", model.null_risk, " noise floor:", model.noise_std ** 2)

grid = inverse_lambda_grid(1.0, 1e4, 2)
cfg = TrainConfig(stepsize=5e-3, max_iterations=20_000)

for scale in [1.0, 5.0]:
    curve = nn_lambda_sweep(model, 128, 64, grid, scale, seeds=[0, 1], cfg=cfg,
                            test_samples=50_000)
    print(f"layer_scale={scale}")
    for g, r in zip(curve.axis, curve.total):
        print(f"  1/lambda={g:9.3g}  risk={r:.4f}")
    print("  ", detect_descents(curve))

# the unregularized network, scored along its trajectory
ep = nn_epoch_curve(model, 128, 64, seeds=[0, 1], cfg=cfg,
                    checkpoints=default_checkpoints(20_000, 4), test_samples=50_000)
for t, r in zip(ep.axis, ep.total):
    print(f"  t={int(t):6}  risk={r:.4f}")
