"""
Parameter drift of a linearized network
=======================================

For f = J theta, gradient descent with weight decay moves the parameters in
the row space of J (signal) and, through the penalty alone, shrinks the
orthogonal complement.  Both parts of ||theta_t - theta_0||^2 have closed
forms.  We compare them with a simulation, then ask whether the two-layer
network at initialization is in the regime sigma_min^2 >> lambda where the
linear picture applies.
"""

import numpy as np

from ddlab.early_stop import gd_fit
from ddlab.model_core import Dataset, geometric_model, sample_dataset
from ddlab.ntk import (
    complement_drift_prediction, decompose, drift_split, first_step_gradient_histogram,
    network_jacobian, ntk_regime_check, signal_drift_prediction,
)
from ddlab.two_layer import init_kaiming

rng = np.random.default_rng(0)
J = rng.standard_normal((8, 64))
y = rng.standard_normal(8)
theta0 = rng.standard_normal(64)
dec = decompose(J)

eta, lam = 0.01, 0.1
traj = gd_fit(Dataset(J, y), eta, lam, 100, init=theta0)
for t in [1, 10, 100]:
    s, c = drift_split(dec, traj.iterates[t], theta0)
    print(f"t={t:3}  signal {s:.10f} vs {signal_drift_prediction(dec, theta0, y, eta, lam, t):.10f}"
          f"   complement {c:.10f} vs {complement_drift_prediction(dec, theta0, eta, lam, t):.10f}")

# the two-layer network at initialization
model = geometric_model()
data = sample_dataset(model, 128, 0)
net = init_kaiming(16, 64, 1)
jdec = decompose(network_jacobian(net, data.design))
print("sigma_min^2 of the network Jacobian:", jdec.sigma_min ** 2)
for lam in [1e-4, 1e-3, 1e-2, 1e-1]:
    print(ntk_regime_check(jdec, lam))

edges, counts = first_step_gradient_histogram(net, data, 1e-2, bins=15)
for lo, c in zip(edges, counts):
    print(f"{lo:+.4f} {'#' * (c // 4)}")
