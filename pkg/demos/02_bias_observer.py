"""Gyro-bias observer on its own: exact exponential decay, then the real filter.

With the filter quaternion slaved to the attitude the estimation error
decays exactly as exp(-t/2) for unit gain. With the first-order filter
running the decay is no longer exact but remains exponential.

Run: python demos/02_bias_observer.py
"""

import math

import numpy as np

from attitrack.estimation import ObserverGains, simulate_observer

u = np.array([1.0, 2.0, 3.0]) / math.sqrt(14.0)
q0 = np.array([-0.2, *(math.sqrt(0.96) * u)])
bias = np.array([0.05, -0.05, 0.033])
omega = lambda t: np.array([0.3 * math.sin(t), 0.11, 0.2 * math.cos(0.5 * t)])
gains = ObserverGains(1.0, 0.5)

ideal = simulate_observer(q0, omega, bias, gains, 10.0, 0.001, ideal_filter=True)
ratio = ideal.error_norm / (ideal.error_norm[0] * np.exp(-ideal.t / 2))
print(f"slaved filter: max |measured / exp(-t/2) - 1| = {np.max(np.abs(ratio - 1)):.2e}")

real = simulate_observer(q0, omega, bias, gains, 30.0, 0.001)
for t in (0, 5, 10, 20, 30):
    i = int(round(t / 0.001))
    print(f"  t = {t:4.1f} s  |b - b_hat| = {real.error_norm[i]:.3e}  |q - q_f| = {real.filter_gap[i]:.3e}")
