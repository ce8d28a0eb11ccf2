"""Gyro measurement model: bias, bounded random noise and a bias random walk.

    omega_g = omega + b + r_g,    db/dt = r_b
    r_g = m1 * nu / |nu|,         r_b = m2 * nu' / |nu'|

with nu, nu' per-axis Gaussian (variance 0.5) and m1, m2 redrawn uniformly
on [0, m1_max] and [0, m2_max] at every call. Random numbers come from
numpy's counter-based Philox bit generator keyed by ``seed``; identical
seeds give bit-identical streams.
"""

from __future__ import annotations

import math

import numpy as np

NOISE_VARIANCE = 0.5
_BLOCK = 4096


def unit_direction(nu):
    n = math.sqrt(nu @ nu)
    if n == 0.0:
        return np.zeros(3)
    return nu / n


class GyroModel:
    def __init__(self, bias, m1_max=0.0, m2_max=0.0, seed=0):
        if m1_max < 0 or m2_max < 0:
            raise ValueError("noise caps must be non-negative")
        self.b = np.array(bias, dtype=float)
        self.m1_max = float(m1_max)
        self.m2_max = float(m2_max)
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.Philox(self.seed))
        self._normals = np.empty((0, 6))
        self._uniforms = np.empty((0, 2))
        self._k = 0
        self.last_r_g = np.zeros(3)
        self.last_r_b = np.zeros(3)

    @property
    def noisy(self):
        return self.m1_max > 0.0 or self.m2_max > 0.0

    def _draw(self):
        if self._k >= len(self._normals):
            self._normals = self._rng.normal(0.0, np.sqrt(NOISE_VARIANCE), size=(_BLOCK, 6))
            self._uniforms = self._rng.uniform(0.0, 1.0, size=(_BLOCK, 2))
            self._k = 0
        nu, u = self._normals[self._k], self._uniforms[self._k]
        self._k += 1
        return nu, u

    def measure(self, omega, dt):
        """Return omega_g for the current instant, then advance the bias by dt."""
        if not dt > 0:
            raise ValueError("dt must be positive")
        omega = np.asarray(omega, dtype=float)
        if not self.noisy:
            return omega + self.b
        nu, u = self._draw()
        r_g = (u[0] * self.m1_max) * unit_direction(nu[:3])
        r_b = (u[1] * self.m2_max) * unit_direction(nu[3:])
        omega_g = omega + self.b + r_g
        self.b = self.b + r_b * dt
        self.last_r_g, self.last_r_b = r_g, r_b
        return omega_g
