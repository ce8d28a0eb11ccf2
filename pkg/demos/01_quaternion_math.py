"""Quaternion primitives: products, rotations, the log/exp pair and G(z).

Run: python demos/01_quaternion_math.py
"""

import math

import numpy as np

from attitrack.attmath import gmat, jmat, quat_exp, quat_log, quat_mul, rotation_of

# A half-turn about x followed by a quarter-turn about z.
qx = np.array([math.cos(math.pi / 2), math.sin(math.pi / 2), 0.0, 0.0])
qz = np.array([math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)])
q = quat_mul(qx, qz)
print("q = qx * qz          ", np.round(q, 6))
print("R(q) == R(qx) R(qz)  ", np.allclose(rotation_of(q), rotation_of(qx) @ rotation_of(qz)))
print("R(q) == R(-q)        ", np.allclose(rotation_of(q), rotation_of(-q)))

# The logarithm is a rotation vector scaled by one half; exp inverts it.
e = np.array([math.cos(0.4), *(math.sin(0.4) * np.array([0.0, 0.6, 0.8]))])
z = quat_log(e)
print("log(e)               ", np.round(z, 6), " |z| =", round(float(np.linalg.norm(z)), 6))
print("exp(log(e)) == e     ", np.allclose(quat_exp(z), e))

# J(x) maps body rates into quaternion rates; J^T J = |x|^2 I.
x = np.array([0.3, -1.2, 0.5, 2.0])
print("J^T J == |x|^2 I     ", np.allclose(jmat(x).T @ jmat(x), (x @ x) * np.eye(3)))

# G(z) maps rates into log-coordinate rates and leaves z itself fixed.
print("G(z) z == z          ", np.allclose(gmat(z) @ z, z))
