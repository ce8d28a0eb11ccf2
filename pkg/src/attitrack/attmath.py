"""Quaternion and small-matrix primitives.

Quaternions are stored scalar-first, ``q = [q0, q1, q2, q3]``, as plain
float arrays of shape (4,). Every function here is pure.
"""

from __future__ import annotations

import math

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
_EYE3 = np.eye(3)

SERIES_THRESHOLD = 1e-4
EPS_Z = 1e-6
UNIT_TOL = 1e-6


class SingularityError(ValueError):
    """Raised when the quaternion logarithm or G(z) is evaluated too close to e = -1."""


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite input")


def _check_unit(q, tol=UNIT_TOL):
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if abs(n - 1.0) > tol:
        raise ValueError(f"quaternion not unit (norm={n!r})")


def _vals(x):
    # python floats: scalar arithmetic on numpy scalars is several times slower
    return x.tolist() if type(x) is np.ndarray else x


def skew(u):
    """Cross-product matrix S(u), so that ``skew(u) @ v == np.cross(u, v)``."""
    u1, u2, u3 = _vals(u)
    return np.array([
        [0.0, -u3, u2],
        [u3, 0.0, -u1],
        [-u2, u1, 0.0],
    ])


def cross(u, v):
    """u x v for 3-vectors (np.cross carries heavy per-call overhead)."""
    u1, u2, u3 = _vals(u)
    v1, v2, v3 = _vals(v)
    return np.array([u2 * v3 - u3 * v2, u3 * v1 - u1 * v3, u1 * v2 - u2 * v1])


def normalize(q):
    q = np.asarray(q, dtype=float)
    return q / math.sqrt(q @ q)


def _mul(q, p):
    q0, q1, q2, q3 = _vals(q)
    p0, p1, p2, p3 = _vals(p)
    return np.array([
        q0 * p0 - q1 * p1 - q2 * p2 - q3 * p3,
        q0 * p1 + p0 * q1 + q2 * p3 - q3 * p2,
        q0 * p2 + p0 * q2 + q3 * p1 - q1 * p3,
        q0 * p3 + p0 * q3 + q1 * p2 - q2 * p1,
    ])


def _conj_mul(q, p):
    """q^-1 ⊗ p (unnormalized)."""
    q0, q1, q2, q3 = _vals(q)
    p0, p1, p2, p3 = _vals(p)
    return np.array([
        q0 * p0 + q1 * p1 + q2 * p2 + q3 * p3,
        q0 * p1 - p0 * q1 - q2 * p3 + q3 * p2,
        q0 * p2 - p0 * q2 - q3 * p1 + q1 * p3,
        q0 * p3 - p0 * q3 - q1 * p2 + q2 * p1,
    ])


def quat_mul(q, p):
    """Quaternion product q ⊗ p, renormalized to unit length."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_finite(q, p)
    _check_unit(q)
    _check_unit(p)
    return normalize(_mul(q, p))


def quat_conj(q):
    """Conjugate (inverse for unit q)."""
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def _rotation(q):
    q0, q1, q2, q3 = _vals(q)
    return np.array([
        [1.0 - 2.0 * (q2 * q2 + q3 * q3), 2.0 * (q1 * q2 - q0 * q3), 2.0 * (q1 * q3 + q0 * q2)],
        [2.0 * (q1 * q2 + q0 * q3), 1.0 - 2.0 * (q1 * q1 + q3 * q3), 2.0 * (q2 * q3 - q0 * q1)],
        [2.0 * (q1 * q3 - q0 * q2), 2.0 * (q2 * q3 + q0 * q1), 1.0 - 2.0 * (q1 * q1 + q2 * q2)],
    ])


def rotation_of(q):
    """Rotation matrix R(q) = I + 2 q0 S(qv) + 2 S(qv)^2 (body to inertial)."""
    q = np.asarray(q, dtype=float)
    _check_finite(q)
    _check_unit(q)
    return _rotation(q)


def jmat(x):
    """The 4x3 matrix J(x) = [-xv^T; x0 I + S(xv)] for any x in R^4."""
    x0, x1, x2, x3 = _vals(x)
    return np.array([
        [-x1, -x2, -x3],
        [x0, -x3, x2],
        [x3, x0, -x1],
        [-x2, x1, x0],
    ])


def jvmat(x):
    """Lower 3x3 block of J(x): x0 I + S(xv)."""
    x0, x1, x2, x3 = _vals(x)
    return np.array([
        [x0, -x3, x2],
        [x3, x0, -x1],
        [-x2, x1, x0],
    ])


def jmul(x, w):
    """J(x) w without forming J(x)."""
    x0, x1, x2, x3 = _vals(x)
    w1, w2, w3 = _vals(w)
    return np.array([
        -x1 * w1 - x2 * w2 - x3 * w3,
        x0 * w1 - x3 * w2 + x2 * w3,
        x3 * w1 + x0 * w2 - x1 * w3,
        -x2 * w1 + x1 * w2 + x0 * w3,
    ])


def jtmul(x, y):
    """J(x)^T y without forming J(x)."""
    x0, x1, x2, x3 = _vals(x)
    y0, y1, y2, y3 = _vals(y)
    return np.array([
        -x1 * y0 + x0 * y1 + x3 * y2 - x2 * y3,
        -x2 * y0 - x3 * y1 + x0 * y2 + x1 * y3,
        -x3 * y0 + x2 * y1 - x1 * y2 + x0 * y3,
    ])


def _log(e, eps=EPS_Z):
    e0, e1, e2, e3 = _vals(e)
    if e0 <= -1.0 + eps:
        raise SingularityError(f"quaternion log undefined near e0 = -1 (e0={e0!r})")
    nv = math.sqrt(e1 * e1 + e2 * e2 + e3 * e3)
    if nv < SERIES_THRESHOLD:
        # arcsin(s)/s; e0 > 0 is implied by the guard above
        k = 1.0 + nv * nv / 6.0
    else:
        # atan2 equals arccos(e0) for unit e and stays accurate near e0 = +-1
        k = math.atan2(nv, e0) / nv
    return np.array([k * e1, k * e2, k * e3])


def quat_log(e, eps=EPS_Z):
    """Quaternion logarithm z = arccos(e0) ev/|ev|, with |z| in [0, pi).

    No sign flip is applied: e and -e give different logarithms. Raises
    :class:`SingularityError` when ``e0 <= -1 + eps``.
    """
    e = np.asarray(e, dtype=float)
    _check_finite(e)
    _check_unit(e)
    return _log(normalize(e), eps)


def quat_exp(z):
    """Inverse of :func:`quat_log`: [cos|z|, sin|z| z/|z|]."""
    z = np.asarray(z, dtype=float)
    _check_finite(z)
    x = math.sqrt(z @ z)
    if x >= math.pi:
        raise ValueError(f"|z| must be below pi (got {x!r})")
    if x < SERIES_THRESHOLD:
        s = 1.0 - x * x / 6.0
    else:
        s = math.sin(x) / x
    return np.concatenate(([math.cos(x)], s * z))


def gmat_coefficient(x):
    """Scalar (1 - x cot x) / x^2 multiplying S(z)^2 in G(z); tends to 1/3 at 0."""
    if x < SERIES_THRESHOLD:
        return 1.0 / 3.0 + x * x / 45.0
    return (1.0 - x * math.cos(x) / math.sin(x)) / (x * x)


def _gmat(z, eps=EPS_Z):
    z1, z2, z3 = _vals(z)
    x = math.sqrt(z1 * z1 + z2 * z2 + z3 * z3)
    if x >= math.pi - eps:
        raise SingularityError(f"G(z) singular at |z| = pi (|z|={x!r})")
    S = skew(z)
    return _EYE3 + S + gmat_coefficient(x) * (S @ S)


def gmat(z, eps=EPS_Z):
    """Kinematic matrix G(z) with dz/dt = G(z) w / 2 for the log error z."""
    z = np.asarray(z, dtype=float)
    _check_finite(z)
    return _gmat(z, eps)
