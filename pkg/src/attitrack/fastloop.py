"""Closed-loop torque and RK4 step written on plain floats.

The run loop evaluates the controller once and the closed-loop right-hand
side four times per step. With 3- and 4-vectors numpy's per-call overhead
dominates, so this module repeats ``control.switched_control`` and
``plant._rates`` (with the coupled observer) on Python scalars.
``tests/test_sim.py`` checks both against the array implementations.

State layout matches :mod:`attitrack.plant`: q, omega, q_d, b_bar, q_f.
"""

from __future__ import annotations

import math

from .attmath import EPS_Z, SERIES_THRESHOLD, SingularityError


def log_scale(e0, nv, eps=EPS_Z):
    """Factor k with log(e) = k e_v, given e0 and |e_v|."""
    if e0 <= -1.0 + eps:
        raise SingularityError(f"quaternion log undefined near e0 = -1 (e0={e0!r})")
    if nv < SERIES_THRESHOLD:
        return 1.0 + nv * nv / 6.0
    return math.atan2(nv, e0) / nv


def tracking_error(x):
    """Normalized q_d^-1 q from the packed state."""
    q0, q1, q2, q3 = x[0], x[1], x[2], x[3]
    d0, d1, d2, d3 = x[7], x[8], x[9], x[10]
    e0 = d0 * q0 + d1 * q1 + d2 * q2 + d3 * q3
    e1 = d0 * q1 - q0 * d1 - d2 * q3 + d3 * q2
    e2 = d0 * q2 - q0 * d2 - d3 * q1 + d1 * q3
    e3 = d0 * q3 - q0 * d3 - d1 * q2 + d2 * q1
    n = math.sqrt(e0 * e0 + e1 * e1 + e2 * e2 + e3 * e3)
    return e0 / n, e1 / n, e2 / n, e3 / n


class ClosedLoopStepper:
    """RK4 advance of plant, reference and coupled observer with tau and omega_g held."""

    def __init__(self, inertia, obs_gains, reference, dt, K_c=None):
        self.M = [float(v) for v in inertia.M.ravel()]
        self.Kc = None if K_c is None else [float(v) for v in K_c.ravel()]
        self.Mi = [float(v) for v in inertia.M_inv.ravel()]
        self.K = [float(v) for v in obs_gains.K_o.ravel()]
        self.gamma = float(obs_gains.gamma)
        self.lam = float(obs_gains.lambda_c)
        self.reference = reference
        self.dt = float(dt)

    def rates(self, x, wd, tau, wg, h):
        q0, q1, q2, q3, w1, w2, w3, d0, d1, d2, d3, bb1, bb2, bb3, f0, f1, f2, f3 = x
        m00, m01, m02, m10, m11, m12, m20, m21, m22 = self.M
        K = self.K
        g, lam = self.gamma, self.lam
        v1, v2, v3 = wd

        # body kinematics and dynamics
        dq = (0.5 * (-q1 * w1 - q2 * w2 - q3 * w3), 0.5 * (q0 * w1 - q3 * w2 + q2 * w3),
              0.5 * (q3 * w1 + q0 * w2 - q1 * w3), 0.5 * (-q2 * w1 + q1 * w2 + q0 * w3))
        h1 = m00 * w1 + m01 * w2 + m02 * w3
        h2 = m10 * w1 + m11 * w2 + m12 * w3
        h3 = m20 * w1 + m21 * w2 + m22 * w3
        a1 = h2 * w3 - h3 * w2 + tau[0]
        a2 = h3 * w1 - h1 * w3 + tau[1]
        a3 = h1 * w2 - h2 * w1 + tau[2]
        Mi = self.Mi
        dw = (Mi[0] * a1 + Mi[1] * a2 + Mi[2] * a3,
              Mi[3] * a1 + Mi[4] * a2 + Mi[5] * a3,
              Mi[6] * a1 + Mi[7] * a2 + Mi[8] * a3)
        dd = (0.5 * (-d1 * v1 - d2 * v2 - d3 * v3), 0.5 * (d0 * v1 - d3 * v2 + d2 * v3),
              0.5 * (d3 * v1 + d0 * v2 - d1 * v3), 0.5 * (-d2 * v1 + d1 * v2 + d0 * v3))

        # z = log(h e), e = q_d^-1 q
        e0 = d0 * q0 + d1 * q1 + d2 * q2 + d3 * q3
        e1 = d0 * q1 - q0 * d1 - d2 * q3 + d3 * q2
        e2 = d0 * q2 - q0 * d2 - d3 * q1 + d1 * q3
        e3 = d0 * q3 - q0 * d3 - d1 * q2 + d2 * q1
        s = h / math.sqrt(e0 * e0 + e1 * e1 + e2 * e2 + e3 * e3)
        e0, e1, e2, e3 = e0 * s, e1 * s, e2 * s, e3 * s
        k = log_scale(e0, math.sqrt(e1 * e1 + e2 * e2 + e3 * e3))
        z1, z2, z3 = k * e1, k * e2, k * e3
        mz1 = m00 * z1 + m01 * z2 + m02 * z3
        mz2 = m10 * z1 + m11 * z2 + m12 * z3
        mz3 = m20 * z1 + m21 * z2 + m22 * z3

        # coupled observer: b_hat, then the b_bar and q_f rates
        j1 = -f1 * q0 + f0 * q1 + f3 * q2 - f2 * q3
        j2 = -f2 * q0 - f3 * q1 + f0 * q2 + f1 * q3
        j3 = -f3 * q0 + f2 * q1 - f1 * q2 + f0 * q3
        c = 2.0 * lam
        b1 = bb1 - (K[0] * j1 + K[1] * j2 + K[2] * j3) - c * mz1
        b2 = bb2 - (K[3] * j1 + K[4] * j2 + K[5] * j3) - c * mz2
        b3 = bb3 - (K[6] * j1 + K[7] * j2 + K[8] * j3) - c * mz3
        o1, o2, o3 = wg[0] - b1, wg[1] - b2, wg[2] - b3
        u0 = -q1 * o1 - q2 * o2 - q3 * o3
        u1 = q0 * o1 - q3 * o2 + q2 * o3
        u2 = q3 * o1 + q0 * o2 - q1 * o3
        u3 = -q2 * o1 + q1 * o2 + q0 * o3
        r1 = 0.5 * (-f1 * u0 + f0 * u1 + f3 * u2 - f2 * u3) - g * j1
        r2 = 0.5 * (-f2 * u0 - f3 * u1 + f0 * u2 + f1 * u3) - g * j2
        r3 = 0.5 * (-f3 * u0 + f2 * u1 - f1 * u2 + f0 * u3) - g * j3
        c2 = c * lam
        db = (K[0] * r1 + K[1] * r2 + K[2] * r3 - c2 * mz1,
              K[3] * r1 + K[4] * r2 + K[5] * r3 - c2 * mz2,
              K[6] * r1 + K[7] * r2 + K[8] * r3 - c2 * mz3)
        df = (g * (q0 - f0), g * (q1 - f1), g * (q2 - f2), g * (q3 - f3))
        return dq + dw + dd + db + df

    def step(self, t, x, tau, omega_g, h):
        """Advance the packed state ``x`` (a sequence of 18 floats) by one step."""
        dt = self.dt
        tau = [float(v) for v in tau]
        wg = [float(v) for v in omega_g]
        wd0 = [float(v) for v in self.reference(t)[0]]
        wdm = [float(v) for v in self.reference(t + 0.5 * dt)[0]]
        wd1 = [float(v) for v in self.reference(t + dt)[0]]
        f = self.rates
        hd = 0.5 * dt
        k1 = f(x, wd0, tau, wg, h)
        k2 = f([a + hd * b for a, b in zip(x, k1)], wdm, tau, wg, h)
        k3 = f([a + hd * b for a, b in zip(x, k2)], wdm, tau, wg, h)
        k4 = f([a + dt * b for a, b in zip(x, k3)], wd1, tau, wg, h)
        c = dt / 6.0
        y = [a + c * (p + 2.0 * (r + s) + u) for a, p, r, s, u in zip(x, k1, k2, k3, k4)]
        for lo in (0, 7):
            n = math.sqrt(y[lo] ** 2 + y[lo + 1] ** 2 + y[lo + 2] ** 2 + y[lo + 3] ** 2)
            y[lo], y[lo + 1], y[lo + 2], y[lo + 3] = y[lo] / n, y[lo + 1] / n, y[lo + 2] / n, y[lo + 3] / n
        return y

    def control(self, x, e, omega_g, wd, wdd, h):
        """Switched-law torque at the packed state ``x`` with error ``e`` from :func:`tracking_error`.

        Returns ``(tau, z, omega_r, b_hat)`` as tuples. Needs ``K_c`` at
        construction.
        """
        q0, q1, q2, q3, w1, w2, w3, d0, d1, d2, d3, bb1, bb2, bb3, f0, f1, f2, f3 = x
        m00, m01, m02, m10, m11, m12, m20, m21, m22 = self.M
        K, Kc = self.K, self.Kc
        lam = self.lam
        e0, e1, e2, e3 = e
        nv = math.sqrt(e1 * e1 + e2 * e2 + e3 * e3)
        k = h * log_scale(h * e0, nv)
        z1, z2, z3 = k * e1, k * e2, k * e3
        zz = z1 * z1 + z2 * z2 + z3 * z3
        x_ = math.sqrt(zz)
        if x_ >= math.pi - EPS_Z:
            raise SingularityError(f"G(z) singular at |z| = pi (|z|={x_!r})")
        cg = 1.0 / 3.0 + zz / 45.0 if x_ < SERIES_THRESHOLD else (1.0 - x_ * math.cos(x_) / math.sin(x_)) / zz

        def G(v1, v2, v3, sign=1.0):
            # (I + sign S(z) + cg S(z)^2) v, S(z)^2 v = z (z.v) - |z|^2 v
            c1, c2, c3 = z2 * v3 - z3 * v2, z3 * v1 - z1 * v3, z1 * v2 - z2 * v1
            zv = z1 * v1 + z2 * v2 + z3 * v3
            return (v1 + sign * c1 + cg * (z1 * zv - zz * v1),
                    v2 + sign * c2 + cg * (z2 * zv - zz * v2),
                    v3 + sign * c3 + cg * (z3 * zv - zz * v3))

        def Rt(v1, v2, v3):
            # R(e)^T v = v - 2 e0 (ev x v) + 2 ev x (ev x v)
            c1, c2, c3 = e2 * v3 - e3 * v2, e3 * v1 - e1 * v3, e1 * v2 - e2 * v1
            return (v1 - 2.0 * e0 * c1 + 2.0 * (e2 * c3 - e3 * c2),
                    v2 - 2.0 * e0 * c2 + 2.0 * (e3 * c1 - e1 * c3),
                    v3 - 2.0 * e0 * c3 + 2.0 * (e1 * c2 - e2 * c1))

        def Mv(v1, v2, v3):
            return (m00 * v1 + m01 * v2 + m02 * v3, m10 * v1 + m11 * v2 + m12 * v3,
                    m20 * v1 + m21 * v2 + m22 * v3)

        p1, p2, p3 = Rt(*wd)
        a1, a2, a3 = Rt(*wdd)
        r1, r2, r3 = p1 - 2.0 * lam * z1, p2 - 2.0 * lam * z2, p3 - 2.0 * lam * z3

        mz1, mz2, mz3 = Mv(z1, z2, z3)
        j1 = -f1 * q0 + f0 * q1 + f3 * q2 - f2 * q3
        j2 = -f2 * q0 - f3 * q1 + f0 * q2 + f1 * q3
        j3 = -f3 * q0 + f2 * q1 - f1 * q2 + f0 * q3
        c = 2.0 * lam
        b1 = bb1 - (K[0] * j1 + K[1] * j2 + K[2] * j3) - c * mz1
        b2 = bb2 - (K[3] * j1 + K[4] * j2 + K[5] * j3) - c * mz2
        b3 = bb3 - (K[6] * j1 + K[7] * j2 + K[8] * j3) - c * mz3
        o1, o2, o3 = omega_g[0] - b1, omega_g[1] - b2, omega_g[2] - b3

        # reference acceleration
        g1, g2, g3 = G(r1 - o1, r2 - o2, r3 - o3)
        ll = c * lam
        rd1 = ll * z1 + lam * g1 + a1 + (p2 * o3 - p3 * o2)
        rd2 = ll * z2 + lam * g2 + a2 + (p3 * o1 - p1 * o3)
        rd3 = ll * z3 + lam * g3 + a3 + (p1 * o2 - p2 * o1)

        # torque
        s1, s2, s3 = o1 - r1, o2 - r2, o3 - r3
        u1, u2, u3 = Mv(*G(s1, s2, s3))
        v1, v2, v3 = G(*Mv(s1, s2, s3), sign=-1.0)
        pa1, pa2, pa3 = 0.5 * (u1 - v1), 0.5 * (u2 - v2), 0.5 * (u3 - v3)
        gz1, gz2, gz3 = G(z1, z2, z3, sign=-1.0)
        n1, n2, n3 = Mv(o1, o2, o3)
        md1, md2, md3 = Mv(rd1, rd2, rd3)
        t1 = md1 - (n2 * r3 - n3 * r2) - 0.5 * gz1 - (Kc[0] * s1 + Kc[1] * s2 + Kc[2] * s3) + c * pa1
        t2 = md2 - (n3 * r1 - n1 * r3) - 0.5 * gz2 - (Kc[3] * s1 + Kc[4] * s2 + Kc[5] * s3) + c * pa2
        t3 = md3 - (n1 * r2 - n2 * r1) - 0.5 * gz3 - (Kc[6] * s1 + Kc[7] * s2 + Kc[8] * s3) + c * pa3
        return (t1, t2, t3), (z1, z2, z3), (r1, r2, r3), (b1, b2, b3)
