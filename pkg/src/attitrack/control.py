"""Tracking controllers and the hysteretic switching variable h.

The switched law replaces the attitude error e by h*e everywhere
(logarithm, reference rate, coupled observer); with h = +1 it is the
continuous law. Torque::

    tau = M dw_r_hat - S(M w_hat) w_r - G(z)^T z / 2 - (K_c - 2 lambda_c P_a)(w_hat - w_r)

with P = M G(z) and P_a its skew-symmetric part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attmath import _conj_mul, _gmat, _log, _rotation, cross, normalize, skew
from .estimation import as_gain_matrix, coupled_bias_estimate


@dataclass(frozen=True)
class ControllerGains:
    K_c: np.ndarray
    lambda_c: float

    def __post_init__(self):
        object.__setattr__(self, "K_c", as_gain_matrix(self.K_c, "K_c"))
        if not self.lambda_c > 0:
            raise ValueError("lambda_c must be positive")


def sgn_hat(x):
    """Sign with sgn_hat(0) = +1."""
    return 1 if x >= 0 else -1


@dataclass(frozen=True)
class HysteresisState:
    h: int
    delta: float

    def __post_init__(self):
        if self.h not in (-1, 1):
            raise ValueError("h must be +1 or -1")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")


def hysteresis_update(hs, e0):
    """Jump h to sgn_hat(e0) when h*e0 <= -delta; otherwise keep it."""
    if abs(e0) > 1.0 + 1e-9:
        raise ValueError(f"|e0| must not exceed 1 (got {e0!r})")
    if hs.h * e0 <= -hs.delta:
        return HysteresisState(sgn_hat(e0), hs.delta)
    return hs


def initial_hysteresis(e0, delta, h0="auto"):
    h = sgn_hat(e0) if h0 == "auto" else int(h0)
    return HysteresisState(h, delta)


@dataclass(frozen=True)
class ControlOutput:
    tau: np.ndarray
    z: np.ndarray
    omega_r: np.ndarray
    e: np.ndarray
    h: int
    b_hat: np.ndarray
    omega_hat: np.ndarray
    omega_r_dot_hat: np.ndarray


def tracking_error(q, q_d):
    """e = q_d^-1 ⊗ q."""
    return normalize(_conj_mul(q_d, q))


def reference_rate(z, he, omega_d, lambda_c):
    """omega_r = -2 lambda_c z + R(he)^T omega_d."""
    return -2.0 * lambda_c * z + _rotation(he).T @ omega_d


def _check_lambda(gains, obs_gains):
    if obs_gains.lambda_c != gains.lambda_c:
        raise ValueError("the coupled observer must use the controller's lambda_c")


def switched_control(meas_q, omega_g, ref, obs, hs, gains, obs_gains, inertia):
    """Torque of the switched law for the current measurements and h."""
    _check_lambda(gains, obs_gains)
    h = hs.h if isinstance(hs, HysteresisState) else int(hs)
    lam = gains.lambda_c
    M = inertia.M
    e = tracking_error(meas_q, ref.q_d)
    he = e if h == 1 else -e
    z = _log(he)
    G = _gmat(z)
    Rt = _rotation(e).T
    w_d_body = Rt @ ref.omega_d
    omega_r = -2.0 * lam * z + w_d_body

    b_hat = coupled_bias_estimate(obs, meas_q, z, inertia, obs_gains)
    omega_hat = np.asarray(omega_g, dtype=float) - b_hat

    omega_r_dot_hat = (2.0 * lam * lam * z + lam * (G @ omega_r) + Rt @ ref.omega_d_dot
                       - (lam * G - skew(w_d_body)) @ omega_hat)
    P = M @ G
    P_a = 0.5 * (P - P.T)
    tau = (M @ omega_r_dot_hat - cross(M @ omega_hat, omega_r) - 0.5 * (G.T @ z)
           - (gains.K_c - 2.0 * lam * P_a) @ (omega_hat - omega_r))
    return ControlOutput(tau, z, omega_r, e, h, b_hat, omega_hat, omega_r_dot_hat)


def continuous_control(meas_q, omega_g, ref, obs, gains, obs_gains, inertia):
    """Continuous law: stabilizes e = +1 only."""
    return switched_control(meas_q, omega_g, ref, obs, 1, gains, obs_gains, inertia)


def effort_curve(tau_series, dt):
    """Running sqrt(int_0^t tau^T tau dt) by the trapezoid rule."""
    p = np.sum(np.asarray(tau_series, dtype=float) ** 2, axis=1)
    acc = np.concatenate(([0.0], np.cumsum(0.5 * dt * (p[1:] + p[:-1]))))
    return np.sqrt(acc)


def control_effort(tau_series, dt):
    return float(effort_curve(tau_series, dt)[-1])
