"""Gyro-bias observers built on a first-order quaternion filter.

Ideal observer::

    b_hat     = b_bar - K_o J(q_f)^T q
    d b_bar   = 1/2 K_o J(q_f)^T J(q) w_hat + gamma K_o J(q)^T q_f
    d q_f     = gamma (q - q_f),      q_f(0) = q(0)

The controller-coupled variant subtracts ``2 lambda_c M z`` from b_hat and
``2 lambda_c^2 M z`` from the b_bar rate, z being the logarithm of the
(possibly sign-switched) attitude error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .attmath import jmul, jtmul
from .plant import rk4


def as_gain_matrix(K, name="gain"):
    """Accept a scalar, a 3-vector diagonal or a 3x3 matrix; require SPD."""
    K = np.array(K, dtype=float)
    if K.ndim == 0:
        K = K * np.eye(3)
    elif K.shape == (3,):
        K = np.diag(K)
    if K.shape != (3, 3):
        raise ValueError(f"{name} must be scalar, diagonal 3-vector or 3x3")
    if np.max(np.abs(K - K.T)) > 1e-12:
        raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(K)) <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return K


@dataclass(frozen=True)
class ObserverGains:
    K_o: np.ndarray
    gamma: float
    lambda_c: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "K_o", as_gain_matrix(self.K_o, "K_o"))
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.lambda_c < 0:
            raise ValueError("lambda_c must be non-negative")


@dataclass(frozen=True)
class ObserverState:
    b_bar: np.ndarray
    q_f: np.ndarray


def ideal_bias_estimate(state, q, gains):
    return state.b_bar - gains.K_o @ jtmul(state.q_f, q)


def ideal_observer_rates(state, q, omega_hat, gains, q_f_rate=None):
    """Right-hand sides (d b_bar, d q_f) of the ideal observer.

    ``q_f_rate`` is a test hook: pass the true dq/dt together with
    ``state.q_f == q`` to emulate an infinitely fast filter. The filter
    feed-forward term is then evaluated as ``K_o J(dq_f)^T q``, which is the
    same expression the gamma term stands for in the normal case.
    """
    K_o, q_f = gains.K_o, state.q_f
    drift = 0.5 * (K_o @ jtmul(q_f, jmul(q, omega_hat)))
    if q_f_rate is None:
        q_f_rate = gains.gamma * (q - q_f)
        b_bar_rate = drift + gains.gamma * (K_o @ jtmul(q, q_f))
    else:
        b_bar_rate = drift + K_o @ jtmul(q_f_rate, q)
    return b_bar_rate, q_f_rate


def coupled_bias_estimate(state, q, z, inertia, gains):
    return ideal_bias_estimate(state, q, gains) - 2.0 * gains.lambda_c * (inertia.M @ z)


def coupled_observer_rates(state, q, z, omega_hat, inertia, gains):
    b_bar_rate, q_f_rate = ideal_observer_rates(state, q, omega_hat, gains)
    return b_bar_rate - 2.0 * gains.lambda_c ** 2 * (inertia.M @ z), q_f_rate


def coupled_observer(b_bar, q_f, q, z, omega_g, M, gains):
    """Fused evaluation used in the simulation loop.

    Returns ``(b_hat, b_bar_rate, q_f_rate)`` of the coupled observer with
    omega_hat = omega_g - b_hat taken at the same instant. Agrees with
    :func:`coupled_bias_estimate` and :func:`coupled_observer_rates`.
    """
    K_o, gamma, lam = gains.K_o, gains.gamma, gains.lambda_c
    Mz = M @ z
    b_hat = b_bar - K_o @ jtmul(q_f, q) - (2.0 * lam) * Mz
    b_bar_rate = (K_o @ (0.5 * jtmul(q_f, jmul(q, omega_g - b_hat)) + gamma * jtmul(q, q_f))
                  - (2.0 * lam * lam) * Mz)
    return b_hat, b_bar_rate, gamma * (q - q_f)


def initial_observer_state(q0, gains, b_hat0=None, inertia=None, z0=None):
    """Observer state with q_f(0) = q(0) whose bias estimate equals ``b_hat0``."""
    q0 = np.asarray(q0, dtype=float)
    b_hat0 = np.zeros(3) if b_hat0 is None else np.asarray(b_hat0, dtype=float)
    b_bar = b_hat0 + gains.K_o @ jtmul(q0, q0)
    if z0 is not None and gains.lambda_c > 0:
        b_bar = b_bar + 2.0 * gains.lambda_c * (inertia.M @ np.asarray(z0, dtype=float))
    return ObserverState(b_bar, q0.copy())


@dataclass
class ObserverRun:
    t: np.ndarray
    q: np.ndarray
    q_f: np.ndarray
    b_hat: np.ndarray
    bias: np.ndarray

    @property
    def error_norm(self):
        return np.linalg.norm(self.b_hat - self.bias, axis=1)

    @property
    def filter_gap(self):
        return np.linalg.norm(self.q - self.q_f, axis=1)


def simulate_observer(q0, omega_fn: Callable, bias, gains, duration, dt,
                      b_hat0=None, ideal_filter=False):
    """Run the stand-alone ideal observer on a prescribed rate profile.

    The body follows dq/dt = J(q) omega(t)/2 and the gyro reads omega(t) + bias
    continuously (noise-free), so the only discretization error is RK4's.
    With ``ideal_filter`` the filter is slaved to q (q_f = q, dq_f = dq).
    """
    bias = np.asarray(bias, dtype=float)
    n = int(round(duration / dt))
    obs = initial_observer_state(q0, gains, b_hat0)
    x = np.concatenate((np.asarray(q0, float), obs.b_bar, obs.q_f))

    def rates(t, y):
        q, b_bar, q_f = y[:4], y[4:7], y[7:]
        omega = omega_fn(t)
        q_dot = 0.5 * jmul(q, omega)
        if ideal_filter:
            s = ObserverState(b_bar, q)
            b_hat = ideal_bias_estimate(s, q, gains)
            b_bar_rate, _ = ideal_observer_rates(s, q, omega + bias - b_hat, gains, q_f_rate=q_dot)
            q_f_rate = q_dot
        else:
            s = ObserverState(b_bar, q_f)
            b_hat = ideal_bias_estimate(s, q, gains)
            b_bar_rate, q_f_rate = ideal_observer_rates(s, q, omega + bias - b_hat, gains)
        return np.concatenate((q_dot, b_bar_rate, q_f_rate))

    ts = np.arange(n + 1) * dt
    qs, qfs, bh = np.empty((n + 1, 4)), np.empty((n + 1, 4)), np.empty((n + 1, 3))

    def record(k, y):
        qs[k] = y[:4]
        qfs[k] = y[:4] if ideal_filter else y[7:]
        bh[k] = ideal_bias_estimate(ObserverState(y[4:7], qfs[k]), y[:4], gains)

    record(0, x)
    for k in range(n):
        x = rk4(rates, ts[k], x, dt)
        x[:4] /= np.linalg.norm(x[:4])
        if ideal_filter:
            x[7:] = x[:4]
        record(k + 1, x)
    return ObserverRun(ts, qs, qfs, bh, np.tile(bias, (n + 1, 1)))
