"""Rigid-body rotation, reference trajectories and the fixed-step integrator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .attmath import cross, jmul

# packed layout of FullState.as_array()
Q, OMEGA, QD, BBAR, QF = slice(0, 4), slice(4, 7), slice(7, 11), slice(11, 14), slice(14, 18)
STATE_SIZE = 18


@dataclass(frozen=True)
class InertiaModel:
    """Constant inertia matrix M (kg m^2) with its inverse cached."""

    M: np.ndarray
    M_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.shape == (3,):
            M = np.diag(M)
        if M.shape != (3, 3) or not np.all(np.isfinite(M)):
            raise ValueError("inertia must be a finite 3-vector (diagonal) or 3x3 matrix")
        if np.max(np.abs(M - M.T)) > 1e-12:
            raise ValueError("inertia matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(M)) <= 0.0:
            raise ValueError("inertia matrix must be positive definite")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "M_inv", np.linalg.inv(M))


@dataclass(frozen=True)
class BodyState:
    q: np.ndarray
    omega: np.ndarray


@dataclass(frozen=True)
class ReferenceState:
    q_d: np.ndarray
    omega_d: np.ndarray
    omega_d_dot: np.ndarray


class ConstantReference:
    """Desired angular velocity held constant (zero acceleration)."""

    def __init__(self, omega_d, cap=10.0):
        self.omega_d = np.array(omega_d, dtype=float)
        if self.omega_d.shape != (3,) or np.linalg.norm(self.omega_d) > cap:
            raise ValueError("omega_d must be a 3-vector within the configured cap")
        self._zero = np.zeros(3)

    def __call__(self, t):
        return self.omega_d, self._zero


class TabulatedReference:
    """Piecewise-linear omega_d(t) through tabulated samples; held flat outside the table."""

    def __init__(self, times, omegas, cap=10.0):
        self.times = np.asarray(times, dtype=float)
        self.omegas = np.asarray(omegas, dtype=float)
        if self.times.ndim != 1 or self.omegas.shape != (len(self.times), 3) or len(self.times) < 2:
            raise ValueError("need at least two samples of shape (n,) and (n, 3)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("reference table times must be strictly increasing")
        if np.max(np.linalg.norm(self.omegas, axis=1)) > cap:
            raise ValueError("tabulated omega_d exceeds the configured cap")

    def __call__(self, t):
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if i < 0 or i >= len(self.times) - 1:
            k = 0 if i < 0 else -1
            return self.omegas[k].copy(), np.zeros(3)
        t0, t1 = self.times[i], self.times[i + 1]
        slope = (self.omegas[i + 1] - self.omegas[i]) / (t1 - t0)
        return self.omegas[i] + slope * (t - t0), slope


def kinematics_rate(q, omega):
    """dq/dt = J(q) omega / 2."""
    return 0.5 * jmul(q, omega)


def dynamics_rate(state, tau, inertia):
    """d omega/dt = M^-1 (S(M omega) omega + tau)."""
    omega = state.omega if isinstance(state, BodyState) else np.asarray(state, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise ValueError("non-finite torque")
    return inertia.M_inv @ (cross(inertia.M @ omega, omega) + tau)


@dataclass(frozen=True)
class FullState:
    """Everything the integrator advances: plant, reference attitude, observer."""

    t: float
    q: np.ndarray
    omega: np.ndarray
    q_d: np.ndarray
    b_bar: np.ndarray
    q_f: np.ndarray

    def as_array(self):
        return np.concatenate((self.q, self.omega, self.q_d, self.b_bar, self.q_f))

    @classmethod
    def from_array(cls, t, x):
        return cls(t, x[Q].copy(), x[OMEGA].copy(), x[QD].copy(), x[BBAR].copy(), x[QF].copy())


ObserverRateFn = Callable[[float, np.ndarray], tuple]


@dataclass(frozen=True)
class StepInputs:
    """Inputs held constant across one step (zero-order hold).

    ``observer_rate(t, x)`` receives the packed stage state and returns
    ``(b_bar_rate, q_f_rate)``; when it is ``None`` the observer states are
    frozen over the step.
    """

    tau: np.ndarray
    omega_g: np.ndarray
    observer_rate: Optional[ObserverRateFn] = None


_FROZEN = (np.zeros(3), np.zeros(4))


def _rates(t, x, inputs, inertia, reference):
    omega = x[OMEGA]
    omega_d, _ = reference(t)
    obs = _FROZEN if inputs.observer_rate is None else inputs.observer_rate(t, x)
    return np.concatenate((
        0.5 * jmul(x[Q], omega),
        inertia.M_inv @ (cross(inertia.M @ omega, omega) + inputs.tau),
        0.5 * jmul(x[QD], omega_d),
        obs[0],
        obs[1],
    ))


def rk4(f, t, x, dt):
    """One classical Runge-Kutta step of dx/dt = f(t, x)."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state, inputs, dt, inertia, reference):
    """Advance ``state`` by ``dt`` with RK4 and renormalize q and q_d.

    The filter state q_f lives in R^4 and is left as integrated. Any
    discrete (hysteresis) state is handled by the caller.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = rk4(lambda t, y: _rates(t, y, inputs, inertia, reference), state.t, state.as_array(), dt)
    x[Q] /= np.linalg.norm(x[Q])
    x[QD] /= np.linalg.norm(x[QD])
    return FullState.from_array(state.t + dt, x)


def free_rotation(q0, omega0, inertia, duration, dt):
    """Torque-free tumbling; returns (t, q, omega) arrays sampled every step."""
    n = int(round(duration / dt))
    ts = np.arange(n + 1) * dt
    qs = np.empty((n + 1, 4))
    ws = np.empty((n + 1, 3))
    s = FullState(0.0, np.asarray(q0, float), np.asarray(omega0, float),
                  np.array([1.0, 0, 0, 0]), np.zeros(3), np.asarray(q0, float))
    inputs = StepInputs(np.zeros(3), np.zeros(3))
    ref = ConstantReference(np.zeros(3))
    qs[0], ws[0] = s.q, s.omega
    for k in range(n):
        s = step(s, inputs, dt, inertia, ref)
        qs[k + 1], ws[k + 1] = s.q, s.omega
    return ts, qs, ws


def reference_state(q_d, reference, t):
    omega_d, omega_d_dot = reference(t)
    return ReferenceState(np.asarray(q_d, float), omega_d, omega_d_dot)

