"""Scenario configuration, the closed-loop run loop, metrics and file output.

A run couples the plant, the gyro model, the coupled observer and the
switched controller. Each step of length ``dt``:

1. the hysteresis variable h is updated from the current attitude error,
2. the gyro is sampled (and its bias advanced),
3. the torque is computed and held over the step,
4. plant, reference and observer states are advanced with RK4.

The loop uses the scalar implementations in :mod:`attitrack.fastloop`;
they agree with ``control.switched_control`` and ``plant.step`` to
rounding.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .attmath import SingularityError, _conj_mul, _log, _rotation, normalize
from .control import (
    ControllerGains,
    effort_curve,
    hysteresis_update,
    initial_hysteresis,
)
from .estimation import (
    ObserverGains,
    coupled_observer,
    initial_observer_state,
)
from .plant import (
    BBAR,
    QD,
    QF,
    Q,
    ConstantReference,
    FullState,
    InertiaModel,
    TabulatedReference,
)
from .fastloop import ClosedLoopStepper, tracking_error
from .sensing import GyroModel

OUT_DIR_ENV = "ATTITRACK_OUT_DIR"

Vector = Union[float, list]


class SimulationAbort(RuntimeError):
    """A run hit the logarithm singularity; carries where it happened."""

    def __init__(self, step_index, t, e0, h, cause):
        super().__init__(f"singularity at step {step_index} (t={t:.6g}, e0={e0:.17g}, h={h}): {cause}")
        self.step_index, self.t, self.e0, self.h = step_index, t, e0, h


def _unit_u():
    u = np.array([1.0, 2.0, 3.0])
    return u / np.linalg.norm(u)


@dataclass
class ScenarioConfig:
    """Complete run description. Keys of the JSON config file are these field names."""

    name: str = "custom"
    duration: float = 120.0
    dt: float = 0.001
    log_interval: float = 0.01
    inertia: list = field(default_factory=lambda: list(10.0 * _unit_u()))
    q0: list = field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0])
    qd0: list = field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0])
    omega0: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    omega_d: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    omega_d_table: Optional[dict] = None
    omega_d_cap: float = 10.0
    bias0: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    bias_hat0: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    m1_max: float = 0.0
    m2_max: float = 0.0
    seed: int = 0
    K_c: Vector = 1.0
    lambda_c: float = 0.01
    K_o: Vector = 1.0
    gamma: float = 0.5
    delta: float = 1.0
    h0: Union[str, int] = "auto"
    certify: bool = False

    def __post_init__(self):
        if not self.duration > 0 or not self.dt > 0:
            raise ValueError("duration and dt must be positive")
        n = self.duration / self.dt
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ValueError("duration must be an integer multiple of dt")
        k = self.log_interval / self.dt
        if self.log_interval < self.dt or abs(k - round(k)) > 1e-6 * k:
            raise ValueError("log_interval must be a positive integer multiple of dt")
        if self.log_interval > 0.05 + 1e-12:
            raise ValueError("log_interval must not exceed 0.05 s")
        if self.h0 not in ("auto", 1, -1):
            raise ValueError("h0 must be 'auto', 1 or -1")
        for key in ("q0", "qd0"):
            q = np.asarray(getattr(self, key), dtype=float)
            if q.shape != (4,) or abs(np.linalg.norm(q) - 1.0) > 1e-6:
                raise ValueError(f"{key} must be a unit quaternion within 1e-6")
            setattr(self, key, list(q / np.linalg.norm(q)))

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    @property
    def log_every(self):
        return int(round(self.log_interval / self.dt))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**data)


def load_config(path):
    with open(path) as fh:
        return ScenarioConfig.from_dict(json.load(fh))


def save_config(config, path):
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)


def builtin_scenario(number):
    """The three simulation setups: continuous, hysteretic, hysteretic with noise."""
    u = _unit_u()
    base = ScenarioConfig(
        name="scenario1",
        duration=120.0,
        inertia=list(10.0 * u),
        q0=[-0.2] + list(math.sqrt(1.0 - 0.2 ** 2) * u),
        qd0=[1.0, 0.0, 0.0, 0.0],
        omega0=list(0.5 * u),
        omega_d=[0.0, 0.11, 0.0],
        bias0=[0.05, -0.05, 0.033],
        K_c=1.0, lambda_c=0.01, K_o=1.0, gamma=0.5,
        delta=1.0, h0=1,
    )
    if number == 1:
        return base
    if number == 2:
        return base.replace(name="scenario2", delta=0.3)
    if number == 3:
        return base.replace(name="scenario3", delta=0.3, duration=300.0,
                            m1_max=0.01, m2_max=0.03, seed=2020)
    raise ValueError(f"unknown built-in scenario {number!r}")


def make_reference(config):
    if config.omega_d_table is not None:
        tab = config.omega_d_table
        return TabulatedReference(tab["t"], tab["omega"], cap=config.omega_d_cap)
    return ConstantReference(config.omega_d, cap=config.omega_d_cap)


# column name -> (attribute, width)
LOG_FIELDS = [
    ("t", 1), ("q", 4), ("q_d", 4), ("e", 4), ("h", 1), ("z", 3), ("omega", 3),
    ("omega_g", 3), ("omega_r", 3), ("omega_d", 3), ("omega_d_dot", 3), ("b", 3),
    ("b_hat", 3), ("tau", 3), ("q_f", 4), ("b_bar", 3),
    ("pointing_angle", 1), ("omega_err_norm", 1), ("bias_err_norm", 1),
    ("effort", 1), ("omega_err_rms", 1), ("bias_err_rms", 1),
]


def log_columns():
    cols = []
    for name, width in LOG_FIELDS:
        cols.extend([name] if width == 1 else [f"{name}_{i}" for i in range(width)])
    return cols


@dataclass
class TrajectoryLog:
    """Uniformly sampled run output plus switch events and the generating config."""

    t: np.ndarray
    q: np.ndarray
    q_d: np.ndarray
    e: np.ndarray
    h: np.ndarray
    z: np.ndarray
    omega: np.ndarray
    omega_g: np.ndarray
    omega_r: np.ndarray
    omega_d: np.ndarray
    omega_d_dot: np.ndarray
    b: np.ndarray
    b_hat: np.ndarray
    tau: np.ndarray
    q_f: np.ndarray
    b_bar: np.ndarray
    pointing_angle: np.ndarray
    omega_err_norm: np.ndarray
    bias_err_norm: np.ndarray
    effort: np.ndarray
    omega_err_rms: np.ndarray
    bias_err_rms: np.ndarray
    switches: list = field(default_factory=list)
    config: Optional[ScenarioConfig] = None

    def __len__(self):
        return len(self.t)

    def as_matrix(self):
        parts = []
        for name, width in LOG_FIELDS:
            a = np.asarray(getattr(self, name), dtype=float)
            parts.append(a.reshape(len(self.t), width))
        return np.hstack(parts)

    @classmethod
    def from_matrix(cls, data, switches=(), config=None):
        kw, j = {}, 0
        for name, width in LOG_FIELDS:
            block = data[:, j:j + width]
            kw[name] = block[:, 0].copy() if width == 1 else block.copy()
            j += width
        kw["h"] = kw["h"].astype(int)
        return cls(**kw, switches=list(switches), config=config)


def omega_error(omega, e, omega_d):
    """Angular velocity error omega - R(e)^T omega_d."""
    return omega - _rotation(e).T @ omega_d


def pointing_angle(e0):
    return 2.0 * np.arccos(np.clip(np.abs(e0), 0.0, 1.0))


def running_rms(values, dt):
    """sqrt(1/t int_0^t v^2) by the trapezoid rule; the t = 0 value is |v(0)|."""
    p = np.asarray(values, dtype=float) ** 2
    acc = np.concatenate(([0.0], np.cumsum(0.5 * dt * (p[1:] + p[:-1]))))
    t = np.arange(len(p)) * dt
    out = np.empty_like(p)
    out[0] = math.sqrt(p[0])
    out[1:] = np.sqrt(acc[1:] / t[1:])
    return out


def _observer_rate_fn(h, omega_g, inertia, obs_gains):
    M = inertia.M
    sign = h / 1.0

    def rate(t, x):
        q = x[Q]
        e = _conj_mul(x[QD], q)
        z = _log(e * (sign / math.sqrt(e @ e)))
        _, b_bar_rate, q_f_rate = coupled_observer(x[BBAR], x[QF], q, z, omega_g, M, obs_gains)
        return b_bar_rate, q_f_rate
    return rate


def setup(config):
    """Build the run objects and initial states for ``config``."""
    inertia = InertiaModel(config.inertia)
    reference = make_reference(config)
    gains = ControllerGains(config.K_c, config.lambda_c)
    obs_gains = ObserverGains(config.K_o, config.gamma, config.lambda_c)
    gyro = GyroModel(config.bias0, config.m1_max, config.m2_max, config.seed)
    q = normalize(config.q0)
    q_d = normalize(config.qd0)
    e = normalize(_conj_mul(q_d, q))
    hs = initial_hysteresis(e[0], config.delta, config.h0)
    try:
        z0 = _log(hs.h * e)
    except SingularityError as exc:
        raise SimulationAbort(0, 0.0, float(e[0]), hs.h, exc) from exc
    obs = initial_observer_state(q, obs_gains, config.bias_hat0, inertia, z0)
    state = FullState(0.0, q, np.array(config.omega0, dtype=float), q_d, obs.b_bar, obs.q_f)
    return inertia, reference, gains, obs_gains, gyro, hs, state


def run_scenario(config):
    """Simulate ``config`` and return a :class:`TrajectoryLog`."""
    inertia, reference, gains, obs_gains, gyro, hs, state = setup(config)
    n, every, dt = config.n_steps, config.log_every, config.dt
    n_log = n // every + 1

    cols = {name: np.empty((n_log, w)) if w > 1 else np.empty(n_log) for name, w in LOG_FIELDS}
    cols["h"] = np.empty(n_log, dtype=int)
    tau_all = np.empty((n + 1, 3))
    werr_all = np.empty(n + 1)
    berr_all = np.empty(n + 1)
    switches = []
    prev_e0 = None

    fast = ClosedLoopStepper(inertia, obs_gains, reference, dt, K_c=gains.K_c)
    x = state.as_array().tolist()
    rot = _rotation

    for k in range(n + 1):
        t = k * dt
        e = tracking_error(x)
        new_hs = hysteresis_update(hs, e[0])
        if new_hs.h != hs.h:
            switches.append({"step": k, "t": t, "e0": e[0], "e0_prev": prev_e0,
                             "h_from": hs.h, "h_to": new_hs.h})
        hs = new_hs
        prev_e0 = e[0]
        omega_d, omega_d_dot = reference(t)
        b_true = gyro.b.copy()
        omega = np.array(x[4:7])
        omega_g = gyro.measure(omega, dt)
        try:
            tau, z, omega_r, b_hat = fast.control(x, e, omega_g.tolist(), omega_d.tolist(),
                                                  omega_d_dot.tolist(), hs.h)
        except SingularityError as exc:
            raise SimulationAbort(k, t, e[0], hs.h, exc) from exc
        if not all(map(math.isfinite, tau)):
            raise SimulationAbort(k, t, e[0], hs.h, "non-finite torque")

        # omega - R(e)^T omega_d
        w_err = omega - rot(e).T @ omega_d
        tau_all[k] = tau
        werr_all[k] = math.sqrt(w_err @ w_err)
        b_err = b_true - b_hat
        berr_all[k] = math.sqrt(b_err @ b_err)

        if k % every == 0:
            i = k // every
            cols["t"][i] = t
            cols["q"][i], cols["q_d"][i], cols["e"][i] = x[0:4], x[7:11], e
            cols["h"][i] = hs.h
            cols["z"][i], cols["omega"][i], cols["omega_g"][i] = z, omega, omega_g
            cols["omega_r"][i], cols["omega_d"][i], cols["omega_d_dot"][i] = omega_r, omega_d, omega_d_dot
            cols["b"][i], cols["b_hat"][i], cols["tau"][i] = b_true, b_hat, tau
            cols["q_f"][i], cols["b_bar"][i] = x[14:18], x[11:14]
        if k == n:
            break
        try:
            x = fast.step(t, x, tau, omega_g, hs.h)
        except SingularityError as exc:
            raise SimulationAbort(k, t, e[0], hs.h, exc) from exc

    idx = np.arange(n_log) * every
    cols["pointing_angle"] = pointing_angle(cols["e"][:, 0])
    cols["omega_err_norm"] = werr_all[idx]
    cols["bias_err_norm"] = berr_all[idx]
    cols["effort"] = effort_curve(tau_all, dt)[idx]
    cols["omega_err_rms"] = running_rms(werr_all, dt)[idx]
    cols["bias_err_rms"] = running_rms(berr_all, dt)[idx]
    return TrajectoryLog(**cols, switches=switches, config=config)


def convergence_time(t, values, band):
    """First time after which ``values`` stays below ``band``; None if it never settles."""
    above = np.nonzero(np.asarray(values) >= band)[0]
    if len(above) == 0:
        return float(t[0])
    if above[-1] == len(values) - 1:
        return None
    return float(t[above[-1] + 1])


BANDS = {"pointing_angle": 0.05, "omega_err_norm": 0.01, "bias_err_norm": 0.005}


def compute_metrics(log, bands=None):
    """Terminal values, integrals and band-entry times for a log."""
    if len(log) == 0:
        raise ValueError("empty log")
    bands = dict(BANDS, **(bands or {}))
    t = log.t
    dt = t[1] - t[0] if len(t) > 1 else 0.0
    w = log.omega_err_norm
    rotation = float(np.sum(0.5 * dt * (w[1:] + w[:-1]))) if len(t) > 1 else 0.0
    return {
        "duration": float(t[-1]),
        "effort": float(log.effort[-1]),
        "omega_err_rms": float(log.omega_err_rms[-1]),
        "bias_err_rms": float(log.bias_err_rms[-1]),
        "final_pointing_angle": float(log.pointing_angle[-1]),
        "final_omega_err": float(w[-1]),
        "final_bias_err": float(log.bias_err_norm[-1]),
        "accumulated_rotation": rotation,
        "switch_count": len(log.switches),
        "switches": log.switches,
        "convergence_time": {k: convergence_time(t, getattr(log, k), b) for k, b in bands.items()},
        "bands": bands,
    }


def write_log_csv(log, path):
    """CSV with the fixed column order of :func:`log_columns`, 17 significant digits."""
    data = log.as_matrix()
    h_col = log_columns().index("h")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(log_columns())
        for row in data:
            cells = ["%.17g" % v for v in row]
            cells[h_col] = str(int(row[h_col]))
            w.writerow(cells)


def read_log_csv(path, config=None, switches=()):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != log_columns():
            raise ValueError("unexpected trajectory CSV header")
        data = np.array([[float(c) for c in row] for row in r])
    return TrajectoryLog.from_matrix(data.reshape(-1, len(header)), switches, config)


def write_metrics(metrics, path):
    with open(path, "w") as fh:
        json.dump(metrics, fh, indent=2)


def output_dir(explicit=None):
    return explicit or os.environ.get(OUT_DIR_ENV) or "runs"
