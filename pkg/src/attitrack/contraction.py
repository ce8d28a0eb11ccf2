"""Numerical contraction certificates for the observer/controller loop.

Error coordinates used throughout (b_tilde = b_hat - b, s = omega - omega_r)::

    d b_tilde = J_o b_tilde - lambda_c P s
    M ds      = (S(M omega) - K_c + 2 lambda_c P_a) s - G^T z / 2 + (lambda_c P^T - F) b_tilde
    dz        = -lambda_c z + G s / 2

with J_o = -K_o J(q_f)^T J(q) / 2, P = M G(z), P_a the skew part of P and
F = S(omega_r) M - K_c + M S(R(he)^T omega_d). A virtual system in
xi = (xi_b, xi_w, xi_z) having both (b_hat, omega_r, z) and (b, omega, 0) as
particular solutions has, in the rows (d xi_b, M d xi_w, d xi_z), the Jacobian::

    J_oc = [[J_o,                 lambda_c P,                     0       ],
            [F - lambda_c P^T,    S(M omega) - K_c + 2 lambda_c P_a, G^T/2 ],
            [0,                   -G/2,                           -lambda_c I]]

Subtracting the skew-symmetric couplings leaves the block lower-triangular

    J_s = [[J_o, 0], [[F; 0], diag(-K_c, -lambda_c I)]]

whose quadratic form under the metric diag(I, M, I) equals that of J_oc.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .attmath import _gmat, _rotation, cross, jmat, jmul, jtmul, skew
from .control import ControllerGains, switched_control
from .estimation import ObserverGains, ObserverState, ideal_observer_rates
from .plant import (BBAR, OMEGA, QD, QF, Q, STATE_SIZE, InertiaModel, ReferenceState,
                    StepInputs, _rates)

FD_STEP = 1e-6

# pass thresholds for the per-sample checks
TOL_JO = 1e-8
TOL_BLOCK = 1e-12
TOL_SKEW = 1e-10
TOL_FD = 1e-5
TOL_LOG = 1e-9


def _sym(A):
    return 0.5 * (A + A.T)


def _lmax_sym(A):
    return float(np.linalg.eigvalsh(_sym(A))[-1])


def observer_jacobian(q, q_f, K_o):
    """J_o = -K_o J(q_f)^T J(q) / 2."""
    K_o = np.asarray(K_o, dtype=float)
    if K_o.ndim == 0:
        K_o = K_o * np.eye(3)
    return -0.5 * K_o @ (jmat(q_f).T @ jmat(q))


def observer_bound(K_o, gap):
    """Upper bound -(lambda_min(K_o) - lambda_max(K_o) gap)/2 on the top eigenvalue of sym(J_o)."""
    ev = np.linalg.eigvalsh(np.asarray(K_o, dtype=float))
    return float(-0.5 * (ev[0] - ev[-1] * gap))


def coupling_matrix(omega_r, omega_d, he, K_c, inertia):
    """F = S(omega_r) M - K_c + M S(R(he)^T omega_d)."""
    M = inertia.M
    w_d_body = _rotation(he).T @ np.asarray(omega_d, dtype=float)
    return skew(omega_r) @ M - np.asarray(K_c, dtype=float) + M @ skew(w_d_body)


def controller_jacobian(K_c, lambda_c):
    """diag(-K_c, -lambda_c I), the 6x6 controller block."""
    J = np.zeros((6, 6))
    J[:3, :3] = -np.asarray(K_c, dtype=float)
    J[3:, 3:] = -lambda_c * np.eye(3)
    return J


def metric(inertia):
    """diag(I, M, I), shared by both values of h."""
    W = np.eye(9)
    W[3:6, 3:6] = inertia.M
    return W


@dataclass(frozen=True)
class Frozen:
    """Quantities at one instant that the virtual field treats as fixed."""

    q: np.ndarray
    q_f: np.ndarray
    he: np.ndarray
    z: np.ndarray
    omega: np.ndarray
    omega_dot: np.ndarray
    omega_r: np.ndarray
    omega_d: np.ndarray
    b: np.ndarray
    b_dot: np.ndarray


def _blocks(fr, K_o, gains, inertia):
    M, lam = inertia.M, gains.lambda_c
    G = _gmat(fr.z)
    P = M @ G
    P_a = 0.5 * (P - P.T)
    J_o = observer_jacobian(fr.q, fr.q_f, K_o)
    F = coupling_matrix(fr.omega_r, fr.omega_d, fr.he, gains.K_c, inertia)
    return M, lam, G, P, P_a, J_o, F


def closed_loop_jacobian(fr, K_o, gains, inertia):
    """Analytic 9x9 J_oc at the frozen instant."""
    M, lam, G, P, P_a, J_o, F = _blocks(fr, K_o, gains, inertia)
    J = np.zeros((9, 9))
    J[0:3, 0:3] = J_o
    J[0:3, 3:6] = lam * P
    J[3:6, 0:3] = F - lam * P.T
    J[3:6, 3:6] = skew(M @ fr.omega) - gains.K_c + 2.0 * lam * P_a
    J[3:6, 6:9] = 0.5 * G.T
    J[6:9, 3:6] = -0.5 * G
    J[6:9, 6:9] = -lam * np.eye(3)
    return J


def hierarchical_jacobian(fr, K_o, gains, inertia):
    """Block lower-triangular J_s = [[J_o, 0], [[F; 0], J_c]]."""
    _, lam, _, _, _, J_o, F = _blocks(fr, K_o, gains, inertia)
    J = np.zeros((9, 9))
    J[0:3, 0:3] = J_o
    J[3:6, 0:3] = F
    J[3:9, 3:9] = controller_jacobian(gains.K_c, lam)
    return J


def virtual_field(xi, fr, K_o, gains, inertia):
    """Rows (d xi_b, M d xi_w, d xi_z) of the virtual system, coefficients frozen at ``fr``."""
    M, lam = inertia.M, gains.lambda_c
    xb, xw, xz = xi[0:3], xi[3:6], xi[6:9]
    G = _gmat(fr.z)
    P = M @ G
    P_a = 0.5 * (P - P.T)
    bt = xb - fr.b
    s = fr.omega - xw
    F = coupling_matrix(fr.omega_r, fr.omega_d, fr.he, gains.K_c, inertia)
    d_b = fr.b_dot - 0.5 * (K_o @ jtmul(fr.q_f, jmul(fr.q, bt))) - lam * (P @ s)
    Md_s = (cross(M @ fr.omega, s) - gains.K_c @ s + 2.0 * lam * (P_a @ s)
            - 0.5 * (G.T @ xz) + (lam * P.T - F) @ bt)
    d_w = M @ fr.omega_dot - Md_s
    d_z = -lam * xz + 0.5 * (G @ s)
    return np.concatenate((d_b, d_w, d_z))


def fd_jacobian(f, x, step=FD_STEP):
    """Central differences with a relative step."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    J = np.empty((len(f0), len(x)))
    for i in range(len(x)):
        hi = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += hi
        xm[i] -= hi
        J[:, i] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * hi)
    return J


def bias_error_rate(b_hat, q, q_f, omega, bias, gains):
    """d(b_hat - b)/dt of the ideal observer with a noise-free gyro and constant bias.

    The observer is evaluated through its own rate functions: b_bar is set
    so that the estimate equals ``b_hat`` and the derivative of
    ``b_bar - K_o J(q_f)^T q`` is formed from the filter and body rates.
    """
    K_o = gains.K_o
    b_bar = b_hat + K_o @ jtmul(q_f, q)
    state = ObserverState(b_bar, q_f)
    b_bar_rate, q_f_rate = ideal_observer_rates(state, q, omega + bias - b_hat, gains)
    q_rate = 0.5 * jmul(q, omega)
    return b_bar_rate - K_o @ (jtmul(q_f_rate, q) + jtmul(q_f, q_rate))


# ---------------------------------------------------------------- trajectories

@dataclass
class JacobianReport:
    t: float
    h: int
    lambda_max_sym_Jo: float
    jo_bound: float
    lambda_max_sym_Jc: float
    norm_F: float
    hierarchy_weight: float
    block_zero_residual: float
    skew_residual: float
    fd_mismatch: float
    analysis_residual: float
    log_residual: float
    passed: bool


REPORT_FIELDS = [f.name for f in dataclasses.fields(JacobianReport)]


class _Loop:
    """Continuous-time closed loop (noise-free gyro) rebuilt from a config."""

    def __init__(self, config):
        from .sim import _observer_rate_fn, make_reference

        self.inertia = InertiaModel(config.inertia)
        self.gains = ControllerGains(config.K_c, config.lambda_c)
        self.obs_gains = ObserverGains(config.K_o, config.gamma, config.lambda_c)
        self.reference = make_reference(config)
        self._rate_fn = _observer_rate_fn

    def outputs(self, t, x, h, bias):
        omega_d, omega_d_dot = self.reference(t)
        ref = ReferenceState(x[QD], omega_d, omega_d_dot)
        obs = ObserverState(x[BBAR], x[QF])
        return switched_control(x[Q], x[OMEGA] + bias, ref, obs, h,
                                self.gains, self.obs_gains, self.inertia)

    def rates(self, t, x, h, bias):
        out = self.outputs(t, x, h, bias)
        omega_g = x[OMEGA] + bias
        inputs = StepInputs(out.tau, omega_g, self._rate_fn(h, omega_g, self.inertia, self.obs_gains))
        return _rates(t, x, inputs, self.inertia, self.reference)

    def virtual_state(self, t, x, h, bias):
        out = self.outputs(t, x, h, bias)
        return np.concatenate((out.b_hat, out.omega_r, out.z))


def _sample_state(log, i):
    x = np.empty(STATE_SIZE)
    x[Q], x[OMEGA], x[QD] = log.q[i], log.omega[i], log.q_d[i]
    x[BBAR], x[QF] = log.b_bar[i], log.q_f[i]
    return x


def certify_sample(log, i, loop, gap_sup=None, fd=True):
    """Certificates at log sample ``i``; see the module docstring for the blocks."""
    t, h = float(log.t[i]), int(log.h[i])
    inertia, gains, K_o = loop.inertia, loop.gains, loop.obs_gains.K_o
    x = _sample_state(log, i)
    b = log.b[i]
    dx = loop.rates(t, x, h, b)
    out = loop.outputs(t, x, h, b)
    fr = Frozen(q=x[Q], q_f=x[QF], he=h * out.e, z=out.z, omega=x[OMEGA],
                omega_dot=dx[OMEGA], omega_r=out.omega_r, omega_d=log.omega_d[i],
                b=b, b_dot=np.zeros(3))

    J_oc = closed_loop_jacobian(fr, K_o, gains, inertia)
    J_s = hierarchical_jacobian(fr, K_o, gains, inertia)
    J_o = J_s[0:3, 0:3]
    J_c = J_s[3:9, 3:9]
    lmax_o = _lmax_sym(J_o)
    lmax_c = _lmax_sym(J_c)
    gap = float(np.linalg.norm(x[Q] - x[QF])) if gap_sup is None else gap_sup
    bound = observer_bound(K_o, gap)
    norm_F = float(np.linalg.norm(J_s[3:6, 0:3], 2))
    mu_o, mu_c = -lmax_o, -lmax_c
    weight = norm_F ** 2 / (4.0 * mu_o * mu_c) if mu_o > 0 and mu_c > 0 else math.inf
    block = float(np.max(np.abs(J_s[0:3, 3:9])))
    D = J_oc - J_s
    skew_res = float(np.linalg.norm(D + D.T, 2)) / max(1.0, float(np.linalg.norm(D, 2)))

    # the log must agree with the config it is certified against
    xi_bar = np.concatenate((out.b_hat, out.omega_r, out.z))
    logged = np.concatenate((log.b_hat[i], log.omega_r[i], log.z[i]))
    log_res = float(np.max(np.abs(xi_bar - logged)))

    fd_mis = an_res = 0.0
    if fd:
        field = lambda xi: virtual_field(xi, fr, K_o, gains, inertia)
        J_fd = fd_jacobian(field, xi_bar)
        fd_mis = float(np.max(np.abs(J_fd - J_oc))) / max(1.0, float(np.max(np.abs(J_oc))))
        # derivative of (b_hat, M omega_r, z) along the implemented closed loop
        eps = FD_STEP
        dxi = (loop.virtual_state(t + eps, x + eps * dx, h, b)
               - loop.virtual_state(t - eps, x - eps * dx, h, b)) / (2.0 * eps)
        dxi[3:6] = inertia.M @ dxi[3:6]
        an_res = float(np.max(np.abs(field(xi_bar) - dxi))) / max(1.0, float(np.max(np.abs(dxi))))

    passed = (lmax_o <= bound + TOL_JO and lmax_c < 0.0 and block <= TOL_BLOCK
              and skew_res <= TOL_SKEW and fd_mis <= TOL_FD and an_res <= TOL_FD
              and log_res <= TOL_LOG)
    return JacobianReport(t, h, lmax_o, bound, lmax_c, norm_F, weight, block,
                          skew_res, fd_mis, an_res, log_res, bool(passed))


def certify_trajectory(log, config=None, samples=None, fd_samples=None, seed=0, use_sup_gap=True):
    """Per-sample certificates along a logged run.

    ``samples`` selects log indices (default: all). Finite-difference checks
    run on ``fd_samples`` randomly chosen samples among them (default: all).
    With ``use_sup_gap`` the observer bound uses sup_t |q - q_f| over the
    whole log, otherwise the gap at each sample.
    """
    config = config if config is not None else log.config
    if config is None:
        raise ValueError("a scenario config is required")
    loop = _Loop(config)
    idx = np.arange(len(log)) if samples is None else np.asarray(samples, dtype=int)
    if fd_samples is None or fd_samples >= len(idx):
        fd_set = set(idx.tolist())
    else:
        rng = np.random.default_rng(seed)
        fd_set = set(rng.choice(idx, size=fd_samples, replace=False).tolist())
    gap_sup = float(np.max(np.linalg.norm(log.q - log.q_f, axis=1))) if use_sup_gap else None
    return [certify_sample(log, int(i), loop, gap_sup, int(i) in fd_set) for i in idx]


def summarize(reports):
    """Worst-case values over a list of reports, split by h."""
    out = {"samples": len(reports), "passed": all(r.passed for r in reports),
           "failures": sum(not r.passed for r in reports)}
    for key in ("lambda_max_sym_Jo", "lambda_max_sym_Jc", "norm_F", "hierarchy_weight",
                "block_zero_residual", "skew_residual", "fd_mismatch", "analysis_residual",
                "log_residual"):
        out[key] = max(getattr(r, key) for r in reports) if reports else None
    out["jo_margin"] = float(min(r.jo_bound - r.lambda_max_sym_Jo for r in reports)) if reports else None
    out["h_segments"] = sorted({r.h for r in reports})
    return out


def write_certificates_csv(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_FIELDS)
        for r in reports:
            row = []
            for name in REPORT_FIELDS:
                v = getattr(r, name)
                row.append(str(int(v)) if isinstance(v, (bool, int)) else "%.17g" % v)
            w.writerow(row)
