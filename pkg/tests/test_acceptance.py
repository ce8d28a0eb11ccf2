"""Acceptance criteria 1-8 at their stated tolerances.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the same checks. Simulation runs are shared through the
session ``scenarios`` fixture; a criterion's runtime counts the run it
owns plus its own checks.
"""

import math
import time

import numpy as np

from attitrack import contraction as C
from attitrack.attmath import jmat, jtmul, rotation_of
from attitrack.control import HysteresisState, hysteresis_update, sgn_hat
from attitrack.estimation import ObserverGains, simulate_observer
from attitrack.plant import InertiaModel, free_rotation
from attitrack.sim import BANDS, compute_metrics

U_BAR = np.array([1.0, 2.0, 3.0]) / math.sqrt(14.0)
Q0 = np.array([-0.2, *(math.sqrt(0.96) * U_BAR)])


def _settled_before(metrics, limit):
    ct = metrics["convergence_time"]
    return {f"{k} band before {limit} s": ct[k] is not None and ct[k] < limit for k in BANDS}


def test_criterion_1_j_properties(acceptance):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    xs, ys = rng.normal(size=(2, 1000, 4))
    ab = rng.normal(size=(1000, 2))
    worst = dict.fromkeys(range(1, 6), 0.0)
    for x, y, (a, b) in zip(xs, ys, ab):
        J = jmat(x)
        worst[1] = max(worst[1], np.max(np.abs(J.T @ J - (x @ x) * np.eye(3))))
        worst[2] = max(worst[2], np.max(np.abs(jtmul(x, a * x))))
        worst[3] = max(worst[3], np.max(np.abs(jmat(a * x + b * y) - (a * J + b * jmat(y)))))
        worst[4] = max(worst[4], np.max(np.abs(jtmul(x, y) + jtmul(y, x))))
        worst[5] = max(worst[5], abs(np.linalg.norm(J, 2) - np.linalg.norm(x)))
    # time derivative along smooth curves, by central differences
    fd_worst, h = 0.0, 1e-5
    for a, b, c in rng.normal(size=(25, 3, 4)):
        x = lambda t: a * np.sin(t) + b * np.cos(2 * t) + c * t ** 2
        xdot = lambda t: a * np.cos(t) - 2 * b * np.sin(2 * t) + 2 * c * t
        for t in np.linspace(-2, 2, 40):
            fd = (jmat(x(t + h)) - jmat(x(t - h))) / (2 * h)
            fd_worst = max(fd_worst, np.max(np.abs(fd - jmat(xdot(t)))))
    seconds = time.perf_counter() - t0
    checks = {f"property {k}": v <= 1e-12 for k, v in worst.items()}
    checks["property 6"] = fd_worst <= 1e-6
    ok, failed = acceptance(1, checks, seconds, 1.0)
    assert ok, failed


def test_criterion_2_observer_exact_rate(acceptance):
    t0 = time.perf_counter()
    omega = lambda t: np.array([0.3 * math.sin(t), 0.11, 0.2 * math.cos(0.5 * t)])
    run = simulate_observer(Q0, omega, [0.05, -0.05, 0.033], ObserverGains(1.0, 0.5), 10.0, 0.001,
                            ideal_filter=True)
    expected = run.error_norm[0] * np.exp(-run.t / 2)
    rel = float(np.max(np.abs(run.error_norm / expected - 1)))
    seconds = time.perf_counter() - t0
    ok, failed = acceptance(2, {f"relative error {rel:.2e} <= 1e-6": rel <= 1e-6}, seconds, 5.0)
    assert ok, failed


def test_criterion_3_scenario_1(acceptance, scenarios):
    log, run_seconds = scenarios.get(1)
    t0 = time.perf_counter()
    m = compute_metrics(log)
    checks = _settled_before(m, 60.0)
    t_w = m["convergence_time"]["omega_err_norm"]
    checks[f"omega band entry {t_w} s in [10, 50] s"] = t_w is not None and 10.0 <= t_w <= 50.0
    # post-transient window: second half of the run
    win = log.t >= 0.5 * log.t[-1]
    zn = np.linalg.norm(log.z[win], axis=1)
    slope = np.polyfit(log.t[win], np.log(zn), 1)[0]
    checks[f"log|z| slope {slope:.3g} < 0"] = slope < 0
    checks["no switches"] = m["switch_count"] == 0
    seconds = run_seconds + time.perf_counter() - t0
    ok, failed = acceptance(3, checks, seconds, 30.0)
    assert ok, failed


def test_criterion_4_scenario_2(acceptance, scenarios):
    log1 = scenarios.log(1)
    log, run_seconds = scenarios.get(2)
    t0 = time.perf_counter()
    m, m1 = compute_metrics(log), compute_metrics(log1)
    checks = {"exactly one switch": m["switch_count"] == 1}
    if m["switch_count"] == 1:
        sw = log.switches[0]
        before = log.t < sw["t"]
        checks["switch at first step with e0 <= -0.3"] = (
            sw["e0"] <= -0.3 < sw["e0_prev"] and bool(np.all(log.e[before, 0] > -0.3)))
        checks["h = -1 after the switch"] = bool(np.all(log.h[log.t >= sw["t"]] == -1))
    checks.update(_settled_before(m, 60.0))
    he = log.h[-1] * log.e[-1]
    checks["terminal he near identity"] = he[0] > 1 - 1e-4
    checks["accumulated rotation below scenario 1"] = m["accumulated_rotation"] < m1["accumulated_rotation"]
    checks["effort below scenario 1"] = (log.t[-1] == log1.t[-1] and m["effort"] < m1["effort"])
    seconds = run_seconds + time.perf_counter() - t0
    ok, failed = acceptance(4, checks, seconds, 30.0)
    assert ok, failed


def test_criterion_5_scenario_3(acceptance, scenarios):
    log2 = scenarios.log(2)
    log, run_seconds = scenarios.get(3)  # a singularity abort would raise here
    t0 = time.perf_counter()
    T = log.t[-1]
    rising = np.nonzero(np.diff(log.omega_err_rms) > 0)[0]
    t_s = log.t[rising[-1] + 1] if len(rising) else log.t[0]
    checks = {f"omega rms non-increasing from {t_s:.2f} s <= {0.3 * T:.0f} s": t_s <= 0.3 * T}
    checks[f"terminal bias rms {log.bias_err_rms[-1]:.4f} < 0.05"] = log.bias_err_rms[-1] < 0.05
    e2 = log2.effort[-1]
    e3_same_t = float(np.interp(log2.t[-1], log.t, log.effort))
    checks["effort within 25% of scenario 2 (terminal)"] = abs(log.effort[-1] / e2 - 1) <= 0.25
    checks["effort within 25% of scenario 2 (equal time)"] = abs(e3_same_t / e2 - 1) <= 0.25
    seconds = run_seconds + time.perf_counter() - t0
    ok, failed = acceptance(5, checks, seconds, 60.0)
    assert ok, failed


def test_criterion_6_contraction_certificates(acceptance, scenarios):
    logs = {n: scenarios.log(n) for n in (1, 2)}
    t0 = time.perf_counter()
    checks = {}
    for n, log in logs.items():
        reports = C.certify_trajectory(log, fd_samples=50, seed=n)
        fd = [r for r in reports if r.fd_mismatch > 0 or r.analysis_residual > 0]
        checks[f"scenario {n}: J_o bound at every sample"] = all(
            r.lambda_max_sym_Jo <= r.jo_bound + C.TOL_JO for r in reports)
        checks[f"scenario {n}: upper-right block zero"] = all(
            r.block_zero_residual <= 1e-12 for r in reports)
        checks[f"scenario {n}: 50 fd samples within 1e-5"] = (
            len(fd) == 50 and all(r.fd_mismatch <= 1e-5 for r in fd))
        checks[f"scenario {n}: all certificates pass"] = all(r.passed for r in reports)
        if n == 2:
            for h in (1, -1):
                seg = [r for r in reports if r.h == h]
                checks[f"scenario 2: h = {h} segment certified"] = bool(seg) and all(r.passed for r in seg)
    seconds = time.perf_counter() - t0
    ok, failed = acceptance(6, checks, seconds, 60.0)
    assert ok, failed


def test_criterion_7_hysteresis(acceptance):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    checks = {
        "h=1, e0=-0.2, delta=0.3 keeps h": hysteresis_update(HysteresisState(1, 0.3), -0.2).h == 1,
        "h=1, e0=-0.31, delta=0.3 switches": hysteresis_update(HysteresisState(1, 0.3), -0.31).h == -1,
        "delta=1 never switches": all(
            hysteresis_update(HysteresisState(h, 1.0), e0).h == h
            for h in (1, -1) for e0 in np.linspace(-1 + 1e-12, 1 - 1e-12, 2001)),
    }
    jumps, post_ok = 0, True
    while jumps < 1000:
        h, delta, e0 = int(rng.choice([-1, 1])), rng.uniform(0, 1), rng.uniform(-1, 1)
        if h * e0 > -delta:
            continue
        new = hysteresis_update(HysteresisState(h, delta), e0)
        post_ok &= new.h == sgn_hat(e0) and new.h * e0 >= 0
        jumps += 1
    checks["post-jump h*e0 >= 0 on 1000 jumps"] = bool(post_ok)
    seconds = time.perf_counter() - t0
    ok, failed = acceptance(7, checks, seconds, 1.0)
    assert ok, failed


def test_criterion_8_integrator(acceptance):
    t0 = time.perf_counter()
    inertia = InertiaModel(10 * U_BAR)
    full = InertiaModel(np.array([[4.0, 0.3, -0.2], [0.3, 6.0, 0.5], [-0.2, 0.5, 8.0]]))

    def terminal(dt):
        _, qs, ws = free_rotation([1, 0, 0, 0], [1.0, -2.0, 1.5], full, 2.0, dt)
        return np.concatenate((qs[-1], ws[-1]))

    ref = terminal(0.0025)
    order = math.log2(np.linalg.norm(terminal(0.04) - ref) / np.linalg.norm(terminal(0.02) - ref))
    _, qs, ws = free_rotation(Q0, 0.5 * U_BAR + np.array([0.1, 0, -0.2]), inertia, 10.0, 0.001)
    energy = np.einsum("ni,ij,nj->n", ws, inertia.M, ws) / 2
    momentum = np.linalg.norm(np.einsum("nij,nj->ni", [rotation_of(q) for q in qs], ws @ inertia.M),
                              axis=1)
    dE = float(np.max(np.abs(energy / energy[0] - 1)))
    dL = float(np.max(np.abs(momentum / momentum[0] - 1)))
    seconds = time.perf_counter() - t0
    checks = {f"order {order:.2f} >= 3.8": order >= 3.8,
              f"energy drift {dE:.1e} <= 1e-8": dE <= 1e-8,
              f"momentum drift {dL:.1e} <= 1e-8": dL <= 1e-8}
    ok, failed = acceptance(8, checks, seconds, 10.0)
    assert ok, failed
