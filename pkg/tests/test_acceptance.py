"""Acceptance suite: every criterion at its stated tolerance, one printed
PASS/FAIL line per criterion (run with -s to see them all)."""

import json
import math
import time

import numpy as np
import pytest

from magorb import cli
from magorb import dynamics as dyn
from magorb import geometry as geo
from magorb import loopspace as ls
from magorb import mane
from magorb import solvers
from magorb.action import action_S, grad_S

from conftest import random_loop_points


def report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def flat():
    return geo.make_model("flat_torus", B=1.0)


@pytest.fixture(scope="module")
def sigma_zero():
    return geo.make_model("exact_torus", eta_amplitude=0.0)


@pytest.fixture(scope="module")
def hyperbolic():
    return geo.make_model("hyperbolic_halfplane", B=1.0)


@pytest.fixture(scope="module")
def larmor_run(flat):
    cfg = solvers.SolverConfig(N=512, P=16)
    t0 = time.perf_counter()
    res = solvers.mountain_pass(flat, 0.5, cfg)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweep_run(flat):
    cfg = solvers.SolverConfig(N=512, P=16)
    ks = [float(k) for k in np.linspace(0.1, 1.0, 10)]
    t0 = time.perf_counter()
    sweep = solvers.energy_sweep(flat, ks, cfg)
    return sweep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def minimizer_run(sigma_zero):
    cfg = solvers.SolverConfig(N=512, grad_tol=1e-6)
    t0 = time.perf_counter()
    res = solvers.minimize(sigma_zero, 0.5, geo.FreeHomotopyClass(1, 0), None, cfg)
    return res, time.perf_counter() - t0


def test_criterion_1_larmor_mountain_pass(larmor_run):
    res, elapsed = larmor_run
    v = res.verification
    mu_ok = abs(res.mu_estimate - math.pi) <= 0.02 * math.pi
    t_ok = abs(res.saddle.T - 2 * math.pi) <= 0.02 * 2 * math.pi
    closure_ok = v.position_gap < 1e-3
    # mean energy of the verifying orbit vs k
    energy_ok = v.energy_error < 1e-3
    runtime_ok = elapsed < 60.0
    detail = (f"mu={res.mu_estimate:.6f} (pi {100*abs(res.mu_estimate-math.pi)/math.pi:.3f}%), "
              f"T={res.saddle.T:.5f}, gap={v.position_gap:.2e}, "
              f"energy_err={v.energy_error:.2e}, {elapsed:.1f}s")
    report(1, res.converged and mu_ok and t_ok and closure_ok and energy_ok
           and runtime_ok, detail)


def test_criterion_2_sweep_monotone(sweep_run):
    sweep, elapsed = sweep_run
    rel_errors = []
    mus = []
    for e in sweep.entries:
        assert e.mu is not None, f"sweep failed at k={e.k}"
        exact = 2 * math.pi * e.k
        rel_errors.append(abs(e.mu - exact) / exact)
        mus.append(e.mu)
    within = max(rel_errors) <= 0.02
    nondecreasing = all(b >= a for a, b in zip(mus, mus[1:]))
    runtime_ok = elapsed < 600.0
    detail = (f"max rel err {100*max(rel_errors):.4f}%, "
              f"non-decreasing={nondecreasing}, {elapsed:.1f}s")
    report(2, within and nondecreasing and runtime_ok, detail)


def test_criterion_3_supercritical_minimizer(minimizer_run):
    res, elapsed = minimizer_run
    v = res.closure
    value_ok = abs(res.report.total - 1.0) <= 1e-3
    period_ok = abs(res.timed.T - 1.0) <= 1e-3
    closure_ok = (v.position_gap < 1e-4 and v.velocity_gap < 1e-4
                  and v.energy_error < 1e-4)
    t_bounded = min(res.diagnostics.T) > 1e-4
    runtime_ok = elapsed < 30.0
    detail = (f"total={res.report.total:.6f}, T={res.timed.T:.6f}, "
              f"gap={v.position_gap:.2e}, min T_n={min(res.diagnostics.T):.4f}, "
              f"{elapsed:.1f}s")
    report(3, res.converged and value_ok and period_ok and closure_ok
           and t_bounded and runtime_ok, detail)


def test_criterion_4_critical_value(hyperbolic, flat):
    t0 = time.perf_counter()
    bracket = mane.critical_value_bracket(hyperbolic, 2.0, 0.02)
    hyp_ok = (bracket.lower <= 0.5 <= bracket.upper
              and bracket.upper - bracket.lower <= 0.1)
    upper_flat = mane.critical_value_upper(flat, 1.5, 32)
    torus_inf = upper_flat.is_infinite
    torus_neg = all(
        mane.negative_loop_search(flat, k) is not None
        for k in (1.0, 2.0, 3.0, 4.0, 5.0))
    elapsed = time.perf_counter() - t0
    runtime_ok = elapsed < 300.0
    detail = (f"hyperbolic bracket [{bracket.lower:.4f}, {bracket.upper:.4f}], "
              f"torus infinite={torus_inf}, torus negatives up to k=5: {torus_neg}, "
              f"{elapsed:.1f}s")
    report(4, hyp_ok and torus_inf and torus_neg and runtime_ok, detail)


def test_criterion_5_gradient_fidelity():
    models = [geo.make_model("flat_torus", B=1.0),
              geo.make_model("exact_torus", eta_amplitude=0.1),
              geo.make_model("hyperbolic_halfplane", B=1.0)]
    rng = np.random.default_rng(2024)
    worst = 0.0
    k, h = 0.5, 1e-5
    for model in models:
        for _ in range(50):
            N = 24
            pts = random_loop_points(model, rng, N)
            T = float(rng.uniform(0.5, 2.0))
            g = grad_S(model, ls.TimedLoop(ls.DiscreteLoop(pts), T), k, "l2")
            for _ in range(3):
                xi = rng.normal(size=(N, 2))
                psi = float(rng.normal())
                nrm = math.sqrt(float(np.einsum("ni,ni->", xi, xi)) + psi * psi)
                xi /= nrm
                psi /= nrm
                analytic = float(np.einsum("ni,ni->", g.xi, xi)) + g.psi * psi

                def S(s):
                    return action_S(
                        model,
                        ls.TimedLoop(ls.DiscreteLoop(pts + s * xi), T + s * psi),
                        k).total

                # 4th-order central stencil keeps the oracle's own truncation
                # error below the comparison tolerance.
                fd = (-S(2 * h) + 8 * S(h) - 8 * S(-h) + S(-2 * h)) / (12 * h)
                worst = max(worst, abs(analytic - fd) / max(abs(fd), 1e-8))
    report(5, worst < 1e-6, f"max relative error {worst:.2e} over 150 loops")


def test_criterion_6_flow_integrator(flat, hyperbolic):
    drift_ok = True
    for model, state in ((flat, dyn.PhaseState([0, 0], [1, 0])),
                         (hyperbolic, dyn.PhaseState([0.0, 1.0], [0.7, 0.4]))):
        orbit = dyn.integrate(model, state, 10.0)
        drift_ok = drift_ok and orbit.energy_drift < 1e-7

    errs = []
    for n in (256, 512):
        opts = dyn.IntegrateOptions(step=2 * math.pi / n, adaptive=False)
        orbit = dyn.integrate(flat, dyn.PhaseState([0, 0], [1, 0]), 2 * math.pi, opts)
        errs.append(float(np.linalg.norm(orbit.qs[-1] - orbit.qs[0])))
    ratio = errs[0] / errs[1]
    ratio_ok = 8.0 <= ratio <= 32.0

    orbit = dyn.integrate(flat, dyn.PhaseState([0, 0], [1, 0]), 2 * math.pi)
    larmor_gap = float(np.linalg.norm(orbit.qs[-1] - orbit.qs[0]))
    larmor_ok = larmor_gap < 1e-8
    detail = (f"drift<1e-7={drift_ok}, halving ratio={ratio:.1f}, "
              f"Larmor return={larmor_gap:.2e}")
    report(6, drift_ok and ratio_ok and larmor_ok, detail)


def test_criterion_7_invariant_suite(larmor_run, sweep_run, minimizer_run,
                                     flat, hyperbolic, sigma_zero):
    # Discrete Cauchy-Schwarz on every recorded iterate of the above runs.
    diags = [larmor_run[0].diagnostics, minimizer_run[0].diagnostics]
    diags += [e.result.diagnostics for e in sweep_run[0].entries if e.result]
    cs_ok = all(not solvers.ps_monitor(d).cs_violations for d in diags)

    # Action potential monotonicity and triangle inequality on a 3-point set.
    pts = [np.array([0.0, 0.0]), np.array([0.8, 0.3]), np.array([1.5, -0.4])]
    m_ab = {}
    for k in (0.5, 0.8):
        for i, j in ((0, 1), (1, 2), (0, 2)):
            m_ab[(i, j, k)] = mane.mane_potential(sigma_zero, pts[i], pts[j], k).value
    mono_ok = all(m_ab[(i, j, 0.5)] <= m_ab[(i, j, 0.8)] + 1e-3
                  for i, j in ((0, 1), (1, 2), (0, 2)))
    tri_ok = all(
        m_ab[(0, 2, k)] <= m_ab[(0, 1, k)] + m_ab[(1, 2, k)] + 1e-3
        for k in (0.5, 0.8))

    # Flux lift-invariance at 1e-10.
    from magorb.action import flux
    rng = np.random.default_rng(7)
    loop = ls.make_circle_loop((0.1, 0.2), 0.6, "ccw", 128)
    shifted = ls.DiscreteLoop(loop.points + np.array([2.0, -1.0]))
    flux_flat = abs(flux(flat, loop) - flux(flat, shifted)) < 1e-10
    hyp_loop = ls.DiscreteLoop(random_loop_points(hyperbolic, rng, 64))
    hyp_shift = ls.DiscreteLoop(3.0 * hyp_loop.points)
    flux_hyp = abs(flux(hyperbolic, hyp_loop) - flux(hyperbolic, hyp_shift)) < 1e-10

    # S_{k'} - S_k = (k' - k) T up to float rounding.
    slope_ok = True
    for model in (flat, hyperbolic):
        lp = ls.DiscreteLoop(random_loop_points(model, rng, 48))
        T = 1.3
        s1 = action_S(model, ls.TimedLoop(lp, T), 0.4).total
        s2 = action_S(model, ls.TimedLoop(lp, T), 0.9).total
        scale = max(abs(s1), abs(s2), 1.0)
        slope_ok = slope_ok and abs((s2 - s1) - 0.5 * T) <= 1e-12 * scale

    detail = (f"CS iterates={cs_ok}, m_k monotone={mono_ok}, triangle={tri_ok}, "
              f"flux lift-invariance={flux_flat and flux_hyp}, k-slope exact={slope_ok}")
    report(7, cs_ok and mono_ok and tri_ok and flux_flat and flux_hyp and slope_ok,
           detail)


def test_criterion_8_determinism(tmp_path):
    payload = {
        "model": {"kind": "flat_torus", "B": 1.0},
        "k_range": {"min": 0.2, "max": 0.6, "steps": 3},
        "N": 128, "P": 8, "seed": 42, "workers": 2,
    }
    outputs = []
    for tag in ("first", "second"):
        cfg_path = tmp_path / f"{tag}.json"
        cfg_path.write_text(json.dumps(dict(payload, output_dir=str(tmp_path / tag))))
        code = cli.main(["sweep", "--config", str(cfg_path)])
        assert code == cli.EXIT_OK
        outputs.append(tmp_path / tag)
    names = sorted(p.name for p in outputs[0].iterdir())
    identical = names == sorted(p.name for p in outputs[1].iterdir()) and all(
        (outputs[0] / n).read_bytes() == (outputs[1] / n).read_bytes()
        for n in names)
    report(8, identical, f"{len(names)} files bitwise-identical across reruns")
