"""Critical points of the free-period action: supercritical minimization in a
free homotopy class and a numerical mountain pass over discrete path families,
with Palais-Smale style diagnostics and energy sweeps.

The mountain pass keeps a P+1 node path from a negative-action loop to a
near-constant loop, repeatedly pulls the high nodes down by preconditioned
Armijo steps while re-spacing nodes to uniform separation in the loop-space
metric, then finishes the maximal node with a climbing step that reverses the
gradient component along the local path tangent.
"""

from __future__ import annotations

import math
import zlib
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve
from scipy.spatial.distance import cdist

from . import geometry as geo
from . import loopspace as ls
from . import dynamics as dyn
from . import mane
from .action import ActionReport, loop_action_grad, raw_action_grad, _flux_constant
from .errors import ModelError, NoNegativeSeedError, NotBoundedBelowError


@dataclass
class SolverConfig:
    max_iters: int = 2000
    grad_tol: float = 1e-5         # loop-space gradient norm threshold
    step_init: float = 1.0
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    T_floor: float = 1e-4          # period kept strictly positive by projection
    N: int = 512
    restarts: int = 8
    P: int = 16                    # mountain-pass path segments
    T1: float = 1e-3               # period of the constant-loop endpoint
    seed: int = 0
    string_iters: int = 150
    refine_iters: int = 4000
    stall_window: int = 25
    snapshot_stride: int = 10
    mono_tol: float = 1e-3

    def __post_init__(self):
        positive = {
            "max_iters": self.max_iters, "grad_tol": self.grad_tol,
            "step_init": self.step_init, "armijo_c1": self.armijo_c1,
            "armijo_shrink": self.armijo_shrink, "T_floor": self.T_floor,
            "N": self.N, "restarts": self.restarts, "P": self.P,
            "T1": self.T1, "string_iters": self.string_iters,
            "refine_iters": self.refine_iters,
            "snapshot_stride": self.snapshot_stride,
        }
        for name, val in positive.items():
            if not val > 0:
                raise ModelError(f"solver config field {name} must be positive")
        if not self.grad_tol < 1.0:
            raise ModelError("grad_tol must be below 1")
        if self.P < 8:
            raise ModelError("mountain-pass paths need P >= 8")
        if self.N < ls.MIN_POINTS:
            raise ModelError(f"loop resolution N must be >= {ls.MIN_POINTS}")


@dataclass
class PSDiagnostics:
    """Per-iterate series (e_n, l_n, T_n, grad norm, S_k) plus the sup of
    |theta|_g over visited points and sparse loop snapshots."""

    e: list[float] = field(default_factory=list)
    l: list[float] = field(default_factory=list)
    T: list[float] = field(default_factory=list)
    grad: list[float] = field(default_factory=list)
    S: list[float] = field(default_factory=list)
    theta_sup: float = 0.0
    cs_violations: list[int] = field(default_factory=list)
    snapshots: list[tuple[int, np.ndarray, float]] = field(default_factory=list)
    snapshot_stride: int = 10

    def record(self, model, pts, T, e, length, grad_norm, S):
        idx = len(self.S)
        self.e.append(float(e))
        self.l.append(float(length))
        self.T.append(float(T))
        self.grad.append(float(grad_norm))
        self.S.append(float(S))
        if length * length > 2.0 * T * e + 1e-12:
            self.cs_violations.append(idx)
        th = geo.eval_theta(model, pts)
        sup = float(geo.covector_norm(model, pts, th).max())
        self.theta_sup = max(self.theta_sup, sup)
        if idx % self.snapshot_stride == 0:
            self.snapshots.append((idx, pts.copy(), float(T)))

    def series(self) -> dict:
        return {"e": list(self.e), "l": list(self.l), "T": list(self.T),
                "grad": list(self.grad), "S": list(self.S),
                "theta_sup": self.theta_sup}


@dataclass
class MinimizeResult:
    timed: ls.TimedLoop
    report: ActionReport
    diagnostics: PSDiagnostics
    converged: bool
    closure: dyn.ClosureResidual | None
    flags: list[str] = field(default_factory=list)


@dataclass
class MountainPassResult:
    mu_estimate: float
    saddle: ls.TimedLoop
    saddle_report: ActionReport
    path_nodes: list[ls.TimedLoop]
    sup_history: list[float]
    verification: dyn.ClosureResidual | None
    diagnostics: PSDiagnostics
    converged: bool
    not_strict_minimizer: bool
    flags: list[str] = field(default_factory=list)


@dataclass
class SweepEntry:
    k: float
    mu: float | None
    converged: bool
    position_gap: float | None
    energy_error: float | None
    flags: list[str]
    error: str | None = None
    result: MountainPassResult | None = None


@dataclass
class SweepResult:
    entries: list[SweepEntry]
    monotone_fraction: float
    mono_tol: float


# ---------------------------------------------------------------------------
# Shared node machinery (a node is a raw (points, T) pair of one class)


class _NodeProblem:
    """Evaluation context binding model, class closure and energy level."""

    def __init__(self, model, cls, k, cfg):
        self.model = model
        self.cls = cls
        self.k = k
        self.cfg = cfg
        scale, offset = geo.deck_affine(model, cls)
        self.scale = scale
        self.offset = offset
        self.flux_const = _flux_constant(model, cls)

    def eval(self, pts, T):
        total, kinetic, length, _, gpts, gT = raw_action_grad(
            self.model, pts, T, self.k, self.scale, self.offset,
            self.flux_const)
        return total, kinetic, length, gpts, gT

    def precondition(self, gpts):
        factor = ls._gram_cholesky(gpts.shape[0], self.scale)
        return cho_solve(factor, gpts)

    def timed(self, pts, T) -> ls.TimedLoop:
        loop = ls.DiscreteLoop(pts, self.cls, self.scale,
                               (self.offset[0], self.offset[1]))
        return ls.TimedLoop(loop, T)


def _armijo_step(prob, pts, T, value, gpts, gT, pre, step0):
    """One projected Armijo step along the preconditioned gradient.

    Returns (pts, T, value, gpts, gT, accepted_alpha) with accepted_alpha None
    on failure; accepted steps strictly decrease the objective.
    """
    cfg = prob.cfg
    slope = float(np.einsum("ni,ni->", gpts, pre)) + gT * gT
    alpha = step0
    while alpha > 1e-14:
        trial_pts = pts - alpha * pre
        trial_T = max(T - alpha * gT, cfg.T_floor)
        if np.all(geo.in_domain(prob.model, trial_pts)):
            t_val, t_kin, t_len, t_gpts, t_gT = prob.eval(trial_pts, trial_T)
            if t_val <= value - cfg.armijo_c1 * alpha * slope and t_val < value:
                return trial_pts, trial_T, t_val, t_kin, t_len, t_gpts, t_gT, alpha
        alpha *= cfg.armijo_shrink
    return None


def _grad_norm(gpts, gT, pre):
    """Loop-space norm of the gradient: sqrt(<g_l2, G_h1> + gT^2)."""
    return math.sqrt(max(float(np.einsum("ni,ni->", gpts, pre)) + gT * gT, 0.0))


# ---------------------------------------------------------------------------
# Supercritical minimization


def minimize(model: geo.SurfaceModel, k: float, cls: geo.FreeHomotopyClass,
             init: ls.TimedLoop | None = None,
             cfg: SolverConfig | None = None) -> MinimizeResult:
    """Global minimization of S_k in a free homotopy class by preconditioned
    Armijo descent on (loop, T)."""
    cfg = cfg or SolverConfig()
    if not (k > 0.0 and math.isfinite(k)):
        raise ModelError("energy k must be a positive real")

    if cls.trivial:
        neg = mane.negative_loop_search(
            model, k, mane.SearchBudget(restarts=cfg.restarts, seed=cfg.seed))
        if neg is not None:
            raise NotBoundedBelowError(
                "not bounded below here: a contractible loop with negative "
                f"action exists at k = {k:g}")
    else:
        if not model.has_global_primitive:
            raise NotBoundedBelowError(
                "nontrivial-class minimization needs a flux-defined setup "
                f"(exact sigma); {model.kind} with B = {model.B:g} has none")
        if not k > model.c_upper_declared:
            raise NotBoundedBelowError(
                f"k = {k:g} is not above the model's declared critical upper "
                f"bound {model.c_upper_declared:g}")

    prob = _NodeProblem(model, cls, k, cfg)
    if init is None:
        loop = ls.make_class_loop(model, cls, cfg.N)
        length = ls.loop_length(model, loop)
        T = max(length / math.sqrt(2.0 * k), 1.0e2 * cfg.T_floor) if length > 0 \
            else 1.0
        init = ls.TimedLoop(loop, T)
    pts = init.loop.points.copy()
    T = float(init.T)

    diag = PSDiagnostics(snapshot_stride=cfg.snapshot_stride)
    value, kinetic, length, gpts, gT = prob.eval(pts, T)
    pre = prob.precondition(gpts)
    gnorm = _grad_norm(gpts, gT, pre)
    diag.record(model, pts, T, kinetic, length, gnorm, value)

    flags: list[str] = []
    converged = gnorm < cfg.grad_tol
    step = cfg.step_init
    for _ in range(cfg.max_iters):
        if converged:
            break
        out = _armijo_step(prob, pts, T, value, gpts, gT, pre, step)
        if out is None:
            flags.append("stagnation")
            break
        pts, T, value, kinetic, length, gpts, gT, alpha = out
        step = min(alpha * 2.0, cfg.step_init * 8.0)
        pre = prob.precondition(gpts)
        gnorm = _grad_norm(gpts, gT, pre)
        diag.record(model, pts, T, kinetic, length, gnorm, value)
        converged = gnorm < cfg.grad_tol
    if not converged and "stagnation" not in flags:
        flags.append("unconverged")
    if T <= cfg.T_floor * (1.0 + 1e-9) and abs(value) < 1e-2:
        flags.append("degenerating-to-zero-period")
    if max(diag.T) >= 1e4:
        flags.append("period-upper-bound-exceeded")

    timed = prob.timed(pts, T)
    report, _ = loop_action_grad(model, timed, k)
    closure = None
    try:
        closure = dyn.closure_residual(model, timed, k)
    except Exception as exc:  # verification is advisory for failed runs
        flags.append(f"closure-verification-failed:{type(exc).__name__}")
    return MinimizeResult(timed=timed, report=report, diagnostics=diag,
                          converged=converged, closure=closure, flags=flags)


# ---------------------------------------------------------------------------
# Mountain pass


def _h1_node_dist(pts_a, T_a, pts_b, T_b, scale):
    dxi = pts_b - pts_a
    N = dxi.shape[0]
    d = np.concatenate([dxi[1:], scale * dxi[:1]], axis=0) - dxi
    val = float(dxi[0] @ dxi[0]) + N * float(np.einsum("ni,ni->", d, d))
    return math.sqrt(val + (T_b - T_a) ** 2)


def _respace(node_pts, node_T, scale):
    """Re-interpolate path nodes to uniform spacing in the loop-space metric;
    endpoints are pinned exactly."""
    P = len(node_pts) - 1
    dists = np.array([
        _h1_node_dist(node_pts[j], node_T[j], node_pts[j + 1], node_T[j + 1],
                      scale)
        for j in range(P)
    ])
    cum = np.concatenate([[0.0], np.cumsum(dists)])
    total = cum[-1]
    if total <= 0.0:
        return node_pts, node_T
    new_pts = [node_pts[0]]
    new_T = [node_T[0]]
    for j in range(1, P):
        target = total * j / P
        idx = int(np.searchsorted(cum, target, side="right") - 1)
        idx = min(max(idx, 0), P - 1)
        w = (target - cum[idx]) / dists[idx] if dists[idx] > 0 else 0.0
        new_pts.append((1.0 - w) * node_pts[idx] + w * node_pts[idx + 1])
        new_T.append((1.0 - w) * node_T[idx] + w * node_T[idx + 1])
    new_pts.append(node_pts[P])
    new_T.append(node_T[P])
    return new_pts, new_T


def _climb(prob, pts, T, tan_xi, tan_T, cfg, diag):
    """Refine a near-saddle node: reverse the gradient component along the
    path tangent and step, accepting only when the gradient norm drops."""
    nrm = _h1_node_dist(np.zeros_like(tan_xi), 0.0, tan_xi, tan_T, prob.scale)
    if nrm <= 0.0:
        return pts, T, False
    t_xi, t_T = tan_xi / nrm, tan_T / nrm
    value, kinetic, length, gpts, gT = prob.eval(pts, T)
    pre = prob.precondition(gpts)
    gnorm = _grad_norm(gpts, gT, pre)
    diag.record(prob.model, pts, T, kinetic, length, gnorm, value)
    alpha = 0.5
    for _ in range(cfg.refine_iters):
        if gnorm < cfg.grad_tol:
            return pts, T, True
        c_par = float(np.einsum("ni,ni->", gpts, t_xi)) + gT * t_T
        d_xi = pre - 2.0 * c_par * t_xi
        d_T = gT - 2.0 * c_par * t_T
        accepted = False
        while alpha > 1e-13:
            trial_pts = pts - alpha * d_xi
            trial_T = max(T - alpha * d_T, cfg.T_floor)
            if np.all(geo.in_domain(prob.model, trial_pts)):
                t_val, t_kin, t_len, t_gpts, t_gT = prob.eval(trial_pts, trial_T)
                t_pre = prob.precondition(t_gpts)
                t_norm = _grad_norm(t_gpts, t_gT, t_pre)
                if t_norm < gnorm:
                    pts, T = trial_pts, trial_T
                    value, kinetic, length = t_val, t_kin, t_len
                    gpts, gT, pre, gnorm = t_gpts, t_gT, t_pre, t_norm
                    diag.record(prob.model, pts, T, kinetic, length, gnorm, value)
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            return pts, T, gnorm < cfg.grad_tol
        alpha = min(alpha * 1.5, 2.0)
    return pts, T, gnorm < cfg.grad_tol


def _random_tangent(rng, N):
    t = np.arange(N) / N
    xi = np.zeros((N, 2))
    for m in (1, 2, 3):
        coef = rng.normal(size=(2, 2)) / m
        xi[:, 0] += coef[0, 0] * np.cos(2 * np.pi * m * t) + coef[0, 1] * np.sin(2 * np.pi * m * t)
        xi[:, 1] += coef[1, 0] * np.cos(2 * np.pi * m * t) + coef[1, 1] * np.sin(2 * np.pi * m * t)
    scale = np.abs(xi).max()
    return xi / scale if scale > 0 else xi, float(rng.normal())


def mountain_pass(model: geo.SurfaceModel, k: float,
                  cfg: SolverConfig | None = None) -> MountainPassResult:
    """Numerical mountain pass for contractible loops at energy k."""
    cfg = cfg or SolverConfig()
    seed = ls.negative_action_seed(model, k, N=cfg.N)  # NoNegativeSeedError if absent
    seed_loop = ls.resample(seed.loop, cfg.N) if seed.loop.N != cfg.N else seed.loop
    pts0 = seed_loop.points
    T0 = seed.T
    base = pts0[0].copy()

    prob = _NodeProblem(model, geo.TRIVIAL_CLASS, k, cfg)
    P = cfg.P
    node_pts = []
    node_T = []
    for j in range(P + 1):
        s = j / P
        node_pts.append(base + (1.0 - s) * (pts0 - base))
        node_T.append((1.0 - s) * T0 + s * cfg.T1)

    diag = PSDiagnostics(snapshot_stride=cfg.snapshot_stride)
    sup_history: list[float] = []
    flags: list[str] = []

    def eval_all():
        return [prob.eval(node_pts[j], node_T[j]) for j in range(P + 1)]

    evals = eval_all()
    steps = [cfg.step_init] * (P + 1)
    for _ in range(cfg.string_iters):
        values = [e[0] for e in evals]
        j_star = int(np.argmax(values))
        sup_history.append(values[j_star])
        if 0 < j_star < P:
            _, _, _, gpts, gT = evals[j_star]
            pre = prob.precondition(gpts)
            if _grad_norm(gpts, gT, pre) < cfg.grad_tol:
                break
        spacing = sum(
            _h1_node_dist(node_pts[j], node_T[j], node_pts[j + 1],
                          node_T[j + 1], prob.scale)
            for j in range(P)) / P
        cutoff = min(0.0, 0.25 * values[0])
        for j in range(1, P):
            value, kinetic, length, gpts, gT = evals[j]
            if value <= cutoff and j != j_star:
                continue
            pre = prob.precondition(gpts)
            gnorm = _grad_norm(gpts, gT, pre)
            # Moving a node more than a fraction of the node spacing per sweep
            # tangles the path; the displacement of a step alpha is alpha*gnorm.
            cap = 0.5 * spacing / max(gnorm, 1e-30)
            out = _armijo_step(prob, node_pts[j], node_T[j], value, gpts, gT,
                               pre, min(steps[j], cap))
            if out is None:
                continue
            node_pts[j], node_T[j] = out[0], out[1]
            evals[j] = (out[2], out[3], out[4], out[5], out[6])
            steps[j] = min(out[7] * 2.0, cfg.step_init * 8.0)
        node_pts, node_T = _respace(node_pts, node_T, prob.scale)
        evals = eval_all()
        w = cfg.stall_window
        if len(sup_history) > w and \
                sup_history[-w] - sup_history[-1] < 1e-10 * (1.0 + abs(sup_history[-1])):
            break

    # Refine maximal nodes until the refined node is the path max; a tangled
    # path can cross the ridge more than once, so several may need finishing.
    refined_ok = False
    saddle_idx = None
    tried: set[int] = set()
    for _ in range(4):
        values = [e[0] for e in evals]
        j_star = int(np.argmax(values))
        j_star = min(max(j_star, 1), P - 1)
        if j_star in tried:
            saddle_idx = j_star
            break
        tried.add(j_star)
        tan_xi = node_pts[j_star + 1] - node_pts[j_star - 1]
        tan_T = node_T[j_star + 1] - node_T[j_star - 1]
        node_pts[j_star], node_T[j_star], refined = _climb(
            prob, node_pts[j_star], node_T[j_star], tan_xi, tan_T, cfg, diag)
        evals = eval_all()
        values = [e[0] for e in evals]
        saddle_idx = int(np.argmax(values))
        sup_history.append(values[saddle_idx])
        if saddle_idx == j_star:
            refined_ok = refined
            break
    values = [e[0] for e in evals]
    saddle_idx = int(np.argmax(values)) if saddle_idx is None else saddle_idx
    mu = values[saddle_idx]
    converged = refined_ok and saddle_idx == int(np.argmax(values))
    if not converged:
        flags.append("stagnation")
    if mu <= 0.0:
        converged = False
        flags.append("nonpositive-mu")

    saddle = prob.timed(node_pts[saddle_idx], node_T[saddle_idx])
    saddle_report, _ = loop_action_grad(model, saddle, k)
    verification = None
    try:
        verification = dyn.closure_residual(model, saddle, k)
    except Exception as exc:
        flags.append(f"closure-verification-failed:{type(exc).__name__}")

    # Saddle certificate: probing must find a strictly descending direction,
    # so the critical point is not a strict local minimizer.  The path tangent
    # approximates the unstable mode and joins the random probe directions.
    rng = np.random.default_rng(cfg.seed)
    probes = []
    tan_xi = node_pts[min(saddle_idx + 1, P)] - node_pts[max(saddle_idx - 1, 0)]
    tan_T = node_T[min(saddle_idx + 1, P)] - node_T[max(saddle_idx - 1, 0)]
    tan_mag = max(np.abs(tan_xi).max(), abs(tan_T), 1e-30)
    probes.append((tan_xi / tan_mag, tan_T / tan_mag))
    probes.append((-tan_xi / tan_mag, -tan_T / tan_mag))
    while len(probes) < 16:
        probes.append(_random_tangent(rng, cfg.N))
    not_minimizer = False
    for xi, psi in probes:
        for scale in (1e-2, 1e-3):
            trial_pts = node_pts[saddle_idx] + scale * xi
            trial_T = max(node_T[saddle_idx] + scale * psi, cfg.T_floor)
            if not np.all(geo.in_domain(model, trial_pts)):
                continue
            t_val = prob.eval(trial_pts, trial_T)[0]
            if t_val < mu:
                not_minimizer = True
                break
        if not_minimizer:
            break

    path_nodes = [prob.timed(node_pts[j], node_T[j]) for j in range(P + 1)]
    return MountainPassResult(
        mu_estimate=mu, saddle=saddle, saddle_report=saddle_report,
        path_nodes=path_nodes, sup_history=sup_history,
        verification=verification, diagnostics=diag, converged=converged,
        not_strict_minimizer=not_minimizer, flags=flags)


# ---------------------------------------------------------------------------
# Energy sweep


def sweep_seed(base_seed: int, k: float) -> int:
    """Deterministic per-energy seed: duplicates of k get identical work."""
    return (base_seed * 1000003 + zlib.crc32(struct.pack("<d", k))) % (2 ** 31)


def sweep_single(model: geo.SurfaceModel, k: float,
                 cfg: SolverConfig) -> SweepEntry:
    cfg_k = replace(cfg, seed=sweep_seed(cfg.seed, k))
    try:
        res = mountain_pass(model, k, cfg_k)
    except (NoNegativeSeedError, NotBoundedBelowError) as exc:
        return SweepEntry(k=k, mu=None, converged=False, position_gap=None,
                          energy_error=None, flags=["error"], error=str(exc))
    ver = res.verification
    return SweepEntry(
        k=k, mu=res.mu_estimate, converged=res.converged,
        position_gap=ver.position_gap if ver else None,
        energy_error=ver.energy_error if ver else None,
        flags=list(res.flags), result=res)


def energy_sweep(model: geo.SurfaceModel, k_values,
                 cfg: SolverConfig | None = None) -> SweepResult:
    """Mountain pass per energy; individual failures are recorded and the
    sweep continues.  Entries are reported in input (ascending) order."""
    cfg = cfg or SolverConfig()
    ks = [float(k) for k in k_values]
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ModelError("k_values must be sorted ascending")
    entries = [sweep_single(model, k, cfg) for k in ks]
    mus = [(e.k, e.mu) for e in entries if e.mu is not None]
    ok_pairs = total_pairs = 0
    for (ka, ma), (kb, mb) in zip(mus, mus[1:]):
        total_pairs += 1
        if mb >= ma - cfg.mono_tol:
            ok_pairs += 1
    fraction = ok_pairs / total_pairs if total_pairs else 1.0
    return SweepResult(entries=entries, monotone_fraction=fraction,
                       mono_tol=cfg.mono_tol)


# ---------------------------------------------------------------------------
# Palais-Smale monitor


@dataclass
class PSConstants:
    """Constants entering the energy bound (A + b2 B + |a_nu|) / (2 b1); the
    quadratic lower bound |v|^2/2 - |theta| |v| >= |v|^2/4 - |theta|^2 gives
    b1 = 1/4 and b2 = sup |theta|_g squared."""

    theta_sup: float | None = None
    a_nu_abs: float = 0.0
    b1: float = 0.25
    b2: float | None = None


@dataclass
class PSReport:
    bound_b: float
    A_used: float
    B_used: float
    theta_sup_used: float
    energy_violations: list[int]
    cs_violations: list[int]
    hausdorff_C: float | None
    n_iterates: int


def ps_monitor(diag: PSDiagnostics, constants: PSConstants | None = None) -> PSReport:
    """Check the recorded iterate series against the energy bound and the
    discrete Cauchy-Schwarz invariant; report path continuity of snapshots."""
    constants = constants or PSConstants()
    theta_sup = constants.theta_sup if constants.theta_sup is not None \
        else diag.theta_sup
    b2 = constants.b2 if constants.b2 is not None else theta_sup ** 2
    if not diag.S:
        return PSReport(bound_b=0.0, A_used=0.0, B_used=0.0,
                        theta_sup_used=theta_sup, energy_violations=[],
                        cs_violations=[], hausdorff_C=None, n_iterates=0)
    A = max(abs(s) for s in diag.S)
    B = max(diag.T)
    bound = (A + b2 * B + constants.a_nu_abs) / (2.0 * constants.b1)
    energy_violations = [i for i, e in enumerate(diag.e) if e > bound * (1 + 1e-12)]

    cs_violations = list(diag.cs_violations)
    for i, (e, length, T) in enumerate(zip(diag.e, diag.l, diag.T)):
        if length * length > 2.0 * T * e + 1e-12 and i not in cs_violations:
            cs_violations.append(i)

    ratios = []
    snaps = diag.snapshots
    for (i0, p0, t0), (i1, p1, t1) in zip(snaps, snaps[1:]):
        hd = max(cdist(p0, p1).min(axis=1).max(),
                 cdist(p1, p0).min(axis=1).max())
        r = _h1_node_dist(p0, t0, p1, t1, 1.0)
        if r > 1e-14:
            ratios.append(hd / r)
    hausdorff_C = max(ratios) if ratios else None
    return PSReport(bound_b=bound, A_used=A, B_used=B,
                    theta_sup_used=theta_sup,
                    energy_violations=energy_violations,
                    cs_violations=sorted(cs_violations),
                    hausdorff_C=hausdorff_C, n_iterates=len(diag.S))
