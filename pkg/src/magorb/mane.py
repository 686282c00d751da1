"""Mane action potential m_k and critical value bracketing.

The potential is estimated by joint descent on (interior points, T) of the
discrete fixed-endpoint action from straight-line seeds with a multi-start
over T.  The critical value is bracketed from below by energies carrying a
certified negative-action loop and from above by a grid minimax of
inf_u sup_q |d_q u + theta_q|^2 / 2 with an annealed log-sum-exp smoothing of
the sup.  Infima below the critical value are genuinely unbounded and are
flagged, never returned as plain numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize as scipy_minimize

from . import geometry as geo
from . import loopspace as ls
from .errors import ModelError, NoNegativeSeedError
from .action import action_S, loop_action_grad, open_path_action_grad

UNBOUNDED_THRESHOLD = -1e6


@dataclass
class PotentialEstimate:
    """Upper estimate of m_k(q0, q1) attained by the returned path."""

    q0: np.ndarray
    q1: np.ndarray
    k: float
    value: float                 # -inf when unbounded below
    path_points: np.ndarray | None
    T: float | None
    converged: bool
    unbounded: bool
    flags: list[str] = field(default_factory=list)
    witness: dict | None = None  # negative loop + copy count for the -inf case


@dataclass
class PotentialOptions:
    n_segments: int = 64
    max_iters: int = 600
    grad_tol: float = 1e-8
    T_floor: float = 1e-6
    T_multipliers: tuple[float, ...] = (0.1, 1.0, 10.0)
    search: "SearchBudget | None" = None
    check_unbounded: bool = True


@dataclass
class SearchBudget:
    restarts: int = 8
    max_iters: int = 250
    N: int = 192
    seed: int = 0


@dataclass
class MinimaxEstimate:
    """Grid minimax of |du + theta|^2/2; value is a max over grid nodes."""

    value: float
    is_infinite: bool
    per_radius: list[tuple[float, float]]
    grid_spec: dict
    u: np.ndarray | None


@dataclass
class CriticalValueBracket:
    lower: float
    upper: float                 # math.inf when flagged infinite
    grid_spec: dict
    certificates: dict
    consistent: bool
    flags: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Action potential


@lru_cache(maxsize=64)
def _dirichlet_cholesky(n_interior: int, scale: float):
    """Cholesky factor of the fixed-endpoint path Gram P * D^T D."""
    m = scale * (2.0 * np.eye(n_interior)
                 - np.eye(n_interior, k=1) - np.eye(n_interior, k=-1))
    return cho_factor(m, lower=True)


def _descend_path(model, pts, T, k, opts: PotentialOptions):
    """Armijo descent of the open-path action over (interior points, T)."""
    P = pts.shape[0] - 1
    factor = _dirichlet_cholesky(P - 1, float(P))
    value, gint, gT = open_path_action_grad(model, pts, T, k)
    step = 1.0
    iters = 0
    converged = False
    while iters < opts.max_iters:
        pre = cho_solve(factor, gint)
        slope = float(np.einsum("ni,ni->", gint, pre)) + gT * gT
        gnorm = math.sqrt(max(slope, 0.0))
        if gnorm < opts.grad_tol:
            converged = True
            break
        alpha, accepted = step, False
        while alpha > 1e-14:
            trial = pts.copy()
            trial[1:-1] -= alpha * pre
            trial_T = max(T - alpha * gT, opts.T_floor)
            if not np.all(geo.in_domain(model, trial)):
                alpha *= 0.5
                continue
            t_val, t_gint, t_gT = open_path_action_grad(model, trial, trial_T, k)
            if t_val <= value - 1e-4 * alpha * slope:
                pts, T, value, gint, gT = trial, trial_T, t_val, t_gint, t_gT
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        step = min(max(alpha * 2.0, 1e-6), 4.0)
        iters += 1
        if value < UNBOUNDED_THRESHOLD:
            break
    return pts, T, value, converged


def _straight_path(model, q0, q1, n_segments):
    t = np.linspace(0.0, 1.0, n_segments + 1)[:, None]
    pts = q0 + t * (q1 - q0)
    if model.kind == geo.HYPERBOLIC:
        pts[:, 1] = np.maximum(pts[:, 1], model.y_floor)
    return pts


def _unbounded_witness(model, q0, q1, k, neg: ls.TimedLoop):
    """Concatenating straight connectors with n copies of a negative loop gives
    discrete paths whose action decreases linearly in n; report the copy count
    that crosses the divergence threshold."""
    loop_action = action_S(model, neg, k).total
    base = neg.loop.points[0]
    conn = 0.0
    for a, b in ((q0, base), (base, q1)):
        d = float(geo.point_distance(model, a, b))
        conn += d * math.sqrt(2.0 * k)  # straight connector at its optimal time
    n_copies = int(math.ceil((abs(UNBOUNDED_THRESHOLD) + conn + 1.0)
                             / max(-loop_action, 1e-12)))
    witness_value = conn + n_copies * loop_action
    return {
        "loop": neg,
        "loop_action": loop_action,
        "connector_action": conn,
        "copies": n_copies,
        "witness_value": witness_value,
    }


def mane_potential(model: geo.SurfaceModel, q0, q1, k: float,
                   opts: PotentialOptions | None = None) -> PotentialEstimate:
    """Upper estimate of the action potential between two cover points."""
    if not (k > 0.0 and math.isfinite(k)):
        raise ModelError("energy k must be a positive real")
    opts = opts or PotentialOptions()
    q0 = geo.require_in_domain(model, np.asarray(q0, dtype=float))
    q1 = geo.require_in_domain(model, np.asarray(q1, dtype=float))

    if opts.check_unbounded:
        neg = negative_loop_search(model, k, opts.search or SearchBudget())
        if neg is not None:
            witness = _unbounded_witness(model, q0, q1, k, neg)
            return PotentialEstimate(
                q0=q0, q1=q1, k=k, value=-math.inf, path_points=None, T=None,
                converged=True, unbounded=True, flags=["unbounded"],
                witness=witness)

    dist = float(geo.point_distance(model, q0, q1))
    t_base = max(dist, 1e-2) / math.sqrt(2.0 * k)
    best = None
    any_converged = False
    for mult in opts.T_multipliers:
        pts = _straight_path(model, q0, q1, opts.n_segments)
        pts, T, value, conv = _descend_path(model, pts.copy(), mult * t_base,
                                            k, opts)
        any_converged = any_converged or conv
        if best is None or value < best[0]:
            best = (value, pts, T, conv)
    value, pts, T, conv = best
    flags = [] if any_converged else ["unconverged"]
    if value < UNBOUNDED_THRESHOLD:
        return PotentialEstimate(q0=q0, q1=q1, k=k, value=-math.inf,
                                 path_points=pts, T=T, converged=True,
                                 unbounded=True, flags=["unbounded"],
                                 witness=None)
    return PotentialEstimate(q0=q0, q1=q1, k=k, value=value, path_points=pts,
                             T=T, converged=any_converged, unbounded=False,
                             flags=flags)


# ---------------------------------------------------------------------------
# Negative loop search


def _random_loop(model, rng, radius, N):
    if model.kind == geo.HYPERBOLIC:
        center = np.array([0.0, 1.0])
        radius = min(radius, 0.4)
    else:
        center = rng.uniform(0.0, 1.0, size=2)
    t = np.arange(N) / N
    pts = np.tile(center, (N, 1))
    for m in (1, 2, 3):
        amp = radius / m ** 2
        coef = rng.normal(size=(2, 2)) * amp
        pts[:, 0] += coef[0, 0] * np.cos(2 * np.pi * m * t) + coef[0, 1] * np.sin(2 * np.pi * m * t)
        pts[:, 1] += coef[1, 0] * np.cos(2 * np.pi * m * t) + coef[1, 1] * np.sin(2 * np.pi * m * t)
    if model.kind == geo.HYPERBOLIC:
        pts[:, 1] = np.maximum(pts[:, 1], 10.0 * model.y_floor)
    return ls.DiscreteLoop(pts)


def _descend_negative(model, timed, k, budget):
    """h1-preconditioned descent on S_k stopping as soon as it goes negative."""
    pts, T = timed.loop.points.copy(), timed.T
    loop = ls.DiscreteLoop(pts)
    report, g_l2 = loop_action_grad(model, ls.TimedLoop(loop, T), k)
    value = report.total
    step = 1.0
    for _ in range(budget.max_iters):
        if value < -1e-6:
            return ls.TimedLoop(loop, T)
        g_h1 = ls.h1_solve(loop, g_l2)
        slope = float(np.einsum("ni,ni->", g_l2.xi, g_h1.xi)) + g_l2.psi ** 2
        if math.sqrt(max(slope, 0.0)) < 1e-10:
            break
        alpha, accepted = step, False
        while alpha > 1e-14:
            trial_pts = loop.points - alpha * g_h1.xi
            trial_T = max(T - alpha * g_h1.psi, 1e-6)
            if not np.all(geo.in_domain(model, trial_pts)):
                alpha *= 0.5
                continue
            trial_loop = ls.DiscreteLoop(trial_pts)
            t_rep, t_g = loop_action_grad(model, ls.TimedLoop(trial_loop, trial_T), k)
            if t_rep.total <= value - 1e-4 * alpha * slope:
                loop, T, value, g_l2 = trial_loop, trial_T, t_rep.total, t_g
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        step = min(alpha * 2.0, 4.0)
    return None


def negative_loop_search(model: geo.SurfaceModel, k: float,
                         budget: SearchBudget | None = None) -> ls.TimedLoop | None:
    """Search for a contractible loop with S_k < 0; absence returns None.

    Tries the analytic circle families first, then gradient descent from
    random contractible seeds.  Any returned loop is re-verified through
    action_S before being handed back.
    """
    budget = budget or SearchBudget()
    if model.B == 0.0 and model.eta_amplitude == 0.0:
        return None  # S_k >= 0 term by term

    try:
        seed = ls.negative_action_seed(model, k, N=max(budget.N, 256))
        if action_S(model, seed, k).total < -1e-6:
            return seed
    except NoNegativeSeedError:
        pass

    rng = np.random.default_rng(budget.seed)
    radii = np.geomspace(0.05, 1.5, max(budget.restarts, 1))
    for i in range(budget.restarts):
        loop = _random_loop(model, rng, float(radii[i]), budget.N)
        T0 = ls._optimal_period(model, loop, k)
        found = _descend_negative(model, ls.TimedLoop(loop, T0), k, budget)
        if found is not None and action_S(model, found, k).total < -1e-6:
            return found
    return None


# ---------------------------------------------------------------------------
# Minimax estimate of the critical value


def _axis_gradient(u, h, axis):
    """np.gradient stencil: central interior, one-sided edges."""
    return np.gradient(u, h, axis=axis)


def _axis_gradient_adjoint(w, h, axis):
    w = np.moveaxis(w, axis, 0)
    out = np.zeros_like(w)
    out[2:] += w[1:-1] / (2.0 * h)
    out[:-2] -= w[1:-1] / (2.0 * h)
    out[0] -= w[0] / h
    out[1] += w[0] / h
    out[-1] += w[-1] / h
    out[-2] -= w[-1] / h
    return np.moveaxis(out, 0, axis)


def _node_values_flat(model, X, Y, ux, uy):
    thx = np.zeros_like(X)
    thy = (model.B * X if model.kind == geo.FLAT_TORUS
           else model.eta_amplitude * np.sin(2.0 * np.pi * X))
    wx, wy = ux + thx, uy + thy
    return 0.5 * (wx * wx + wy * wy), wx, wy


def _minimax_single(model, radius, grid_n, anneal, stage_iters):
    """Minimax over one box domain; returns (grid max at best u, u)."""
    n = grid_n
    coords = np.linspace(-radius, radius, n)
    h = coords[1] - coords[0]
    X, S = np.meshgrid(coords, coords, indexing="ij")
    hyper = model.kind == geo.HYPERBOLIC
    Yexp = np.exp(S) if hyper else None

    def value_field(u):
        ux = _axis_gradient(u, h, 0)
        us = _axis_gradient(u, h, 1)
        if hyper:
            wx = Yexp * ux - model.B
            v = 0.5 * (wx * wx + us * us)
            return v, wx, us
        return _node_values_flat(model, X, S, ux, us)

    def objective(u_flat, tau):
        u = u_flat.reshape(n, n)
        v, wa, wb = value_field(u)
        m = v.max()
        z = np.exp((v - m) / tau)
        zsum = z.sum()
        obj = m + tau * math.log(zsum)
        sm = z / zsum
        if hyper:
            ga = _axis_gradient_adjoint(sm * wa * Yexp, h, 0)
        else:
            ga = _axis_gradient_adjoint(sm * wa, h, 0)
        gb = _axis_gradient_adjoint(sm * wb, h, 1)
        return obj, (ga + gb).ravel()

    u = np.zeros(n * n)
    baseline = float(value_field(u.reshape(n, n))[0].max())
    for tau in anneal:
        res = scipy_minimize(objective, u, args=(tau,), jac=True,
                             method="L-BFGS-B",
                             options={"maxiter": stage_iters})
        u = res.x
    final = float(value_field(u.reshape(n, n))[0].max())
    if baseline <= final:
        return baseline, np.zeros((n, n))
    return final, u.reshape(n, n)


def critical_value_upper(model: geo.SurfaceModel, domain_radius: float = 4.0,
                         grid_n: int = 48, anneal=None,
                         stage_iters: int = 120,
                         growth_factor: float = 1.5) -> MinimaxEstimate:
    """Upper estimate of the domain minimax; flagged infinite when doubling the
    domain radius twice grows the estimate by more than growth_factor each
    time (an unbounded primitive)."""
    if grid_n < 16:
        raise ModelError("grid_n must be at least 16")
    if domain_radius <= 0.0:
        raise ModelError("domain_radius must be positive")
    anneal = anneal if anneal is not None else np.geomspace(1.0, 1e-3, 6)
    per_radius = []
    best_u = None
    for radius in (domain_radius, 2.0 * domain_radius, 4.0 * domain_radius):
        val, u = _minimax_single(model, radius, grid_n, anneal, stage_iters)
        per_radius.append((float(radius), val))
        best_u = u
    v1, v2, v3 = (v for _, v in per_radius)
    tiny = 1e-12
    infinite = (v2 > growth_factor * v1 + tiny) and (v3 > growth_factor * v2 + tiny)
    grid_spec = {"domain_radius": domain_radius, "grid_n": grid_n,
                 "radii": [r for r, _ in per_radius]}
    if infinite:
        return MinimaxEstimate(value=math.inf, is_infinite=True,
                               per_radius=per_radius, grid_spec=grid_spec, u=None)
    return MinimaxEstimate(value=per_radius[-1][1], is_infinite=False,
                           per_radius=per_radius, grid_spec=grid_spec, u=best_u)


# ---------------------------------------------------------------------------
# Bracket


@dataclass
class BracketOptions:
    bisection_steps: int = 12
    search: SearchBudget = field(default_factory=SearchBudget)
    domain_radius: float | None = None
    grid_n: int | None = None


def _default_minimax_params(model):
    if model.kind == geo.HYPERBOLIC:
        return 6.0, 48
    return 1.5, 32


def critical_value_bracket(model: geo.SurfaceModel, k_max: float, tol: float,
                           opts: BracketOptions | None = None) -> CriticalValueBracket:
    """Bracket c(g, sigma): bisection on negative_loop_search over (0, k_max]
    combined with the grid minimax upper estimate."""
    if not (k_max > 0.0 and tol > 0.0):
        raise ModelError("k_max and tol must be positive")
    opts = opts or BracketOptions()
    flags: list[str] = []

    lo, lo_loop = 0.0, None
    hi = None
    top = negative_loop_search(model, k_max, opts.search)
    if top is not None:
        lo, lo_loop = k_max, top
    else:
        hi = k_max
        for _ in range(opts.bisection_steps):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            found = negative_loop_search(model, mid, opts.search)
            if found is not None:
                lo, lo_loop = mid, found
            else:
                hi = mid
        if hi - lo > tol:
            flags.append("bisection-budget-exhausted")

    radius, grid_n = _default_minimax_params(model)
    if opts.domain_radius is not None:
        radius = opts.domain_radius
    if opts.grid_n is not None:
        grid_n = opts.grid_n
    upper_est = critical_value_upper(model, radius, grid_n)

    lower = lo if lo_loop is not None else 0.0 - tol
    upper = upper_est.value
    consistent = (not math.isfinite(upper)) or lower <= upper + 1e-3
    if not consistent:
        flags.append("bracket-inconsistent")
    certificates = {
        "lower_loop": lo_loop,
        "lower_action": (action_S(model, lo_loop, lower).total
                         if lo_loop is not None else None),
        "upper_u": upper_est.u,
        "per_radius": upper_est.per_radius,
    }
    return CriticalValueBracket(lower=lower, upper=upper,
                                grid_spec=upper_est.grid_spec,
                                certificates=certificates,
                                consistent=consistent, flags=flags)
