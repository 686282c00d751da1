"""Free-period action S_k = kinetic + kT - flux, the fixed-parametrization
action A_k over open paths, and their exact discrete gradients.

The gradient differentiates the discrete objective itself rather than
discretizing the continuum first variation, so descent line searches see a
value and slope that agree to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import geometry as geo
from . import loopspace as ls
from .errors import FluxUndefinedError, ModelError


@dataclass(frozen=True)
class ActionReport:
    """S_k value with its decomposition (total = kinetic + period_term - flux)
    and the l2 gradient norms of the discrete functional."""

    kinetic: float
    period_term: float
    flux: float
    total: float
    grad_loop_norm: float
    grad_T: float
    cls: geo.FreeHomotopyClass = geo.TRIVIAL_CLASS


@lru_cache(maxsize=256)
def _reference_theta_integral(model: geo.SurfaceModel,
                              cls: geo.FreeHomotopyClass) -> float:
    """Line integral of theta along the fixed reference loop of the class;
    subtracted from every flux so reference loops carry zero flux."""
    if cls.trivial:
        return 0.0
    ref = ls.make_class_loop(model, cls, N=1024)
    return ls.loop_theta_integral(model, ref)


def _flux_constant(model: geo.SurfaceModel, cls: geo.FreeHomotopyClass) -> float:
    if cls.trivial:
        return 0.0
    if not model.has_global_primitive:
        raise FluxUndefinedError(
            f"flux undefined: class {cls.label()} on {model.kind} with B = "
            f"{model.B:g} has no invariant primitive")
    return _reference_theta_integral(model, cls)


def flux(model: geo.SurfaceModel, loop: ls.DiscreteLoop) -> float:
    """Discrete surface term: line integral of theta along the lift, shifted by
    the class reference constant.  Contractible loops never need the shift and
    the value is independent of the lift."""
    return ls.loop_theta_integral(model, loop) - _flux_constant(model, loop.cls)


def raw_action_grad(model: geo.SurfaceModel, pts: np.ndarray, T: float,
                    k: float, closure_scale: float, closure_offset,
                    flux_const: float):
    """Value and exact l2 gradient of the discrete S_k on raw arrays.

    Returns (total, kinetic, length, theta_line, gpts, gT).
    """
    N = pts.shape[0]
    closure = closure_scale * pts[0] + np.asarray(closure_offset)
    nxt = np.concatenate([pts[1:], closure[None, :]], axis=0)
    delta = nxt - pts
    mid = 0.5 * (pts + nxt)

    g = geo.eval_metric(model, mid)
    gdelta = np.einsum("nij,nj->ni", g, delta)
    quad = np.einsum("ni,ni->n", delta, gdelta)
    length = float(np.sqrt(quad).sum())
    kinetic = N * float(quad.sum()) / (2.0 * T)

    th = geo.eval_theta(model, mid)
    theta_line = float(np.einsum("ni,ni->", th, delta))
    total = kinetic + k * T - (theta_line - flux_const)

    dg = geo.eval_metric_deriv(model, mid)     # [n, a, i, j]
    dth = geo.eval_theta_jac(model, mid)       # [n, a, j]
    d_delta = (N / T) * gdelta - th
    d_mid = (N / (2.0 * T)) * np.einsum("naij,ni,nj->na", dg, delta, delta) \
        - np.einsum("naj,nj->na", dth, delta)

    lo = -d_delta + 0.5 * d_mid
    hi = d_delta + 0.5 * d_mid
    gpts = lo
    gpts[1:] += hi[:-1]
    gpts[0] += closure_scale * hi[-1]
    gT = k - kinetic / T
    return total, kinetic, length, theta_line, gpts, gT


def loop_action_grad(model: geo.SurfaceModel, timed: ls.TimedLoop, k: float):
    """(ActionReport, l2 LoopTangent) in one pass; raises FluxUndefinedError
    for nontrivial classes without a global primitive."""
    loop = timed.loop
    const = _flux_constant(model, loop.cls)
    total, kinetic, _, theta_line, gpts, gT = raw_action_grad(
        model, loop.points, timed.T, k, loop.closure_scale,
        loop.closure_offset, const)
    report = ActionReport(
        kinetic=kinetic,
        period_term=k * timed.T,
        flux=theta_line - const,
        total=total,
        grad_loop_norm=float(np.linalg.norm(gpts)),
        grad_T=gT,
        cls=loop.cls,
    )
    return report, ls.LoopTangent(gpts, gT)


def action_S(model: geo.SurfaceModel, timed: ls.TimedLoop, k: float) -> ActionReport:
    """Free-period action report at energy k."""
    report, _ = loop_action_grad(model, timed, k)
    return report


def grad_S(model: geo.SurfaceModel, timed: ls.TimedLoop, k: float,
           metric_choice: str = "h1") -> ls.LoopTangent:
    """Gradient of the discrete S_k: raw partials ('l2') or the Riesz
    representative in the loop-space inner product ('h1')."""
    if metric_choice not in ("l2", "h1"):
        raise ModelError(f"metric_choice must be 'l2' or 'h1', got {metric_choice!r}")
    _, g_l2 = loop_action_grad(model, timed, k)
    if metric_choice == "l2":
        return g_l2
    return ls.h1_solve(timed.loop, g_l2)


def dS_dT(model: geo.SurfaceModel, timed: ls.TimedLoop, k: float) -> float:
    """Exact T-partial of the discrete functional: k - kinetic/T.  This equals
    the period component of grad_S bit for bit."""
    return k - ls.loop_kinetic(model, timed) / timed.T


def action_A(model: geo.SurfaceModel, path_points, times, k: float) -> float:
    """Fixed-endpoint action of a piecewise-linear path with prescribed
    segment times: sum |d_i|_g^2/(2 dt_i) + k dt_i - theta(mid_i) . d_i."""
    pts = np.asarray(path_points, dtype=float)
    t = np.asarray(times, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ModelError("path needs at least 2 chart points of dimension 2")
    if t.shape != (pts.shape[0],):
        raise ModelError("times must align with path points")
    dt = np.diff(t)
    if np.any(dt <= 0.0):
        raise ModelError("times must be strictly increasing")
    delta = np.diff(pts, axis=0)
    mid = 0.5 * (pts[1:] + pts[:-1])
    g = geo.eval_metric(model, mid)
    quad = np.einsum("nij,ni,nj->n", g, delta, delta)
    th = geo.eval_theta(model, mid)
    line = np.einsum("ni,ni->n", th, delta)
    return float(np.sum(quad / (2.0 * dt) + k * dt - line))


def open_path_action_grad(model: geo.SurfaceModel, pts: np.ndarray, T: float,
                          k: float):
    """A_k of an open path at uniform time spacing T/(P-1), with exact
    gradients w.r.t. interior points and T.  Endpoints are held fixed.

    Returns (value, gpts_interior, gT) where gpts_interior has shape (P-2, 2).
    """
    P = pts.shape[0] - 1
    delta = np.diff(pts, axis=0)
    mid = 0.5 * (pts[1:] + pts[:-1])
    g = geo.eval_metric(model, mid)
    gdelta = np.einsum("nij,nj->ni", g, delta)
    quad = np.einsum("ni,ni->n", delta, gdelta)
    kinetic = P * float(quad.sum()) / (2.0 * T)
    th = geo.eval_theta(model, mid)
    line = float(np.einsum("ni,ni->", th, delta))
    value = kinetic + k * T - line

    dg = geo.eval_metric_deriv(model, mid)
    dth = geo.eval_theta_jac(model, mid)
    d_delta = (P / T) * gdelta - th
    d_mid = (P / (2.0 * T)) * np.einsum("naij,ni,nj->na", dg, delta, delta) \
        - np.einsum("naj,nj->na", dth, delta)
    # Interior point j sits at the head of segment j-1 and tail of segment j.
    gint = (d_delta[:-1] + 0.5 * d_mid[:-1]) + (-d_delta[1:] + 0.5 * d_mid[1:])
    gT = k - kinetic / T
    return value, gint, gT
