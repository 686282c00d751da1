"""Discrete loops with free period: N uniformly indexed cover points plus a
deck element that closes the lift (x_N := h . x_0) and a period T > 0.

The discrete kinetic energy uses midpoint metric evaluation on each chord,
which keeps it a smooth function of the points with a simple exact gradient.
The discrete Cauchy-Schwarz bound length^2 <= 2 T energy then holds by the
plain sum inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import geometry as geo
from .errors import ModelError, NoNegativeSeedError

MIN_POINTS = 8


def _frozen(points: np.ndarray) -> np.ndarray:
    pts = np.array(points, dtype=float)
    pts.flags.writeable = False
    return pts


@dataclass(frozen=True, eq=False)
class DiscreteLoop:
    """N lift samples at t = i/N with closure rule x_N = scale * x_0 + offset,
    the affine form of the deck transformation labelled by cls."""

    points: np.ndarray
    cls: geo.FreeHomotopyClass = geo.TRIVIAL_CLASS
    closure_scale: float = 1.0
    closure_offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ModelError(f"loop points must have shape (N, 2), got {pts.shape}")
        if pts.shape[0] < MIN_POINTS:
            raise ModelError(f"loops need at least {MIN_POINTS} points, got {pts.shape[0]}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "closure_offset",
                           (float(self.closure_offset[0]), float(self.closure_offset[1])))

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def closure_point(self) -> np.ndarray:
        return self.closure_scale * self.points[0] + np.asarray(self.closure_offset)

    def with_points(self, points) -> "DiscreteLoop":
        return DiscreteLoop(points, self.cls, self.closure_scale, self.closure_offset)


def make_loop(model: geo.SurfaceModel, points, cls: geo.FreeHomotopyClass
              = geo.TRIVIAL_CLASS) -> DiscreteLoop:
    """Loop from raw points with the closure affine taken from the model."""
    scale, offset = geo.deck_affine(model, cls)
    return DiscreteLoop(points, cls, scale, (offset[0], offset[1]))


@dataclass(frozen=True, eq=False)
class TimedLoop:
    """A loop together with its free period T > 0."""

    loop: DiscreteLoop
    T: float

    def __post_init__(self):
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ModelError(f"period must be a finite positive real, got {self.T}")


@dataclass(frozen=True, eq=False)
class LoopTangent:
    """Variation (xi, psi) of a timed loop: per-point vectors plus a period part."""

    xi: np.ndarray
    psi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))


def loop_segments(loop: DiscreteLoop):
    """Per-chord (delta_i, midpoint_i) arrays, including the closing chord."""
    pts = loop.points
    nxt = np.concatenate([pts[1:], loop.closure_point[None, :]], axis=0)
    return nxt - pts, 0.5 * (pts + nxt)


def _segment_norms(model, loop):
    delta, mid = loop_segments(loop)
    g = geo.eval_metric(model, mid)
    quad = np.einsum("nij,ni,nj->n", g, delta, delta)
    return quad, np.sqrt(quad)


def loop_length(model: geo.SurfaceModel, loop: DiscreteLoop) -> float:
    """Discrete length: sum of chord g-norms at chord midpoints."""
    _, seg = _segment_norms(model, loop)
    return float(seg.sum())


def loop_kinetic(model: geo.SurfaceModel, timed: TimedLoop) -> float:
    """Discrete kinetic term sum_i N |delta_i|_g^2 / (2T)."""
    quad, _ = _segment_norms(model, timed.loop)
    return float(timed.loop.N * quad.sum() / (2.0 * timed.T))


def loop_theta_integral(model: geo.SurfaceModel, loop: DiscreteLoop) -> float:
    """Midpoint-rule line integral of the primitive theta along the lift."""
    delta, mid = loop_segments(loop)
    th = geo.eval_theta(model, mid)
    return float(np.einsum("ni,ni->", th, delta))


def make_circle_loop(center, r: float, orientation: str = "ccw",
                     N: int = 256) -> DiscreteLoop:
    """Circle fixture in chart coordinates; trivial class."""
    if r <= 0.0:
        raise ModelError("circle radius must be positive")
    if orientation not in ("ccw", "cw"):
        raise ModelError(f"orientation must be 'ccw' or 'cw', got {orientation!r}")
    center = np.asarray(center, dtype=float)
    phi = 2.0 * np.pi * np.arange(N) / N
    if orientation == "cw":
        phi = -phi
    pts = center + r * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    return DiscreteLoop(pts)


def make_class_loop(model: geo.SurfaceModel, cls: geo.FreeHomotopyClass,
                    N: int = 256) -> DiscreteLoop:
    """Reference loop of a class: chart-straight lift from the origin to
    h . origin, sampled uniformly in index."""
    q0 = geo.chart_origin(model)
    q1 = geo.apply_deck(model, cls, q0)
    t = (np.arange(N) / N)[:, None]
    return make_loop(model, q0 + t * (q1 - q0), cls)


def h1_inner(base_loop: DiscreteLoop, tan1: LoopTangent, tan2: LoopTangent) -> float:
    """Inner product <xi(0), zeta(0)> + int <xi', zeta'> + psi*chi on discrete
    tangents, with the closing difference xi_N - c xi_0 induced by the deck map."""
    xi, zeta = tan1.xi, tan2.xi
    N = base_loop.N
    if xi.shape != (N, 2) or zeta.shape != (N, 2):
        raise ModelError("tangent dimensions must match the base loop")
    c = base_loop.closure_scale
    dxi = np.concatenate([xi[1:], c * xi[:1]], axis=0) - xi
    dze = np.concatenate([zeta[1:], c * zeta[:1]], axis=0) - zeta
    val = float(xi[0] @ zeta[0]) + N * float(np.einsum("ni,ni->", dxi, dze))
    return val + tan1.psi * tan2.psi


@lru_cache(maxsize=64)
def _gram_cholesky(N: int, closure_scale: float):
    """Cholesky factor of the loop-space Gram matrix e0 e0^T + N D^T D."""
    D = np.zeros((N, N))
    idx = np.arange(N - 1)
    D[idx, idx] = -1.0
    D[idx, idx + 1] = 1.0
    D[N - 1, N - 1] = -1.0
    D[N - 1, 0] = closure_scale
    M = N * (D.T @ D)
    M[0, 0] += 1.0
    return cho_factor(M, lower=True)


def h1_solve(base_loop: DiscreteLoop, grad_l2: LoopTangent) -> LoopTangent:
    """Riesz representative of the differential in the loop-space metric:
    solves h1_inner(G, u) = <grad_l2, u>_l2 for all u (period part is identity)."""
    factor = _gram_cholesky(base_loop.N, base_loop.closure_scale)
    xi = cho_solve(factor, grad_l2.xi)
    return LoopTangent(xi, grad_l2.psi)


def resample(loop: DiscreteLoop, new_N: int) -> DiscreteLoop:
    """Piecewise-linear reparametrization to new_N uniform index samples;
    class and closure rule preserved exactly."""
    if new_N < MIN_POINTS:
        raise ModelError(f"resample target must be >= {MIN_POINTS}")
    pts = loop.points
    N = loop.N
    ext = np.concatenate([pts, loop.closure_point[None, :]], axis=0)
    s_old = np.arange(N + 1) / N
    s_new = np.arange(new_N) / new_N
    new_pts = np.stack([np.interp(s_new, s_old, ext[:, k]) for k in (0, 1)], axis=-1)
    return loop.with_points(new_pts)


def _uniform_speed_circle(rho: float, N: int, orientation: str) -> DiscreteLoop:
    """Hyperbolic circle of hyperbolic radius rho about (0, 1), sampled at
    constant hyperbolic speed."""
    dense = max(8 * N, 2048)
    phi = 2.0 * np.pi * np.arange(dense + 1) / dense
    if orientation == "cw":
        phi = -phi
    yc = math.cosh(rho)
    re = math.sinh(rho)
    pts = np.stack([re * np.cos(phi), yc + re * np.sin(phi)], axis=-1)
    ds = np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=-1)) / (
        0.5 * (pts[1:, 1] + pts[:-1, 1]))
    s = np.concatenate([[0.0], np.cumsum(ds)])
    s_new = s[-1] * np.arange(N) / N
    out = np.stack([np.interp(s_new, s, pts[:, k]) for k in (0, 1)], axis=-1)
    return DiscreteLoop(out)


def _seed_action(model, loop, T, k):
    """Free-period action of a contractible loop (flux = line integral of theta)."""
    quad, _ = _segment_norms(model, loop)
    kinetic = loop.N * quad.sum() / (2.0 * T)
    return kinetic + k * T - loop_theta_integral(model, loop)


def _optimal_period(model, loop, k):
    """argmin_T of kinetic(T) + kT for a fixed loop: T* = sqrt(N sum|d|^2 / 2k)."""
    quad, _ = _segment_norms(model, loop)
    return math.sqrt(loop.N * quad.sum() / (2.0 * k))


def negative_action_seed(model: geo.SurfaceModel, k: float,
                         N: int = 512) -> TimedLoop:
    """Contractible timed loop with strictly negative action at energy k.

    Flat torus with B != 0: chart circle of radius 3 sqrt(2k)/|B| at the
    analytically optimal period.  Half-plane with 2k < B^2: hyperbolic circle
    just past the break-even radius 2 artanh(sqrt(2k)/B).  Otherwise a coarse
    parametric circle search; raises NoNegativeSeedError when that fails.
    """
    if not (k > 0.0 and math.isfinite(k)):
        raise ModelError("energy k must be a positive real")
    candidates = []
    if model.kind == geo.FLAT_TORUS and model.B != 0.0:
        speed = math.sqrt(2.0 * k)
        for factor in (3.0, 2.5, 4.0, 6.0):
            r = factor * speed / abs(model.B)
            for orient in ("ccw", "cw"):
                candidates.append(make_circle_loop((0.0, 0.0), r, orient, N))
    elif model.kind == geo.HYPERBOLIC and model.B != 0.0:
        ratio = math.sqrt(2.0 * k) / abs(model.B)
        if ratio < 1.0:
            rho_even = 2.0 * math.atanh(ratio)
            for rho in (1.15 * rho_even + 0.5, 1.3 * rho_even + 1.0):
                rho = min(rho, 12.0)
                n_pts = int(min(max(N, 8.0 * 2.0 * np.pi * math.sinh(rho)), 32768))
                for orient in ("ccw", "cw"):
                    candidates.append(_uniform_speed_circle(rho, n_pts, orient))
    else:
        # Coarse parametric family for the remaining exact cases.
        for cx in (0.0, 0.25, 0.5, 0.75):
            for r in np.geomspace(0.02, 3.0, 10):
                for orient in ("ccw", "cw"):
                    candidates.append(make_circle_loop((cx, 0.0), r, orient, N))

    best = None
    for loop in candidates:
        T = _optimal_period(model, loop, k)
        val = _seed_action(model, loop, T, k)
        if best is None or val < best[0]:
            best = (val, loop, T)
        if val < -1e-9:
            return TimedLoop(loop, T)
    detail = f" (best candidate action {best[0]:.3g})" if best else ""
    raise NoNegativeSeedError(
        f"no negative seed found for {model.kind} at k = {k:g}{detail}")
