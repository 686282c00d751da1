"""Magnetic flow integration and closed-orbit verification.

The flow is integrated in chart coordinates from the Euler-Lagrange form of
L = |v|^2/2 - theta(v):

    qdd^l = -Gamma^l_{jk} qd^j qd^k + g^{-1,li} F_i,   F = b(q) (-v_y, v_x),

with b the magnetic density (curl of theta).  The force is g-orthogonal to v,
so energy E = |v|_g^2 / 2 is conserved along exact solutions; drift of the
numerical integrator is monitored and never discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from . import loopspace as ls
from .errors import IntegrationError, ModelError


@dataclass(frozen=True)
class PhaseState:
    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))


@dataclass
class IntegrateOptions:
    step: float | None = None          # fixed step; None picks duration-based default
    energy_tol: float = 1e-8           # allowed |E(t)-E(0)| per unit time
    max_halvings: int = 8
    adaptive: bool = True              # halve the step until the drift bound holds


@dataclass
class Orbit:
    times: np.ndarray
    qs: np.ndarray
    vs: np.ndarray
    energies: np.ndarray
    energy_drift: float
    step: float
    n_steps: int
    halvings: int
    flags: list[str] = field(default_factory=list)

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.qs[i], self.vs[i])


@dataclass(frozen=True)
class ClosureResidual:
    position_gap: float
    velocity_gap: float
    energy_error: float
    energy_drift: float


def energy(model: geo.SurfaceModel, state: PhaseState) -> float:
    g = geo.eval_metric(model, state.q)
    return 0.5 * float(state.v @ g @ state.v)


def lorentz_rhs(model: geo.SurfaceModel, state: PhaseState) -> np.ndarray:
    """Chart acceleration of the magnetic flow at the given state."""
    q, v = state.q, state.v
    gamma = geo.eval_christoffel(model, q)
    geodesic = -np.einsum("ljk,j,k->l", gamma, v, v)
    b = float(geo.eval_sigma_density(model, q))
    force = b * np.array([-v[1], v[0]])
    ginv = geo.eval_metric_inv(model, q)
    return geodesic + ginv @ force


def _rhs(model, y):
    q, v = y[:2], y[2:]
    state = PhaseState(q, v)
    return np.concatenate([v, lorentz_rhs(model, state)])


def _rk4_path(model, y0, duration, h):
    from .errors import DomainError

    n = max(1, int(math.ceil(duration / h)))
    h = duration / n
    ys = np.empty((n + 1, 4))
    ys[0] = y0
    y = y0
    for i in range(n):
        try:
            k1 = _rhs(model, y)
            k2 = _rhs(model, y + 0.5 * h * k1)
            k3 = _rhs(model, y + 0.5 * h * k2)
            k4 = _rhs(model, y + h * k3)
        except DomainError as exc:
            raise IntegrationError(
                f"orbit left the chart near t = {i * h:g}: {exc}")
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if model.kind == geo.HYPERBOLIC and y[1] < model.y_floor:
            raise IntegrationError(
                f"orbit left the chart (y = {y[1]:g}) at t = {(i + 1) * h:g}")
        ys[i + 1] = y
    return ys, h, n


def integrate(model: geo.SurfaceModel, state: PhaseState, duration: float,
              opts: IntegrateOptions | None = None) -> Orbit:
    """Classical fixed-step RK4 with step halving driven by energy drift."""
    if duration <= 0.0:
        raise ModelError("duration must be positive")
    opts = opts or IntegrateOptions()
    geo.require_in_domain(model, state.q)
    y0 = np.concatenate([state.q, state.v])

    h = opts.step if opts.step is not None else min(duration / 1024.0, 0.01)
    halvings = 0
    flags: list[str] = []
    while True:
        ys, h_eff, n = _rk4_path(model, y0, duration, h)
        g = geo.eval_metric(model, ys[:, :2])
        energies = 0.5 * np.einsum("nij,ni,nj->n", g, ys[:, 2:], ys[:, 2:])
        drift = float(np.max(np.abs(energies - energies[0])))
        if not opts.adaptive or drift <= opts.energy_tol * duration:
            break
        if halvings >= opts.max_halvings:
            flags.append("drift-exceeded")
            break
        h *= 0.5
        halvings += 1

    times = np.linspace(0.0, duration, n + 1)
    return Orbit(times=times, qs=ys[:, :2], vs=ys[:, 2:], energies=energies,
                 energy_drift=drift, step=h_eff, n_steps=n, halvings=halvings,
                 flags=flags)


def orbit_from_critical(model: geo.SurfaceModel, timed: ls.TimedLoop) -> PhaseState:
    """Initial phase state of the orbit a critical loop represents: first lift
    point with the central-difference velocity (previous point taken through
    the inverse deck map)."""
    loop = timed.loop
    pts = loop.points
    prev = (pts[-1] - np.asarray(loop.closure_offset)) / loop.closure_scale
    v0 = (pts[1] - prev) * loop.N / (2.0 * timed.T)
    return PhaseState(pts[0], v0)


def closure_residual(model: geo.SurfaceModel, timed: ls.TimedLoop, k: float,
                     opts: IntegrateOptions | None = None) -> ClosureResidual:
    """Integrate one period from the loop's initial state and compare the
    endpoint against the deck-translated start; small residuals certify a
    closed orbit of energy close to k."""
    start = orbit_from_critical(model, timed)
    orbit = integrate(model, start, timed.T, opts)
    q_end, v_end = orbit.qs[-1], orbit.vs[-1]
    loop = timed.loop
    q_target = loop.closure_point
    v_target = loop.closure_scale * start.v
    pos_gap = float(geo.point_distance(model, q_end, q_target))
    vel_gap = float(geo.metric_norm(model, q_end, v_end - v_target))
    energy_err = float(abs(orbit.energies.mean() - k))
    return ClosureResidual(position_gap=pos_gap, velocity_gap=vel_gap,
                           energy_error=energy_err,
                           energy_drift=orbit.energy_drift)
