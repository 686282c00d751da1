"""Model surfaces: chart metric, magnetic density, cover primitive, deck maps.

Three built-in models, each given by closed-form data on a universal-cover
chart:

* ``flat_torus``            R^2/Z^2 with the Euclidean metric, sigma = B dx^dy
                            and primitive theta = B x dy on the cover.
* ``exact_torus``           same quotient, sigma = d(eta) for the global
                            1-form eta = eps sin(2 pi x) dy, so the primitive
                            descends to the quotient.
* ``hyperbolic_halfplane``  upper half-plane, g = (dx^2 + dy^2)/y^2,
                            theta = -B dx/y and sigma = d(theta); optional
                            dilation deck map z -> lambda z.

All evaluators are vectorized over a trailing coordinate axis of length 2 and
pure; models are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelError

FLAT_TORUS = "flat_torus"
EXACT_TORUS = "exact_torus"
HYPERBOLIC = "hyperbolic_halfplane"
MODEL_KINDS = (FLAT_TORUS, EXACT_TORUS, HYPERBOLIC)

# Lower bound on y for the half-plane chart; operations error rather than
# extrapolate past it.
HYPERBOLIC_Y_FLOOR = 1e-6


@dataclass(frozen=True, order=True)
class FreeHomotopyClass:
    """Deck-element label.

    On the torus the pair (m, n) is the integer translation; on the
    half-plane m is the dilation power and n must be 0.  (0, 0) is the
    trivial class.
    """

    m: int = 0
    n: int = 0

    @property
    def trivial(self) -> bool:
        return self.m == 0 and self.n == 0

    def __add__(self, other: "FreeHomotopyClass") -> "FreeHomotopyClass":
        return FreeHomotopyClass(self.m + other.m, self.n + other.n)

    def inverse(self) -> "FreeHomotopyClass":
        return FreeHomotopyClass(-self.m, -self.n)

    def label(self) -> tuple[int, int]:
        return (self.m, self.n)


TRIVIAL_CLASS = FreeHomotopyClass(0, 0)


@dataclass(frozen=True)
class SurfaceModel:
    """Immutable model-surface record.

    ``c_upper_declared`` is the declared upper bound on the critical energy
    (exact for the built-in catalog: 0 for vanishing field, B^2/2 on the
    half-plane, eps^2/2 for the exact torus, infinity for the flat torus with
    B != 0).  ``has_global_primitive`` records whether theta descends to the
    quotient, which is what makes the flux of nontrivial classes well defined.
    """

    kind: str
    B: float = 0.0
    eta_amplitude: float = 0.0
    lam: float | None = None
    chart_domain: str = ""
    deck_generators: tuple[str, ...] = ()
    c_upper_declared: float = 0.0
    has_global_primitive: bool = True
    y_floor: float = 0.0


def make_model(kind: str, B: float = 0.0, eta_amplitude: float = 0.0,
               lam: float | None = None) -> SurfaceModel:
    """Build one of the catalog models, validating its invariants."""
    if kind not in MODEL_KINDS:
        raise ModelError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    if not (math.isfinite(B) and math.isfinite(eta_amplitude)):
        raise ModelError("B and eta_amplitude must be finite")
    if eta_amplitude != 0.0 and kind != EXACT_TORUS:
        raise ModelError("eta_amplitude is only meaningful for exact_torus")
    if kind == EXACT_TORUS and B != 0.0:
        raise ModelError("exact_torus fixes sigma = d(eta); B must be 0")
    if lam is not None:
        if kind != HYPERBOLIC:
            raise ModelError("lambda (dilation) only applies to hyperbolic_halfplane")
        if not (math.isfinite(lam) and lam > 1.0):
            raise ModelError("dilation factor lambda must be > 1")

    if kind == FLAT_TORUS:
        c_upper = math.inf if B != 0.0 else 0.0
        return SurfaceModel(
            kind=kind, B=float(B),
            chart_domain="R^2 (cover of R^2/Z^2)",
            deck_generators=("translate(1,0)", "translate(0,1)"),
            c_upper_declared=c_upper,
            has_global_primitive=(B == 0.0),
        )
    if kind == EXACT_TORUS:
        eps = float(eta_amplitude)
        return SurfaceModel(
            kind=kind, eta_amplitude=eps,
            chart_domain="R^2 (cover of R^2/Z^2)",
            deck_generators=("translate(1,0)", "translate(0,1)"),
            c_upper_declared=0.5 * eps * eps,
            has_global_primitive=True,
        )
    gens = (f"dilation({lam})",) if lam is not None else ()
    return SurfaceModel(
        kind=kind, B=float(B), lam=lam,
        chart_domain=f"upper half-plane, y >= {HYPERBOLIC_Y_FLOOR}",
        deck_generators=gens,
        c_upper_declared=0.5 * B * B,
        has_global_primitive=True,  # theta = -B dx/y is dilation invariant
        y_floor=HYPERBOLIC_Y_FLOOR,
    )


def _as_points(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 2:
        raise ModelError(f"chart points must have a trailing axis of length 2, got {q.shape}")
    return q


def in_domain(model: SurfaceModel, q) -> np.ndarray:
    """Boolean mask of points inside the model's chart domain."""
    q = _as_points(q)
    if model.kind == HYPERBOLIC:
        return q[..., 1] >= model.y_floor
    return np.ones(q.shape[:-1], dtype=bool)


def require_in_domain(model: SurfaceModel, q) -> np.ndarray:
    q = _as_points(q)
    if model.kind == HYPERBOLIC:
        ymin = q[..., 1].min() if q.size else model.y_floor
        if ymin < model.y_floor:
            raise DomainError(
                f"point with y = {ymin:g} below half-plane floor {model.y_floor:g}")
    return q


def eval_metric(model: SurfaceModel, q) -> np.ndarray:
    """Metric matrix g_{ij}(q), shape (..., 2, 2); symmetric positive definite."""
    q = require_in_domain(model, q)
    out = np.zeros(q.shape[:-1] + (2, 2))
    if model.kind == HYPERBOLIC:
        w = 1.0 / q[..., 1] ** 2
        out[..., 0, 0] = w
        out[..., 1, 1] = w
    else:
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
    return out


def eval_metric_inv(model: SurfaceModel, q) -> np.ndarray:
    """Inverse metric g^{ij}(q), shape (..., 2, 2)."""
    q = require_in_domain(model, q)
    out = np.zeros(q.shape[:-1] + (2, 2))
    if model.kind == HYPERBOLIC:
        w = q[..., 1] ** 2
        out[..., 0, 0] = w
        out[..., 1, 1] = w
    else:
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
    return out


def eval_metric_deriv(model: SurfaceModel, q) -> np.ndarray:
    """Coordinate derivatives d_a g_{ij}(q), shape (..., 2, 2, 2), index [a, i, j]."""
    q = require_in_domain(model, q)
    out = np.zeros(q.shape[:-1] + (2, 2, 2))
    if model.kind == HYPERBOLIC:
        w = -2.0 / q[..., 1] ** 3
        out[..., 1, 0, 0] = w
        out[..., 1, 1, 1] = w
    return out


def eval_christoffel(model: SurfaceModel, q) -> np.ndarray:
    """Christoffel symbols Gamma^l_{jk}(q), shape (..., 2, 2, 2), index [l, j, k]."""
    q = require_in_domain(model, q)
    out = np.zeros(q.shape[:-1] + (2, 2, 2))
    if model.kind == HYPERBOLIC:
        inv_y = 1.0 / q[..., 1]
        out[..., 0, 0, 1] = -inv_y
        out[..., 0, 1, 0] = -inv_y
        out[..., 1, 0, 0] = inv_y
        out[..., 1, 1, 1] = -inv_y
    return out


def eval_theta(model: SurfaceModel, q) -> np.ndarray:
    """Primitive 1-form coefficients (theta_x, theta_y) at q, shape (..., 2)."""
    q = require_in_domain(model, q)
    out = np.zeros(q.shape)
    if model.kind == FLAT_TORUS:
        out[..., 1] = model.B * q[..., 0]
    elif model.kind == EXACT_TORUS:
        out[..., 1] = model.eta_amplitude * np.sin(2.0 * np.pi * q[..., 0])
    else:
        out[..., 0] = -model.B / q[..., 1]
    return out


def eval_theta_jac(model: SurfaceModel, q) -> np.ndarray:
    """Coordinate derivatives d_a theta_j(q), shape (..., 2, 2), index [a, j]."""
    q = require_in_domain(model, q)
    out = np.zeros(q.shape[:-1] + (2, 2))
    if model.kind == FLAT_TORUS:
        out[..., 0, 1] = model.B
    elif model.kind == EXACT_TORUS:
        out[..., 0, 1] = (2.0 * np.pi * model.eta_amplitude
                          * np.cos(2.0 * np.pi * q[..., 0]))
    else:
        out[..., 1, 0] = model.B / q[..., 1] ** 2
    return out


def eval_sigma_density(model: SurfaceModel, q) -> np.ndarray:
    """Coefficient b(q) of sigma = b(q) dx^dy; equals the curl of theta."""
    q = require_in_domain(model, q)
    if model.kind == FLAT_TORUS:
        return np.broadcast_to(np.float64(model.B), q.shape[:-1]).copy()
    if model.kind == EXACT_TORUS:
        return (2.0 * np.pi * model.eta_amplitude
                * np.cos(2.0 * np.pi * q[..., 0]))
    return -model.B / q[..., 1] ** 2


def deck_affine(model: SurfaceModel, elem: FreeHomotopyClass) -> tuple[float, np.ndarray]:
    """(scale, offset) of the affine deck map q -> scale*q + offset for elem."""
    if model.kind == HYPERBOLIC:
        if elem.n != 0:
            raise ModelError("half-plane deck elements are dilation powers (m, 0)")
        if elem.m != 0 and model.lam is None:
            raise ModelError("class not representable: model has no dilation generator")
        scale = 1.0 if elem.m == 0 else model.lam ** elem.m
        return scale, np.zeros(2)
    return 1.0, np.array([float(elem.m), float(elem.n)])


def apply_deck(model: SurfaceModel, elem: FreeHomotopyClass, q) -> np.ndarray:
    """Apply the deck transformation labelled by elem to chart point(s) q."""
    q = require_in_domain(model, q)
    scale, offset = deck_affine(model, elem)
    return scale * q + offset


def chart_origin(model: SurfaceModel) -> np.ndarray:
    """Base point used for reference loops: (0,0) on tori, (0,1) on the half-plane."""
    if model.kind == HYPERBOLIC:
        return np.array([0.0, 1.0])
    return np.zeros(2)


def metric_norm(model: SurfaceModel, q, vec) -> np.ndarray:
    """g-norm of tangent vector(s) vec at point(s) q."""
    g = eval_metric(model, q)
    vec = np.asarray(vec, dtype=float)
    return np.sqrt(np.einsum("...ij,...i,...j->...", g, vec, vec))


def covector_norm(model: SurfaceModel, q, cov) -> np.ndarray:
    """Dual g-norm of covector(s) cov at point(s) q."""
    ginv = eval_metric_inv(model, q)
    cov = np.asarray(cov, dtype=float)
    return np.sqrt(np.einsum("...ij,...i,...j->...", ginv, cov, cov))


def point_distance(model: SurfaceModel, a, b) -> float:
    """Geodesic distance between two cover-chart points."""
    a = require_in_domain(model, np.asarray(a, dtype=float))
    b = require_in_domain(model, np.asarray(b, dtype=float))
    if model.kind == HYPERBOLIC:
        d2 = np.sum((a - b) ** 2, axis=-1)
        arg = 1.0 + d2 / (2.0 * a[..., 1] * b[..., 1])
        return np.arccosh(np.maximum(arg, 1.0))
    return np.sqrt(np.sum((a - b) ** 2, axis=-1))
