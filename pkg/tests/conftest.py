import numpy as np
import pytest

from magorb import make_model


@pytest.fixture(scope="session")
def flat_b1():
    return make_model("flat_torus", B=1.0)


@pytest.fixture(scope="session")
def flat_b0():
    return make_model("flat_torus", B=0.0)


@pytest.fixture(scope="session")
def exact_eps01():
    return make_model("exact_torus", eta_amplitude=0.1)


@pytest.fixture(scope="session")
def hyp_b1():
    return make_model("hyperbolic_halfplane", B=1.0)


@pytest.fixture(scope="session")
def hyp_b0_lam2():
    return make_model("hyperbolic_halfplane", B=0.0, lam=2.0)


@pytest.fixture(scope="session")
def all_models(flat_b1, flat_b0, exact_eps01, hyp_b1):
    return [flat_b1, flat_b0, exact_eps01, hyp_b1]


def random_chart_points(model, rng, n):
    """Random points in a sane patch of the model's chart."""
    if model.kind == "hyperbolic_halfplane":
        pts = np.stack([rng.uniform(-2.0, 2.0, n),
                        rng.uniform(0.3, 3.0, n)], axis=-1)
    else:
        pts = rng.uniform(-2.0, 2.0, (n, 2))
    return pts


def random_loop_points(model, rng, N, amplitude=0.25):
    """Random smooth contractible loop staying inside the chart."""
    if model.kind == "hyperbolic_halfplane":
        center = np.array([rng.uniform(-0.5, 0.5), rng.uniform(1.0, 2.0)])
        amplitude = min(amplitude, 0.3)
    else:
        center = rng.uniform(0.0, 1.0, 2)
    t = np.arange(N) / N
    pts = np.tile(center, (N, 1))
    for m in (1, 2, 3):
        coef = rng.normal(size=(2, 2)) * amplitude / m ** 2
        pts[:, 0] += coef[0, 0] * np.cos(2 * np.pi * m * t) + coef[0, 1] * np.sin(2 * np.pi * m * t)
        pts[:, 1] += coef[1, 0] * np.cos(2 * np.pi * m * t) + coef[1, 1] * np.sin(2 * np.pi * m * t)
    return pts
