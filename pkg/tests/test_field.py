import numpy as np
import pytest

import oracles
from conftest import make_instance, random_point, random_tangent
from spherenewton import geometry as g
from spherenewton.errors import DimensionMismatch
from spherenewton.field import AvvfField, ProjectedAffineField, avvf_clarke_element, avvf_eval
from spherenewton.instances import generate_instance
from spherenewton.solver import merit, merit_gradient


def test_tiny_eval(tiny_instance):
    p = np.array([0.0, 1.0])
    X = avvf_eval(tiny_instance, p)
    # A p - |p| - b = (0,4) - (0,1) - (3,0) = (-3, 3); projection kills e2
    np.testing.assert_allclose(X, [-3.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(X, oracles.avvf_value(4 * np.eye(2), tiny_instance.b, p), atol=1e-15)
    assert np.linalg.norm(X) == pytest.approx(3.0)


def test_tiny_clarke(tiny_instance):
    p = np.array([0.0, 1.0])
    V = avvf_clarke_element(tiny_instance, p)
    np.testing.assert_allclose(V, np.diag([1.0, -3.0]), atol=1e-15)
    np.testing.assert_allclose(V, oracles.avvf_clarke(4 * np.eye(2), tiny_instance.b, p), atol=1e-15)


def test_sign_of_zero_is_zero(tiny_instance):
    p = np.array([1.0, 0.0])
    V = avvf_clarke_element(tiny_instance, p)
    # F(e1) = 0, so V = (I - e1 e1^T)(4I - diag(1, 0)) = diag(0, 4)
    np.testing.assert_allclose(V, np.diag([0.0, 4.0]), atol=1e-15)


def test_planted_solution_is_a_zero(tiny_instance):
    assert np.linalg.norm(avvf_eval(tiny_instance, tiny_instance.planted_solution)) <= 1e-10


def test_dimension_mismatch(tiny_instance):
    with pytest.raises(DimensionMismatch):
        avvf_eval(tiny_instance, np.ones(3) / np.sqrt(3))


def test_tangency_many_points(rng):
    for trial in range(10):
        inst = generate_instance(int(rng.integers(2, 60)), float(rng.choice([0.003, 0.1, 0.5])), trial)
        f = AvvfField(inst)
        for _ in range(100):
            p = random_point(rng, inst.n)
            X = f.eval(p)
            assert abs(p @ X) <= 1e-10 * (1 + np.linalg.norm(X))


def _transported_difference(f, p, v, t):
    """Central difference of X along the geodesic, values transported back to p."""
    qp, qm = g.exp(p, t * v), g.exp(p, -t * v)
    Xp = g.parallel_transport(qp, p, f.eval(qp))
    Xm = g.parallel_transport(qm, p, f.eval(qm))
    return (Xp - Xm) / (2 * t)


def _smooth_point(rng, n, floor=1e-3):
    while True:
        p = random_point(rng, n)
        if np.min(np.abs(p)) > floor:
            return p


@pytest.mark.parametrize("density", [0.003, 0.2])
def test_clarke_is_covariant_derivative_at_smooth_points(rng, density):
    inst = generate_instance(12, density, 5)
    f = AvvfField(inst)
    for _ in range(20):
        p = _smooth_point(rng, 12, 1e-2)
        v = random_tangent(rng, p)
        fd = _transported_difference(f, p, v, 1e-6)
        Vv = f.clarke_element(p) @ v
        assert np.linalg.norm(fd - Vv) <= 1e-4 * max(1.0, np.linalg.norm(Vv))


def test_affine_field_derivative(rng):
    A = rng.normal(size=(6, 6))
    p_star = random_point(rng, 6)
    f = ProjectedAffineField(A, A @ p_star)
    assert np.linalg.norm(f.eval(p_star)) < 1e-14
    for _ in range(10):
        p = random_point(rng, 6)
        v = random_tangent(rng, p)
        fd = _transported_difference(f, p, v, 1e-6)
        np.testing.assert_allclose(fd, f.clarke_element(p) @ v, atol=1e-6)


def test_merit_gradient_identity(rng):
    inst = generate_instance(15, 0.3, 2)
    f = AvvfField(inst)
    for _ in range(20):
        p = _smooth_point(rng, 15, 1e-2)
        v = random_tangent(rng, p)
        fd = oracles.central_difference(lambda t: merit(f, g.exp(p, t * v)), 1e-6)
        slope = merit_gradient(f, p) @ v
        assert abs(fd - slope) <= 1e-4 * max(abs(slope), 1.0)
