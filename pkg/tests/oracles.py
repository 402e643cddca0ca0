"""Reference computations that share no code path with the package.

Everything here is dense, explicit, and written straight from the defining
formulas: full projector matrices, ODE integration for parallel transport,
one-dimensional solves on the circle.
"""
import numpy as np
from scipy.integrate import solve_ivp


def projector(p):
    return np.eye(p.size) - np.outer(p, p)


def avvf_value(A, b, p):
    return projector(p) @ (A @ p - np.abs(p) - b)


def avvf_clarke(A, b, p):
    n = p.size
    sgn = np.array([1.0 if x > 0 else (-1.0 if x < 0 else 0.0) for x in p])
    F = A @ p - np.abs(p) - b
    return projector(p) @ (A - np.diag(sgn)) - float(p @ F) * np.eye(n)


def merit_gradient(A, b, p):
    return projector(p) @ (avvf_clarke(A, b, p).T @ avvf_value(A, b, p))


def newton_direction_circle(A, b, p):
    """On S^1 the tangent space is spanned by tau = (-p2, p1): a scalar solve."""
    tau = np.array([-p[1], p[0]])
    X = avvf_value(A, b, p)
    V = avvf_clarke(A, b, p)
    w = -(tau @ X) / (tau @ V @ tau)
    return w * tau


def sphere_exp(p, v):
    t = np.linalg.norm(v)
    if t == 0.0:
        return p.copy()
    return np.cos(t) * p + np.sin(t) * v / t


def transport_ode(p, q, v, rtol=1e-12, atol=1e-14):
    """Integrate Y' = -<Y, gamma'> gamma along the great circle from p to q."""
    c = float(np.clip(p @ q, -1.0, 1.0))
    w = q - c * p
    theta = np.arccos(c)
    e = w / np.linalg.norm(w)

    def gamma(t):
        return np.cos(t * theta) * p + np.sin(t * theta) * e

    def dgamma(t):
        return theta * (-np.sin(t * theta) * p + np.cos(t * theta) * e)

    def rhs(t, y):
        return -(y @ dgamma(t)) * gamma(t)

    sol = solve_ivp(rhs, (0.0, 1.0), v, method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1]


def central_difference(f, h):
    return (f(h) - f(-h)) / (2.0 * h)
