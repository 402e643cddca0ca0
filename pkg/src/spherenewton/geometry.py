"""Geometry of the unit sphere S^{n-1} embedded in R^n.

Points and tangent vectors are plain 1-D float arrays. A tangent vector at
``p`` is any ``v`` with ``<p, v> = 0``. All functions are pure.
"""
import numpy as np

from .errors import AntipodalPoints, DimensionMismatch, NotOnSphere

#: below this norm, exp switches to its Taylor expansion
EXP_SERIES_THRESHOLD = 1e-8
#: log and transport refuse pairs with <p, q> <= -1 + ANTIPODAL_TOL
ANTIPODAL_TOL = 1e-10


def as_point(x, atol=1e-12):
    """Validate ``x`` as a point of the sphere and return it as a float array."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.shape[0] < 2:
        raise DimensionMismatch(f"sphere point must be a vector of length >= 2, got shape {p.shape}")
    if abs(np.linalg.norm(p) - 1.0) > atol:
        raise NotOnSphere(f"|p| = {np.linalg.norm(p)!r} is not 1")
    return p


def normalize(x):
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x)


def _check_dims(p, u):
    if p.shape != u.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {u.shape} differ")


def project_to_tangent(p, u):
    """Orthogonal projection ``(I - p p^T) u`` onto the tangent space at p."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_dims(p, u)
    return u - (p @ u) * p


def exp(p, v):
    """Exponential map: follow the great circle from p with velocity v for unit time."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(p, v)
    t = np.linalg.norm(v)
    if t < EXP_SERIES_THRESHOLD:
        q = (1.0 - 0.5 * t * t) * p + (1.0 - t * t / 6.0) * v
    else:
        q = np.cos(t) * p + (np.sin(t) / t) * v
    return q / np.linalg.norm(q)


def log(p, q):
    """Inverse of :func:`exp`; the tangent vector at p pointing to q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_dims(p, q)
    c = p @ q
    if c <= -1.0 + ANTIPODAL_TOL:
        raise AntipodalPoints(f"<p, q> = {c!r}: log is undefined at the antipode")
    w = q - c * p
    # second Gram-Schmidt pass: near the antipode w is small and the
    # rounding left along p would be amplified by theta / |w|
    w -= (p @ w) * p
    s = np.linalg.norm(w)
    if s == 0.0:
        return np.zeros_like(p)
    return (np.arctan2(s, c) / s) * w


def distance(p, q):
    """Great-circle distance in [0, pi]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_dims(p, q)
    c = min(1.0, max(-1.0, p @ q))
    # atan2 form keeps full precision near 0 and pi, where arccos does not
    return float(np.arctan2(np.linalg.norm(q - c * p), c))


def parallel_transport(p, q, v):
    """Transport v from T_p to T_q along the minimal geodesic."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_dims(p, q)
    _check_dims(p, v)
    u = log(p, q)
    theta = np.linalg.norm(u)
    if theta == 0.0:
        return v.copy()
    e = u / theta
    a = e @ v
    return v + ((np.cos(theta) - 1.0) * a) * e - (np.sin(theta) * a) * p


class TangentBasis:
    """Orthonormal basis of T_p S^{n-1} from a Householder reflector.

    The reflector ``H = I - 2 u u^T / (u^T u)`` with ``u = e_1 + s p``
    (``s = +1`` if ``p_1 >= 0`` else ``-1``) maps ``e_1`` to ``-s p``; its
    last n-1 columns span the tangent space. ``H`` is never formed: all
    products go through the rank-one structure.
    """

    def __init__(self, p):
        self.base = np.asarray(p, dtype=float)
        n = self.base.shape[0]
        sign = 1.0 if self.base[0] >= 0.0 else -1.0
        u = sign * self.base
        u[0] += 1.0
        self._u = u
        self._c = 2.0 / (u @ u)
        self.n = n

    @property
    def columns(self):
        """The n x (n-1) matrix Q of basis vectors."""
        u, c = self._u, self._c
        Q = -c * np.outer(u, u[1:])
        Q[1:, :] += np.eye(self.n - 1)
        return Q

    def coords(self, x):
        """Q^T x for an ambient vector (or matrix, column-wise)."""
        u, c = self._u, self._c
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return x[1:] - c * np.outer(u[1:], u @ x)
        return x[1:] - (c * (u @ x)) * u[1:]

    def embed(self, w):
        """Q w: the ambient vector with tangent coordinates w."""
        u, c = self._u, self._c
        w = np.asarray(w, dtype=float)
        x = np.empty(self.n)
        x[0] = 0.0
        x[1:] = w
        return x - (c * (u[1:] @ w)) * u

    def compress(self, V):
        """Q^T V Q, the (n-1) x (n-1) matrix of V restricted to the tangent space."""
        u, c = self._u, self._c
        V = np.asarray(V, dtype=float)
        # V Q = V[:, 1:] - c (V u) u[1:]^T
        VQ = V[:, 1:] - c * np.outer(V @ u, u[1:])
        # Q^T (VQ) = VQ[1:, :] - c u[1:] (u^T VQ)
        return VQ[1:, :] - c * np.outer(u[1:], u @ VQ)


def tangent_basis(p):
    return TangentBasis(p)
