"""Nonsmooth vector fields on the sphere and their Clarke elements.

A field maps a point p of S^{n-1} to a tangent vector X(p) and supplies one
element V of its Clarke generalized covariant derivative at p, represented
as an ambient n x n matrix whose action on T_p is the covariant derivative.
"""
import abc

import numpy as np

from . import _kernels
from .errors import DimensionMismatch


class VectorField(abc.ABC):
    """Interface the solvers need from a field."""

    dimension: int

    @abc.abstractmethod
    def eval(self, p):
        """X(p), a tangent vector at p."""

    @abc.abstractmethod
    def clarke_element(self, p):
        """One V in the Clarke generalized covariant derivative at p (n x n)."""

    def eval_and_clarke(self, p):
        return self.eval(p), self.clarke_element(p)


def _check(field, p):
    p = np.asarray(p, dtype=float)
    if p.shape != (field.dimension,):
        raise DimensionMismatch(f"point has shape {p.shape}, field has dimension {field.dimension}")
    return p


class AvvfField(VectorField):
    """Absolute value vector field ``X(p) = (I - p p^T)(A p - |p| - b)``.

    The Clarke element is ``(I - p p^T)(A - diag(sgn p)) - <p, A p - |p| - b> I``
    with ``sgn(0) = 0``.
    """

    def __init__(self, instance):
        self.instance = instance
        self.dimension = instance.n
        A = instance.A
        self._indptr = A.indptr.astype(np.int64)
        self._indices = A.indices.astype(np.int64)
        self._data = A.data.astype(np.float64)
        self._b = np.ascontiguousarray(instance.b, dtype=np.float64)

    def residual(self, p):
        """(X(p), F(p)) where F(p) = A p - |p| - b is the unprojected residual."""
        p = np.ascontiguousarray(_check(self, p))
        return _kernels.avvf_residual(self._indptr, self._indices, self._data, self._b, p)

    def eval(self, p):
        return self.residual(p)[0]

    def clarke_element(self, p):
        p = np.ascontiguousarray(_check(self, p))
        _, F = self.residual(p)
        return _kernels.avvf_clarke(self._indptr, self._indices, self._data, p, F)

    def eval_and_clarke(self, p):
        p = np.ascontiguousarray(_check(self, p))
        X, F = self.residual(p)
        return X, _kernels.avvf_clarke(self._indptr, self._indices, self._data, p, F)


def avvf_eval(instance, p):
    return AvvfField(instance).eval(p)


def avvf_clarke_element(instance, p):
    return AvvfField(instance).clarke_element(p)


class ProjectedAffineField(VectorField):
    """Smooth field ``X(p) = (I - p p^T)(A p - b)`` with covariant derivative
    ``(I - p p^T) A - <p, A p - b> I``. Useful as a regular, smooth test case."""

    def __init__(self, A, b):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.dimension = self.b.shape[0]

    def eval(self, p):
        p = _check(self, p)
        F = self.A @ p - self.b
        return F - (p @ F) * p

    def clarke_element(self, p):
        p = _check(self, p)
        F = self.A @ p - self.b
        V = self.A - np.outer(p, p @ self.A)
        V[np.diag_indices_from(V)] -= p @ F
        return V
