"""Closed convex sets with exact Euclidean projections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEMBERSHIP_TOL = 1e-12
INEQUALITY_SLACK = 1e-10


def _vec(x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class WholeSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    @property
    def center(self):
        return np.zeros(self.dim)

    def project_rows(self, X):
        return np.array(X, dtype=float, copy=True)


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "center"))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.size

    def project_rows(self, X):
        X = np.asarray(X, dtype=float)
        D = X - self.center
        norms = np.linalg.norm(D, axis=-1, keepdims=True)
        outside = norms > self.radius
        scale = np.where(outside, self.radius / np.where(outside, norms, 1.0), 1.0)
        return np.where(outside, self.center + D * scale, X)


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lower, "lower"), _vec(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ValueError("box bounds differ in dimension")
        if (lo > hi).any():
            raise ValueError("box requires lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    def project_rows(self, X):
        return np.clip(X, self.lower, self.upper)


def interval(lower: float, upper: float) -> Box:
    """Scalar interval ``[lower, upper]`` as a one-dimensional box."""
    return Box(np.array([lower], dtype=float), np.array([upper], dtype=float))


ConstraintSet = WholeSpace | Ball | Box


def project(cset: ConstraintSet, x) -> np.ndarray:
    """Euclidean projection of a single vector onto `cset`."""
    x = _vec(x)
    if x.size != cset.dim:
        raise ValueError(f"dimension mismatch: x has {x.size}, set has {cset.dim}")
    if np.isnan(x).any():
        raise ValueError("cannot project a vector containing NaN")
    return cset.project_rows(x[None, :])[0]


def contains(cset: ConstraintSet, x, tol: float = MEMBERSHIP_TOL) -> bool:
    x = _vec(x)
    return bool(np.abs(project(cset, x) - x).max(initial=0.0) <= tol)


def check_projection_inequalities(cset: ConstraintSet, x, y) -> tuple[bool, bool]:
    """Check the two standard projection inequalities for ``y`` in the set.

    (a) ``<y - P[x], x - P[x]> <= 0`` and
    (b) ``||P[x] - y||^2 <= ||x - y||^2 - ||P[x] - x||^2``,
    each with ``INEQUALITY_SLACK`` of tolerance.
    """
    x, y = _vec(x), _vec(y, "y")
    if not contains(cset, y):
        raise ValueError("y is not a member of the constraint set")
    px = project(cset, x)
    a_ok = float(np.dot(y - px, x - px)) <= INEQUALITY_SLACK
    lhs = float(np.sum((px - y) ** 2))
    rhs = float(np.sum((x - y) ** 2) - np.sum((px - x) ** 2))
    return a_ok, lhs <= rhs + INEQUALITY_SLACK
