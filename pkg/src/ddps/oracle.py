"""Local objectives with bounded subgradients, step sizes and a centralized reference solver."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .projection import Ball, Box, ConstraintSet, WholeSpace


def _sigmoid_neg(t):
    # sigma(-t) = 1 / (1 + exp(t)), overflow-free
    return np.exp(-np.logaddexp(0.0, t))


@dataclass(frozen=True, eq=False)
class Logistic:
    """``f(x) = sum_j log(1 + exp(-y_j c_j'x))`` over the rows of `features`."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels, dtype=float).reshape(-1)
        if C.shape[0] != y.size:
            raise ValueError("features and labels differ in sample count")
        if not np.isin(y, (-1.0, 1.0)).all():
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", C)
        object.__setattr__(self, "labels", y)

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def bound(self):
        return float(np.linalg.norm(self.features, axis=1).sum())

    def value(self, x):
        margins = self.labels * (self.features @ x)
        return float(np.logaddexp(0.0, -margins).sum())

    def subgradient(self, x):
        margins = self.labels * (self.features @ x)
        return (-self.labels * _sigmoid_neg(margins)) @ self.features


@dataclass(frozen=True, eq=False)
class SumOfDistances:
    """``f(x) = sum_j ||x - a_j||`` over the rows of `anchors` (may be empty)."""

    anchors: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.anchors, dtype=float)
        if a.ndim != 2:
            raise ValueError("anchors must be a 2-d array (count, dim)")
        object.__setattr__(self, "anchors", a)

    @property
    def dim(self):
        return self.anchors.shape[1]

    @property
    def bound(self):
        return float(self.anchors.shape[0])

    def value(self, x):
        return float(np.linalg.norm(x - self.anchors, axis=1).sum())

    def subgradient(self, x):
        D = x - self.anchors
        norms = np.linalg.norm(D, axis=1)
        # zero at a kink is a valid subgradient element
        safe = np.where(norms > 0, norms, 1.0)
        return np.where((norms > 0)[:, None], D / safe[:, None], 0.0).sum(axis=0)


LocalObjective = Logistic | SumOfDistances


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """One local objective per agent; ``B`` is the certified subgradient bound."""

    locals: tuple

    def __post_init__(self):
        locs = tuple(self.locals)
        if not locs:
            raise ValueError("need at least one agent")
        dims = {f.dim for f in locs}
        if len(dims) != 1:
            raise ValueError(f"agents disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "locals", locs)

    @property
    def n(self):
        return len(self.locals)

    @property
    def p(self):
        return self.locals[0].dim

    @property
    def B(self):
        return max(f.bound for f in self.locals)

    def subgradients(self, X):
        """Row ``i`` is a subgradient of ``f_i`` at ``X[i]``."""
        return np.stack([f.subgradient(x) for f, x in zip(self.locals, X)])

    def pooled(self):
        """A single objective equal to ``sum_i f_i``, or ``None`` for mixed families."""
        if all(isinstance(f, Logistic) for f in self.locals):
            return Logistic(np.concatenate([f.features for f in self.locals]),
                            np.concatenate([f.labels for f in self.locals]))
        if all(isinstance(f, SumOfDistances) for f in self.locals):
            return SumOfDistances(np.concatenate([f.anchors for f in self.locals]))
        return None


def subgradient(spec: ObjectiveSpec, i: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("x must be finite")
    return spec.locals[i].subgradient(x)


def objective_value(spec: ObjectiveSpec, i: int, x) -> float:
    return spec.locals[i].value(np.asarray(x, dtype=float))


def global_objective(spec: ObjectiveSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    total = 0.0
    for f in spec.locals:
        total += f.value(x)
    return total


@dataclass(frozen=True)
class StepSchedule:
    """``alpha_k = a / (k + 1)**exponent``, so ``alpha_0 = a``.

    ``exponent = 0.5`` is the classical ``1/sqrt(k)`` rule; it is not
    square-summable (``sum alpha_k^2`` grows like ``a^2 ln K``). Exponents in
    ``(0.5, 1]`` satisfy both persistence conditions.
    """

    a: float = 1.0
    exponent: float = 0.5

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("step constant must be positive")
        if not 0.5 <= self.exponent <= 1.0:
            raise ValueError("exponent must lie in [0.5, 1]")

    def alpha(self, k: int) -> float:
        return self.a / (k + 1) ** self.exponent

    def alphas(self, K: int) -> np.ndarray:
        return self.a / np.arange(1, K + 1, dtype=float) ** self.exponent


def _set_center(cset):
    return np.array(cset.center, dtype=float)


def reference_optimum(spec: ObjectiveSpec, cset: ConstraintSet, budget: int,
                      seed: int = 0, a: float | None = None) -> tuple[np.ndarray, float]:
    """Centralized projected subgradient descent on ``sum_i f_i`` over `cset`.

    Steps are ``a / sqrt(t + 1)`` applied to the normalized subgradient, so the
    default ``a`` (the set's diameter, or 1 when unbounded) sets the scale of the
    first move. The start is the set's center plus a small `seed`-dependent
    jitter. Returns the best of the visited points and the running
    step-weighted average.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if a is None:
        a = _diameter(cset)
    total = spec.pooled() or _Sum(spec)
    rng = np.random.default_rng(seed)
    x = cset.project_rows((_set_center(cset) + 1e-3 * rng.standard_normal(spec.p))[None])[0]
    best_x, best_f = x.copy(), total.value(x)
    avg, weight = np.zeros_like(x), 0.0
    for t in range(budget):
        g = total.subgradient(x)
        gnorm = np.linalg.norm(g)
        if gnorm == 0:
            break
        step = a / np.sqrt(t + 1)
        x = cset.project_rows((x - step * g / gnorm)[None])[0]
        avg += step * x
        weight += step
        fx = total.value(x)
        if fx < best_f:
            best_x, best_f = x.copy(), fx
    if weight > 0:
        xa = avg / weight
        fa = total.value(xa)
        if fa < best_f:
            best_x, best_f = xa, fa
    return best_x, global_objective(spec, best_x)


class _Sum:
    def __init__(self, spec):
        self.spec = spec

    def value(self, x):
        return global_objective(self.spec, x)

    def subgradient(self, x):
        return sum(f.subgradient(x) for f in self.spec.locals)


def _diameter(cset):
    if isinstance(cset, Ball):
        return 2.0 * cset.radius
    if isinstance(cset, Box):
        d = float(np.linalg.norm(cset.upper - cset.lower))
        return d if d > 0 else 1.0
    return 1.0


def clipped_median(spec: ObjectiveSpec, cset: ConstraintSet):
    """Analytic constrained minimizer for scalar sum-of-distances problems.

    Returns ``(x_star, f_star)`` or ``None`` when the instance is not a
    one-dimensional sum-of-distances problem on an interval or the real line.
    With an even anchor count the median interval is intersected with the
    constraint and its midpoint taken.
    """
    if spec.p != 1 or not all(isinstance(f, SumOfDistances) for f in spec.locals):
        return None
    if isinstance(cset, Box):
        lo, hi = float(cset.lower[0]), float(cset.upper[0])
    elif isinstance(cset, WholeSpace):
        lo, hi = -np.inf, np.inf
    else:
        return None
    pts = np.sort(np.concatenate([f.anchors[:, 0] for f in spec.locals]))
    if pts.size == 0:
        x = 0.0 if lo <= 0.0 <= hi else (lo if lo > 0 else hi)
    else:
        m = pts.size
        med_lo, med_hi = pts[(m - 1) // 2], pts[m // 2]
        left, right = max(med_lo, lo), min(med_hi, hi)
        if left <= right:
            x = 0.5 * (left + right)
        else:
            x = lo if med_hi < lo else hi
    xs = np.array([x])
    return xs, global_objective(spec, xs)


def optimum(spec: ObjectiveSpec, cset: ConstraintSet, budget: int, seed: int = 0):
    """``(x_star, f_star, provenance)``: analytic when available, else the reference solver."""
    exact = clipped_median(spec, cset)
    if exact is not None:
        return exact[0], exact[1], "analytic"
    x, f = reference_optimum(spec, cset, budget, seed)
    return x, f, "reference"


def synthetic_logistic(n: int, m: int, p: int, seed: int, flip: float = 0.1) -> ObjectiveSpec:
    """Gaussian features, labels from a planted random separator, a `flip` fraction flipped."""
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((n, m, p))
    w = rng.standard_normal(p)
    y = np.where(C @ w >= 0, 1.0, -1.0)
    y[rng.random((n, m)) < flip] *= -1.0
    return ObjectiveSpec(tuple(Logistic(C[i], y[i]) for i in range(n)))


def _read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        return [f.strip() for f in reader.fieldnames], list(reader)


def _agent_of(row, idx, n, path):
    if "agent" in row and row["agent"] not in (None, ""):
        a = int(row["agent"])
    else:
        a = idx % n
    if not 0 <= a < n:
        raise ValueError(f"{path}: agent {a} out of range for n={n}")
    return a


def load_logistic_csv(path, n: int) -> ObjectiveSpec:
    """Columns ``label, f_1..f_p`` and optionally ``agent``; round-robin when no agent column."""
    fields, rows = _read_rows(path)
    feats = sorted((c for c in fields if c.startswith("f_")), key=lambda c: int(c[2:]))
    if "label" not in fields or not feats:
        raise ValueError(f"{path}: need 'label' and 'f_1..f_p' columns")
    per_agent = [([], []) for _ in range(n)]
    for idx, row in enumerate(rows):
        a = _agent_of(row, idx, n, path)
        per_agent[a][0].append([float(row[c]) for c in feats])
        per_agent[a][1].append(float(row["label"]))
    p = len(feats)
    return ObjectiveSpec(tuple(
        Logistic(np.array(C, dtype=float).reshape(-1, p), np.array(y)) for C, y in per_agent
    ))


def load_anchors_csv(path, n: int) -> ObjectiveSpec:
    """Columns ``agent, x_1..x_p``; agents without rows get the zero objective."""
    fields, rows = _read_rows(path)
    coords = sorted((c for c in fields if c.startswith("x_")), key=lambda c: int(c[2:]))
    if "agent" not in fields or not coords:
        raise ValueError(f"{path}: need 'agent' and 'x_1..x_p' columns")
    per_agent = [[] for _ in range(n)]
    for idx, row in enumerate(rows):
        per_agent[_agent_of(row, idx, n, path)].append([float(row[c]) for c in coords])
    p = len(coords)
    return ObjectiveSpec(tuple(
        SumOfDistances(np.array(a, dtype=float).reshape(-1, p)) for a in per_agent
    ))


def write_logistic_csv(spec: ObjectiveSpec, path) -> None:
    p = spec.p
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["agent", "label"] + [f"f_{j + 1}" for j in range(p)])
        for i, f in enumerate(spec.locals):
            for c, y in zip(f.features, f.labels):
                w.writerow([i, int(y)] + [repr(float(v)) for v in c])
