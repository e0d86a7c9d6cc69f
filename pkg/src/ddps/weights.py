"""Surplus-consensus mixing weights and the augmented 2n x 2n matrix.

The augmented matrix is::

    M = [[A,      eps*I    ],
         [I - A,  B - eps*I]]

with ``A`` row-stochastic (in-weights) and ``B`` column-stochastic
(out-weights). Its powers converge geometrically to
``[[11'/n, 11'/n], [0, 0]]`` for small enough ``eps``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GraphError, NumericalAbort
from .graph import DirectedGraph, is_strongly_connected

STOCHASTIC_TOL = 1e-12
DEFAULT_EPSILON_CAP = 1e-3

# Limit errors below this are rounding noise and are dropped before fitting.
FIT_NOISE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class SurplusSystem:
    n: int
    A: np.ndarray
    B: np.ndarray
    epsilon: float
    M: np.ndarray


def build_weights(g: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Uniform in-weights ``a_ij = 1/|N_i^in|`` and out-weights ``b_ij = 1/|N_j^out|``."""
    if not is_strongly_connected(g):
        raise GraphError("graph is not strongly connected")
    adj = g.adjacency().astype(float)
    A = adj / adj.sum(axis=1, keepdims=True)
    B = adj / adj.sum(axis=0, keepdims=True)
    return A, B


def _check_stochastic(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ValueError(f"A and B must be square and of equal shape, got {A.shape}, {B.shape}")
    if (A < 0).any() or (B < 0).any():
        raise ValueError("weights must be nonnegative")
    if np.abs(A.sum(axis=1) - 1).max() > STOCHASTIC_TOL:
        raise ValueError("A is not row-stochastic")
    if np.abs(B.sum(axis=0) - 1).max() > STOCHASTIC_TOL:
        raise ValueError("B is not column-stochastic")
    return A, B


def _blocks(A, B, epsilon):
    n = A.shape[0]
    eye = np.eye(n)
    return np.block([[A, epsilon * eye], [eye - A, B - epsilon * eye]])


def assemble_m(A, B, epsilon: float) -> np.ndarray:
    """Assemble the augmented matrix; requires ``0 < epsilon <= min_i b_ii``."""
    A, B = _check_stochastic(A, B)
    if not (epsilon > 0 and epsilon <= B.diagonal().min()):
        raise ValueError(
            f"epsilon={epsilon!r} out of range (0, {B.diagonal().min():.6g}]"
        )
    return _blocks(A, B, float(epsilon))


def limit_matrix(n: int) -> np.ndarray:
    L = np.zeros((2 * n, 2 * n))
    L[:n, :] = 1.0 / n
    return L


def choose_epsilon(B, cap: float = DEFAULT_EPSILON_CAP) -> float:
    """Practical epsilon: ``min(cap, 0.99 * min_i b_ii)``."""
    if cap <= 0:
        raise ValueError("epsilon cap must be positive")
    return float(min(cap, 0.99 * np.asarray(B).diagonal().min()))


def surplus_system(g: DirectedGraph, epsilon: float | None = None,
                   epsilon_cap: float = DEFAULT_EPSILON_CAP) -> SurplusSystem:
    """Weights, epsilon and ``M`` for `g`. ``epsilon=None`` selects the capped-auto policy."""
    A, B = build_weights(g)
    eps = choose_epsilon(B, epsilon_cap) if epsilon is None else float(epsilon)
    return SurplusSystem(g.n, A, B, eps, assemble_m(A, B, eps))


def _third_eigenvalue(A, B):
    ev = np.linalg.eigvals(_blocks(A, B, 0.0))
    # modulus descending, ties by real part descending
    order = np.lexsort((-ev.real, -np.abs(ev)))
    return ev[order[2]]


def log_epsilon_upper_bound(A, B) -> float:
    """Natural log of ``(1 - |lam3|)^n / (20 + 8n)^n``.

    ``lam3`` is the third-largest eigenvalue (by modulus) of ``M`` with
    ``epsilon = 0``. Use this form when ``n`` is large enough for the bound
    itself to underflow.
    """
    A, B = _check_stochastic(A, B)
    n = A.shape[0]
    if n < 2:
        raise ValueError("n too small for the epsilon bound: M has no third eigenvalue")
    try:
        lam3 = _third_eigenvalue(A, B)
    except np.linalg.LinAlgError as exc:
        raise NumericalAbort(f"eigensolver failed: {exc}") from exc
    gap = 1.0 - abs(lam3)
    if gap <= 0:
        return -np.inf
    return n * (np.log(gap) - np.log(20 + 8 * n))


def epsilon_upper_bound(A, B) -> float:
    """Reference upper bound on epsilon for geometric convergence of ``M^k``."""
    return float(np.exp(log_epsilon_upper_bound(A, B)))


def _inf_norm(D):
    return float(np.abs(D).sum(axis=1).max())


def matrix_limit_error(M, k: int) -> float:
    """``|| M^k - L ||_inf`` with ``L`` the limit matrix."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0] // 2
    P = np.linalg.matrix_power(M, int(k))
    err = _inf_norm(P - limit_matrix(n))
    if not np.isfinite(err):
        raise NumericalAbort(f"non-finite limit error at k={k}; epsilon likely invalid")
    return err


def limit_error_series(M, k_max: int) -> np.ndarray:
    """Limit errors for ``k = 0 .. k_max``, by repeated right-multiplication."""
    M = np.asarray(M, dtype=float)
    L = limit_matrix(M.shape[0] // 2)
    P = np.eye(M.shape[0])
    out = np.empty(k_max + 1)
    for k in range(k_max + 1):
        if k:
            P = P @ M
        out[k] = _inf_norm(P - L)
    if not np.isfinite(out).all():
        raise NumericalAbort("non-finite entries while powering M; epsilon likely invalid")
    return out


def fit_log_linear(x, y) -> tuple[float, float, float]:
    """Least-squares ``log y = c + s x``; returns ``(c, s, r_squared)``.

    ``r_squared`` is NaN when ``log y`` is flat to rounding, where it is undefined.
    """
    x = np.asarray(x, dtype=float)
    logy = np.log(np.asarray(y, dtype=float))
    s, c = np.polyfit(x, logy, 1)
    resid = logy - (c + s * x)
    ss_tot = np.sum((logy - logy.mean()) ** 2)
    flat = ss_tot <= logy.size * (1e-12 * max(1.0, np.abs(logy).max())) ** 2
    r2 = np.nan if flat else 1.0 - np.sum(resid ** 2) / ss_tot
    return float(c), float(s), float(r2)


def geometric_fit(errors) -> tuple[float, float, float]:
    """Fit ``err_k ~ Gamma * gamma^k`` for ``k >= 1``; returns ``(Gamma, gamma, r_squared)``.

    Terms at or below the rounding floor are excluded.
    """
    errors = np.asarray(errors, dtype=float)
    ks = np.arange(len(errors))
    keep = (ks >= 1) & (errors > FIT_NOISE_FLOOR)
    if keep.sum() < 2:
        raise NumericalAbort("fewer than two usable limit-error terms to fit")
    c, s, r2 = fit_log_linear(ks[keep], errors[keep])
    return float(np.exp(c)), float(np.exp(s)), r2


def estimate_gamma(M, k_max: int) -> tuple[float, float]:
    """Empirical ``(Gamma, gamma)`` such that ``||M^k - L||_inf ~ Gamma * gamma^k``."""
    Gamma, gamma, _ = geometric_fit(limit_error_series(M, k_max))
    if not 0 < gamma < 1:
        raise NumericalAbort(f"fitted gamma={gamma:.6g} not in (0, 1); epsilon too large?")
    return Gamma, gamma
