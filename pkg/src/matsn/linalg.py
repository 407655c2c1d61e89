"""Dense matrix utilities: vec/Kronecker algebra, correlation scaling,
PSD and copositivity certification.

Matrices are plain ``numpy`` arrays. ``vec`` stacks columns, so entry
``(i, j)`` of an ``n x p`` matrix (0-based) lands at ``i + n*j``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DimensionTooLarge,
    NonFiniteValue,
    NonPositiveDiagonal,
    NotPositiveDefinite,
    NotSymmetric,
    ShapeMismatch,
)

EQ_TOL = 1e-10
INEQ_TOL = 1e-8
SYM_TOL = 1e-12
MAX_COPOSITIVE_DIM = 16


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.size == 0:
        raise ShapeMismatch(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteValue(f"{name} has non-finite entries")
    return m


def check_symmetric(a: np.ndarray, name: str = "matrix", tol: float = SYM_TOL) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > tol * scale:
        raise NotSymmetric(f"{name} is not symmetric")


def as_spd(a, name: str = "matrix") -> np.ndarray:
    """Validate a strictly positive definite matrix and return a symmetrized copy."""
    m = as_matrix(a, name)
    check_symmetric(m, name)
    m = 0.5 * (m + m.T)
    eig = np.linalg.eigvalsh(m)
    if eig[0] <= m.shape[0] * 1e-12 * max(eig[-1], 0.0) or eig[-1] <= 0:
        raise NotPositiveDefinite(f"{name} is not positive definite (min eigenvalue {eig[0]:.3g})")
    return m


def vec(m) -> np.ndarray:
    """Column-stack an ``n x p`` matrix (or a stack ``(..., n, p)``)."""
    m = np.asarray(m, dtype=float)
    if m.ndim < 2:
        return m.reshape(-1)
    return np.swapaxes(m, -1, -2).reshape(*m.shape[:-2], -1)


def unvec(v, n: int, p: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != n * p:
        raise ShapeMismatch(f"vector of length {v.shape[-1]} cannot be unvec'd to {n}x{p}")
    return np.swapaxes(v.reshape(*v.shape[:-1], p, n), -1, -2)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


@dataclass(frozen=True)
class CorrDecomposition:
    scale_diag: np.ndarray
    correlation: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.correlation * np.outer(self.scale_diag, self.scale_diag)


def corr_decompose(omega) -> CorrDecomposition:
    """Split ``omega = w @ corr @ w`` with ``w = diag(sqrt(diag(omega)))``."""
    omega = np.asarray(omega, dtype=float)
    d = np.diag(omega)
    if np.any(d <= 0):
        raise NonPositiveDiagonal("scale matrix has a non-positive diagonal entry")
    s = np.sqrt(d)
    corr = omega / np.outer(s, s)
    np.fill_diagonal(corr, 1.0)
    return CorrDecomposition(scale_diag=s, correlation=0.5 * (corr + corr.T))


def kron_corr_check(v, sigma, tol: float = EQ_TOL) -> bool:
    """Check that the correlation of ``v (x) sigma`` is the Kronecker
    product of the two factor correlations."""
    lhs = corr_decompose(kron(v, sigma)).correlation
    rhs = kron(corr_decompose(v).correlation, corr_decompose(sigma).correlation)
    return bool(np.max(np.abs(lhs - rhs)) <= tol)


def is_psd(a, tol: float = INEQ_TOL) -> tuple[bool, Optional[np.ndarray]]:
    """Return ``(True, None)`` or ``(False, z)`` with ``z' a z < 0``.

    Uses a symmetric eigen-decomposition, never a Cholesky attempt.
    """
    a = as_matrix(a)
    check_symmetric(a, tol=1e-10)
    a = 0.5 * (a + a.T)
    w, q = np.linalg.eigh(a)
    bound = -tol * max(1.0, float(np.max(np.abs(a))))
    if w[0] >= bound:
        return True, None
    return False, q[:, 0]


@dataclass(frozen=True)
class CopositivityVerdict:
    copositive: bool
    min_value: float
    witness: Optional[np.ndarray]

    @property
    def status(self) -> str:
        return "Copositive" if self.copositive else "NotCopositive"


def _simplex_kkt_candidate(a: np.ndarray, idx: tuple[int, ...]) -> Optional[np.ndarray]:
    k = len(idx)
    sub = a[np.ix_(idx, idx)]
    border = np.zeros((k + 1, k + 1))
    border[:k, :k] = sub
    border[:k, k] = -1.0
    border[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    if np.linalg.cond(border) > 1e12:
        return None
    sol = np.linalg.solve(border, rhs)
    xs = sol[:k]
    if np.any(xs <= 0):
        return None
    x = np.zeros(a.shape[0])
    x[list(idx)] = xs / xs.sum()
    return x


def is_copositive(a, tol: float = INEQ_TOL) -> CopositivityVerdict:
    """Exact copositivity decision by enumerating KKT supports.

    Minimizes ``x' a x`` over the unit simplex: for every support ``S`` the
    stationarity system ``a_SS x_S = lam 1, sum(x_S) = 1`` is solved and kept
    when ``x_S > 0``. A singular system means the quadratic is flat along a
    feasible line, so its minimum also sits on a smaller support.
    """
    a = as_matrix(a)
    check_symmetric(a, tol=1e-10)
    a = 0.5 * (a + a.T)
    dim = a.shape[0]
    if dim > MAX_COPOSITIVE_DIM:
        raise DimensionTooLarge(f"copositivity enumeration limited to dim <= {MAX_COPOSITIVE_DIM}")

    k0 = int(np.argmin(np.diag(a)))
    best = np.zeros(dim)
    best[k0] = 1.0
    best_val = float(a[k0, k0])
    for size in range(2, dim + 1):
        for idx in itertools.combinations(range(dim), size):
            x = _simplex_kkt_candidate(a, idx)
            if x is None:
                continue
            val = float(x @ a @ x)
            if val < best_val:
                best, best_val = x, val
    scale = max(1.0, float(np.max(np.abs(a))))
    if best_val < -tol * scale:
        return CopositivityVerdict(False, best_val, best)
    return CopositivityVerdict(True, best_val, None)


def kron_equal_up_to_scale(v, sigma, v2, sigma2, tol: float = EQ_TOL) -> Optional[float]:
    """Return ``a`` with ``v = a*v2`` and ``sigma = sigma2/a``, or ``None``."""
    v, sigma, v2, sigma2 = (np.asarray(m, dtype=float) for m in (v, sigma, v2, sigma2))
    if v.shape != v2.shape or sigma.shape != sigma2.shape:
        return None
    if v2[0, 0] == 0:
        return None
    a = v[0, 0] / v2[0, 0]
    if a <= 0:
        return None
    ok_v = np.max(np.abs(v - a * v2)) <= tol * max(1.0, np.max(np.abs(v)))
    ok_s = np.max(np.abs(sigma - sigma2 / a)) <= tol * max(1.0, np.max(np.abs(sigma)))
    return float(a) if (ok_v and ok_s) else None


def elementwise_leq(a, b, tol: float = INEQ_TOL) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    return bool(np.all(a <= b + tol))


def first_violation(a, b, tol: float = INEQ_TOL) -> Optional[tuple[int, ...]]:
    """Index of the largest violation of ``a <= b + tol``, if any."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    excess = a - b
    k = int(np.argmax(excess))
    if excess.flat[k] <= tol:
        return None
    return tuple(int(i) for i in np.unravel_index(k, a.shape))


def sym_sqrt(a: np.ndarray) -> np.ndarray:
    w, q = np.linalg.eigh(0.5 * (a + a.T))
    return (q * np.sqrt(np.clip(w, 0.0, None))) @ q.T
