"""Scalar test functions on n x p matrices, with analytic derivatives.

Every callable works on vec'd points of shape ``(..., n*p)``; ``TestFunction``
itself accepts matrices ``(..., n, p)``. Gradients follow vec order, so
``grad[i + n*j]`` is the partial derivative in entry ``(i, j)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .errors import NonFiniteValue, ShapeMismatch
from .linalg import vec

CLASS_TAGS = frozenset(
    {"increasing", "convex", "supermodular", "directionally_convex", "delta_monotone"}
)


@dataclass(frozen=True, eq=False)
class TestFunction:
    __test__ = False  # not a pytest class

    n: int
    p: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tags: frozenset = field(default_factory=frozenset)
    name: str = "f"

    def __post_init__(self):
        unknown = set(self.tags) - CLASS_TAGS
        if unknown:
            raise ValueError(f"unknown class tags {sorted(unknown)}")

    @property
    def dim(self) -> int:
        return self.n * self.p

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-2:] != (self.n, self.p):
            raise ShapeMismatch(f"{self.name} expects {self.n}x{self.p} matrices")
        return self.value(vec(X))

    def grad_vec(self, x: np.ndarray) -> np.ndarray:
        if self.gradient is not None:
            return np.broadcast_to(self.gradient(x), x.shape)
        return fd_gradient_batch(self.value, x)

    def hess_vec(self, x: np.ndarray) -> np.ndarray:
        if self.hessian is not None:
            return np.broadcast_to(self.hessian(x), x.shape + (x.shape[-1],))
        if self.gradient is not None:
            return _fd_jacobian_batch(self.gradient, x)
        return fd_hessian_batch(self.value, x)


# ---------------------------------------------------------------------------
# finite differences


def _steps(x: np.ndarray) -> np.ndarray:
    return 1e-5 * (1.0 + np.abs(x))


def fd_gradient_batch(value, x: np.ndarray, h=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = _steps(x) if h is None else np.broadcast_to(h, x.shape)
    out = np.empty(x.shape)
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape)
        e[..., k] = h[..., k]
        out[..., k] = (value(x + e) - value(x - e)) / (2.0 * h[..., k])
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("function is not finite near the evaluation point")
    return out


def _fd_jacobian_batch(grad, x: np.ndarray) -> np.ndarray:
    h = _steps(x)
    d = x.shape[-1]
    out = np.empty(x.shape + (d,))
    for k in range(d):
        e = np.zeros(x.shape)
        e[..., k] = h[..., k]
        out[..., k, :] = (grad(x + e) - grad(x - e)) / (2.0 * h[..., k, None])
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def fd_hessian_batch(value, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = 1e-4 * (1.0 + np.abs(x))
    d = x.shape[-1]
    f0 = value(x)
    out = np.empty(x.shape + (d,))
    for a in range(d):
        ea = np.zeros(x.shape)
        ea[..., a] = h[..., a]
        out[..., a, a] = (value(x + ea) - 2.0 * f0 + value(x - ea)) / h[..., a] ** 2
        for b in range(a + 1, d):
            eb = np.zeros(x.shape)
            eb[..., b] = h[..., b]
            mixed = (
                value(x + ea + eb) - value(x + ea - eb) - value(x - ea + eb) + value(x - ea - eb)
            ) / (4.0 * h[..., a] * h[..., b])
            out[..., a, b] = out[..., b, a] = mixed
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("function is not finite near the evaluation point")
    return out


def finite_diff_gradient(f: TestFunction, X, h: Optional[float] = None) -> np.ndarray:
    """Central-difference gradient of ``f`` at one ``n x p`` point, vec order."""
    x = vec(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(np.atleast_1d(f.value(x)))):
        raise NonFiniteValue(f"{f.name} is not finite at the evaluation point")
    return fd_gradient_batch(f.value, x, h)


def finite_diff_hessian(f: TestFunction, X) -> np.ndarray:
    return fd_hessian_batch(f.value, vec(np.asarray(X, dtype=float)))


def derivative_check(f: TestFunction, points: np.ndarray) -> tuple[float, float]:
    """Worst relative gradient and Hessian discrepancies against finite differences.

    ``points`` are vec'd, shape ``(k, n*p)``. Returns ``(grad_err, hess_err)``;
    entries are ``nan`` when the analytic derivative is absent.
    """
    points = np.atleast_2d(points)
    g_err = h_err = float("nan")
    if f.gradient is not None:
        g = f.grad_vec(points)
        g_fd = fd_gradient_batch(f.value, points)
        scale = np.maximum(1.0, np.abs(g))
        g_err = float(np.max(np.abs(g - g_fd) / scale))
    if f.hessian is not None:
        H = f.hess_vec(points)
        H_fd = fd_hessian_batch(f.value, points)
        scale = np.maximum(1.0, np.abs(H))
        h_err = float(np.max(np.abs(H - H_fd) / scale))
    return g_err, h_err


# ---------------------------------------------------------------------------
# builtin constructors


def linear(n: int, p: int, a, c: float = 0.0, name: str = "linear") -> TestFunction:
    a = np.asarray(a, dtype=float).reshape(-1)
    d = n * p
    tags = {"convex", "supermodular", "directionally_convex"}
    if np.all(a >= 0):
        tags |= {"increasing", "delta_monotone"}
    return TestFunction(
        n, p,
        value=lambda x: x @ a + c,
        gradient=lambda x: np.broadcast_to(a, x.shape),
        hessian=lambda x: np.zeros(x.shape + (d,)),
        tags=frozenset(tags),
        name=name,
    )


def quadratic(n: int, p: int, Q, b=None, c: float = 0.0, name: str = "quadratic") -> TestFunction:
    """x'Qx + b'x + c."""
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    d = n * p
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float).reshape(-1)
    tags = set()
    if np.linalg.eigvalsh(Q)[0] >= -1e-12:
        tags.add("convex")
    off = Q - np.diag(np.diag(Q))
    if np.all(off >= 0):
        tags.add("supermodular")
        if np.all(np.diag(Q) >= 0):
            tags.add("directionally_convex")
    return TestFunction(
        n, p,
        value=lambda x: np.einsum("...i,ij,...j->...", x, Q, x) + x @ b + c,
        gradient=lambda x: 2.0 * x @ Q + b,
        hessian=lambda x: np.broadcast_to(2.0 * Q, x.shape[:-1] + (d, d)),
        tags=frozenset(tags),
        name=name,
    )


def sum_squares(n: int, p: int) -> TestFunction:
    return quadratic(n, p, np.eye(n * p), name="sum_squares")


def trace(n: int, p: int) -> TestFunction:
    """tr(X) for square-compatible shapes: sum of x_kk."""
    a = np.zeros(n * p)
    for k in range(min(n, p)):
        a[k + n * k] = 1.0
    return linear(n, p, a, name="trace")


def tanh_ridge(n: int, p: int, a, c: float = 0.0, scale: float = 1.0, name: str = "tanh_ridge") -> TestFunction:
    """scale * tanh(a'x + c): smooth and bounded."""
    a = np.asarray(a, dtype=float).reshape(-1)
    tags = {"increasing"} if np.all(a >= 0) else set()

    def grad(x):
        t = np.tanh(x @ a + c)
        return scale * (1.0 - t * t)[..., None] * a

    def hess(x):
        t = np.tanh(x @ a + c)
        return scale * (-2.0 * t * (1.0 - t * t))[..., None, None] * np.outer(a, a)

    return TestFunction(
        n, p, value=lambda x: scale * np.tanh(x @ a + c), gradient=grad, hessian=hess,
        tags=frozenset(tags), name=name,
    )


def hinge_squared(n: int, p: int, a, c: float = 0.0, name: str = "hinge_sq") -> TestFunction:
    """max(a'x - c, 0)^2: increasing and convex when a >= 0."""
    a = np.asarray(a, dtype=float).reshape(-1)
    tags = {"convex"} | ({"increasing"} if np.all(a >= 0) else set())

    def grad(x):
        return 2.0 * np.maximum(x @ a - c, 0.0)[..., None] * a

    def hess(x):
        active = (x @ a - c > 0).astype(float)
        return 2.0 * active[..., None, None] * np.outer(a, a)

    return TestFunction(
        n, p, value=lambda x: np.maximum(x @ a - c, 0.0) ** 2, gradient=grad, hessian=hess,
        tags=frozenset(tags), name=name,
    )


def pair_product(n: int, p: int, k: int, l: int, s: float = 0.0, t: float = 0.0, name: Optional[str] = None) -> TestFunction:
    """(x_k + s)(x_l + t) in vec coordinates; k == l gives a shifted square."""
    d = n * p
    H = np.zeros((d, d))
    H[k, l] += 1.0
    H[l, k] += 1.0

    def grad(x):
        g = np.zeros(x.shape)
        g[..., k] += x[..., l] + t
        g[..., l] += x[..., k] + s
        return g

    tags = {"supermodular", "directionally_convex"}
    if k == l and s == t:
        tags.add("convex")
    return TestFunction(
        n, p,
        value=lambda x: (x[..., k] + s) * (x[..., l] + t),
        gradient=grad,
        hessian=lambda x: np.broadcast_to(H, x.shape[:-1] + (d, d)),
        tags=frozenset(tags),
        name=name or f"pair[{k},{l}]",
    )


def tanh_pair_product(n: int, p: int, k: int, l: int, s: float = 0.0, t: float = 0.0) -> TestFunction:
    """tanh(x_k - s) tanh(x_l - t): product of increasing functions of distinct coordinates."""
    if k == l:
        raise ValueError("coordinates must differ")
    d = n * p

    def grad(x):
        a, b = np.tanh(x[..., k] - s), np.tanh(x[..., l] - t)
        g = np.zeros(x.shape)
        g[..., k] = (1 - a * a) * b
        g[..., l] = a * (1 - b * b)
        return g

    def hess(x):
        a, b = np.tanh(x[..., k] - s), np.tanh(x[..., l] - t)
        H = np.zeros(x.shape + (d,))
        H[..., k, k] = -2 * a * (1 - a * a) * b
        H[..., l, l] = -2 * b * (1 - b * b) * a
        H[..., k, l] = H[..., l, k] = (1 - a * a) * (1 - b * b)
        return H

    return TestFunction(
        n, p, value=lambda x: np.tanh(x[..., k] - s) * np.tanh(x[..., l] - t),
        gradient=grad, hessian=hess, tags=frozenset({"supermodular"}), name=f"tanhpair[{k},{l}]",
    )


def orthant_indicator(n: int, p: int, coords: Sequence[int], thresholds: Sequence[float]) -> TestFunction:
    """1{x_k > t_k for all k in coords}; no derivatives."""
    coords = list(coords)
    th = np.asarray(thresholds, dtype=float)
    return TestFunction(
        n, p,
        value=lambda x: np.all(x[..., coords] > th, axis=-1).astype(float),
        tags=frozenset({"increasing", "delta_monotone", "supermodular"}),
        name=f"orthant{coords}",
    )


def smooth_orthant(n: int, p: int, coords: Sequence[int], thresholds: Sequence[float], width: float = 0.5) -> TestFunction:
    """prod_k Phi((x_k - t_k)/width): a smooth Delta-monotone box function."""
    coords = list(coords)
    th = np.asarray(thresholds, dtype=float)
    d = n * p

    def value(x):
        return np.prod(special.ndtr((x[..., coords] - th) / width), axis=-1)

    def grad(x):
        z = (x[..., coords] - th) / width
        F = special.ndtr(z)
        dens = np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi) / width
        g = np.zeros(x.shape)
        for m, k in enumerate(coords):
            others = np.prod(np.delete(F, m, axis=-1), axis=-1)
            g[..., k] = dens[..., m] * others
        return g

    return TestFunction(
        n, p, value=value, gradient=grad,
        tags=frozenset({"increasing", "delta_monotone", "supermodular"}), name=f"box{coords}",
    )


@dataclass(frozen=True)
class Polynomial:
    """Sum of monomials ``coef * prod_k x_k^e_k`` over vec coordinates."""

    coefs: np.ndarray
    exponents: np.ndarray  # (terms, d) nonnegative integers

    def value(self, x):
        return np.sum(self.coefs * np.prod(x[..., None, :] ** self.exponents, axis=-1), axis=-1)

    def _derive(self, k: int) -> "Polynomial":
        e = self.exponents.copy()
        c = self.coefs * e[:, k]
        e[:, k] = np.maximum(e[:, k] - 1, 0)
        return Polynomial(c, e)

    def gradient(self, x):
        return np.stack([self._derive(k).value(x) for k in range(self.exponents.shape[1])], axis=-1)

    def hessian(self, x):
        d = self.exponents.shape[1]
        firsts = [self._derive(k) for k in range(d)]
        rows = [np.stack([firsts[a]._derive(b).value(x) for b in range(d)], axis=-1) for a in range(d)]
        return np.stack(rows, axis=-2)


def polynomial(n: int, p: int, terms, name: str = "polynomial") -> TestFunction:
    """Build from ``[(coef, [e_1, ..., e_np]), ...]``."""
    coefs = np.array([float(c) for c, _ in terms])
    exps = np.array([list(e) for _, e in terms], dtype=int)
    if exps.ndim != 2 or exps.shape[1] != n * p or np.any(exps < 0):
        raise ShapeMismatch(f"polynomial exponents must be nonnegative rows of length {n * p}")
    poly = Polynomial(coefs, exps)
    return TestFunction(n, p, poly.value, poly.gradient, poly.hessian, name=name)


def builtin(name: str, n: int, p: int) -> TestFunction:
    """Named functions with fixed coefficients, for experiment descriptors."""
    d = n * p
    ramp = np.linspace(1.0, 2.0, d)
    if name == "linear":
        return linear(n, p, ramp)
    if name == "sum_squares":
        return sum_squares(n, p)
    if name == "quadratic":
        Q = np.eye(d) + 0.25 * np.ones((d, d))
        return quadratic(n, p, Q, b=0.5 * ramp)
    if name == "tanh":
        return tanh_ridge(n, p, 0.5 * ramp, c=0.1, scale=2.0, name="tanh")
    if name == "cubic":
        terms = [(1.0, _unit(d, 0, 3)), (0.5, _unit(d, 0, 1) + _unit(d, d - 1, 2)), (-2.0, _unit(d, d - 1, 1))]
        return polynomial(n, p, terms, name="cubic")
    if name == "trace":
        return trace(n, p)
    raise KeyError(f"unknown builtin function {name!r}")


BUILTIN_NAMES = ("linear", "sum_squares", "quadratic", "tanh", "cubic", "trace")


def _unit(d: int, k: int, power: int) -> np.ndarray:
    e = np.zeros(d, dtype=int)
    e[k] = power
    return e


def grid_points(d: int, levels: int = 5, lo: float = -2.0, hi: float = 2.0) -> np.ndarray:
    axis = np.linspace(lo, hi, levels)
    return np.array(list(itertools.product(axis, repeat=d)))
