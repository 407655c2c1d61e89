"""Monte Carlo check of the expectation-difference identity.

For X ~ SN(M, Omega, *, delta) and Y ~ SN(M', Omega', *, delta'),

    E f(Y) - E f(X) = int_0^1 E[grad f(Z_l) vec(M'-M) + tr((Omega'-Omega) H_f(Z_l))/2]
                      + sqrt(2/pi) E[grad f(W_l) (delta'-delta)] dl

with Z_l the skew-normal law at the interpolated parameters and W_l normal
with covariance Omega_l - delta_l delta_l'. Both sides are estimated
independently here; the lambda integral uses Gauss-Legendre nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from . import linalg as la
from .distribution import (
    SQRT_2_OVER_PI,
    MsnParams,
    MvSnParams,
    mv_sample_additive,
)
from .errors import MixturePdFailure, NonFiniteValue, ShapeMismatch
from .functions import TestFunction, hinge_squared, linear, quadratic, tanh_ridge

Law = Union[MsnParams, MvSnParams]


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    samples: int
    seed: Optional[int] = None

    @classmethod
    def from_samples(cls, values: np.ndarray, seed=None) -> "McEstimate":
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("Monte Carlo sample contains non-finite values")
        n = values.size
        sd = float(values.std(ddof=1)) if n > 1 else 0.0
        return cls(float(values.mean()), sd / math.sqrt(n), n, seed)

    def z(self, reference: float = 0.0) -> float:
        diff = self.value - reference
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.std_error

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        half = stats.norm.ppf(0.5 + level / 2.0) * self.std_error
        return self.value - half, self.value + half

    def to_dict(self) -> dict:
        lo, hi = self.interval()
        seed = self.seed if isinstance(self.seed, (int, type(None))) else str(self.seed)
        return {"value": self.value, "std_error": self.std_error, "ci95": [lo, hi],
                "samples": self.samples, "seed": seed}


def _as_mv(law: Law) -> MvSnParams:
    return law.to_multivariate() if isinstance(law, MsnParams) else law


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _seeds(seed, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in _seed_sequence(seed).spawn(count)]


# ---------------------------------------------------------------------------
# interpolated laws


@dataclass(frozen=True, eq=False)
class MixtureParams:
    lam: float
    mu: np.ndarray
    omega: np.ndarray
    delta: np.ndarray

    def law(self) -> MvSnParams:
        return MvSnParams(self.mu, self.omega, self.delta, check_admissible=False)

    @property
    def normal_cov(self) -> np.ndarray:
        return self.omega - np.outer(self.delta, self.delta)


def _is_pd(a: np.ndarray) -> bool:
    w = np.linalg.eigvalsh(0.5 * (a + a.T))
    return bool(w[0] > a.shape[0] * 1e-12 * max(w[-1], 1e-300))


def mixture(x: Law, y: Law, lam: float) -> MixtureParams:
    """Parameters at lam * (Y-params) + (1 - lam) * (X-params)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    a, b = _as_mv(x), _as_mv(y)
    if a.dim != b.dim:
        raise ShapeMismatch("X and Y laws have different dimensions")
    if lam == 0.0:
        mu, omega, delta = a.mu.copy(), a.omega.copy(), a.delta.copy()
    elif lam == 1.0:
        mu, omega, delta = b.mu.copy(), b.omega.copy(), b.delta.copy()
    else:
        mu = lam * b.mu + (1.0 - lam) * a.mu
        omega = lam * b.omega + (1.0 - lam) * a.omega
        delta = lam * b.delta + (1.0 - lam) * a.delta
    if not _is_pd(omega):
        raise MixturePdFailure(lam, "Omega_lambda")
    if not _is_pd(omega - np.outer(delta, delta)):
        raise MixturePdFailure(lam, "Omega_lambda - delta_lambda delta_lambda'")
    return MixtureParams(float(lam), mu, omega, delta)


# ---------------------------------------------------------------------------
# estimators


def gauss_legendre_unit(count: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(count)
    return 0.5 * (nodes + 1.0), 0.5 * weights


@dataclass(frozen=True)
class NodeResult:
    lam: float
    weight: float
    skew_normal_term: McEstimate
    normal_term: McEstimate

    @property
    def value(self) -> float:
        return self.skew_normal_term.value + self.normal_term.value

    @property
    def variance(self) -> float:
        return self.skew_normal_term.std_error ** 2 + self.normal_term.std_error ** 2

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "weight": self.weight,
            "value": self.value,
            "std_error": math.sqrt(self.variance),
            "skew_normal_term": self.skew_normal_term.to_dict(),
            "normal_term": self.normal_term.to_dict(),
        }


def check_mixtures(x: Law, y: Law, lambda_nodes: int) -> None:
    """Raise MixturePdFailure at the first Gauss-Legendre node whose law is invalid."""
    for lam in gauss_legendre_unit(lambda_nodes)[0]:
        mixture(x, y, float(lam))


def rhs_nodes(f: TestFunction, x: Law, y: Law, lambda_nodes: int = 16,
              mc_per_node: int = 200_000, seed=0) -> list[NodeResult]:
    a, b = _as_mv(x), _as_mv(y)
    if a.dim != f.dim:
        raise ShapeMismatch(f"{f.name} acts on {f.dim} coordinates, laws have {a.dim}")
    d_mu = b.mu - a.mu
    d_omega = b.omega - a.omega
    d_delta = b.delta - a.delta
    lams, weights = gauss_legendre_unit(lambda_nodes)
    mixes = [mixture(a, b, float(lam)) for lam in lams]
    out = []
    for mix, w, rng in zip(mixes, weights, _seeds(seed, lambda_nodes)):
        z = mv_sample_additive(mix.law(), mc_per_node, rng)
        g1 = f.grad_vec(z) @ d_mu
        if np.any(d_omega != 0):
            g1 = g1 + 0.5 * np.einsum("ij,...ij->...", d_omega, f.hess_vec(z))
        root = la.sym_sqrt(mix.normal_cov)
        wdraw = mix.mu + rng.standard_normal((mc_per_node, a.dim)) @ root
        g2 = SQRT_2_OVER_PI * (f.grad_vec(wdraw) @ d_delta)
        out.append(NodeResult(float(mix.lam), float(w), McEstimate.from_samples(g1), McEstimate.from_samples(g2)))
    return out


def aggregate_nodes(nodes: Sequence[NodeResult], seed=None) -> McEstimate:
    value = sum(nd.weight * nd.value for nd in nodes)
    var = sum(nd.weight ** 2 * nd.variance for nd in nodes)
    samples = sum(nd.skew_normal_term.samples + nd.normal_term.samples for nd in nodes)
    return McEstimate(float(value), math.sqrt(var), samples, seed)


def rhs_estimate(f: TestFunction, x: Law, y: Law, lambda_nodes: int = 16,
                 mc_per_node: int = 200_000, seed=0) -> McEstimate:
    return aggregate_nodes(rhs_nodes(f, x, y, lambda_nodes, mc_per_node, seed), seed)


def lhs_estimate(f: TestFunction, x: Law, y: Law, samples: int = 1_000_000, seed=0) -> McEstimate:
    """Direct estimate of E f(Y) - E f(X) from independent batches."""
    a, b = _as_mv(x), _as_mv(y)
    rx, ry = _seeds(seed, 2)
    fx = f.value(mv_sample_additive(a, samples, rx))
    fy = f.value(mv_sample_additive(b, samples, ry))
    ex, ey = McEstimate.from_samples(fx), McEstimate.from_samples(fy)
    return McEstimate(ey.value - ex.value, math.hypot(ex.std_error, ey.std_error), 2 * samples, seed)


def linear_closed_form(a, x: Law, y: Law) -> float:
    """a' vec(M'-M) + sqrt(2/pi) a' (delta'-delta)."""
    a = np.asarray(a, dtype=float).reshape(-1)
    xm, ym = _as_mv(x), _as_mv(y)
    return float(a @ (ym.mu - xm.mu) + SQRT_2_OVER_PI * a @ (ym.delta - xm.delta))


# ---------------------------------------------------------------------------
# sign conditions


@dataclass(frozen=True)
class ConditionResult:
    satisfied_at_all_probes: bool
    worst_value: float
    worst_point: np.ndarray

    def to_dict(self) -> dict:
        return {
            "satisfied_at_all_probes": self.satisfied_at_all_probes,
            "worst_value": self.worst_value,
            "worst_point": self.worst_point.tolist(),
        }


@dataclass(frozen=True)
class SignReport:
    condition1: ConditionResult  # scale term against the Hessian
    condition2: ConditionResult  # location term against the gradient
    condition3: ConditionResult  # slant term against the gradient

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied_at_all_probes for c in (self.condition1, self.condition2, self.condition3))

    def to_dict(self) -> dict:
        return {
            "condition1": self.condition1.to_dict(),
            "condition2": self.condition2.to_dict(),
            "condition3": self.condition3.to_dict(),
            "note": "probe evidence only; a certificate needs the conditions everywhere",
        }


def sufficient_sign_check(f: TestFunction, x: Law, y: Law, probe_points, tol: float = 1e-12) -> SignReport:
    """Evaluate the three sufficient sign conditions at the probe points.

    ``probe_points`` are ``n x p`` matrices (stacked) in matrix form.
    """
    a, b = _as_mv(x), _as_mv(y)
    probes = np.asarray(probe_points, dtype=float)
    if probes.ndim == 2:
        probes = probes[None]
    pts = la.vec(probes)
    grad = f.grad_vec(pts)
    hess = f.hess_vec(pts)
    vals = (
        np.einsum("ij,kij->k", b.omega - a.omega, hess),
        grad @ (b.mu - a.mu),
        grad @ (b.delta - a.delta),
    )
    results = []
    for v in vals:
        k = int(np.argmin(v))
        results.append(ConditionResult(bool(v[k] >= -tol), float(v[k]), probes[k]))
    return SignReport(*results)


# ---------------------------------------------------------------------------
# experiment reports


@dataclass
class IdentityReport:
    lhs: McEstimate
    rhs: McEstimate
    nodes: list[NodeResult] = field(default_factory=list)
    rhs_half_nodes: Optional[McEstimate] = None
    threshold: float = 3.0

    @property
    def combined_se(self) -> float:
        return math.hypot(self.lhs.std_error, self.rhs.std_error)

    @property
    def z(self) -> float:
        diff = abs(self.lhs.value - self.rhs.value)
        if self.combined_se == 0.0:
            return 0.0 if diff <= 1e-12 else math.inf
        return diff / self.combined_se

    @property
    def passed(self) -> bool:
        return self.z <= self.threshold

    def to_dict(self) -> dict:
        doc = {
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "combined_std_error": self.combined_se,
            "z": self.z,
            "threshold_sigma": self.threshold,
            "passed": self.passed,
            "nodes": [nd.to_dict() for nd in self.nodes],
        }
        if self.rhs_half_nodes is not None:
            doc["rhs_half_nodes"] = self.rhs_half_nodes.to_dict()
        return doc


def verify_identity(f: TestFunction, x: Law, y: Law, lambda_nodes: int = 16,
                    mc_per_node: int = 200_000, seed=0, lhs_samples: Optional[int] = None,
                    convergence: bool = False) -> IdentityReport:
    check_mixtures(x, y, lambda_nodes)
    s_rhs, s_lhs, s_half = _seed_sequence(seed).spawn(3)
    nodes = rhs_nodes(f, x, y, lambda_nodes, mc_per_node, s_rhs)
    rhs = aggregate_nodes(nodes, seed)
    lhs = lhs_estimate(f, x, y, lhs_samples or lambda_nodes * mc_per_node, s_lhs)
    lhs = McEstimate(lhs.value, lhs.std_error, lhs.samples, seed)
    half = None
    if convergence and lambda_nodes >= 2:
        half = rhs_estimate(f, x, y, lambda_nodes // 2, mc_per_node, s_half)
        half = McEstimate(half.value, half.std_error, half.samples, seed)
    return IdentityReport(lhs, rhs, nodes, half)


@dataclass(frozen=True)
class IdentityCase:
    name: str
    f: TestFunction
    x: MsnParams
    y: MsnParams


def preregistered_cases() -> list[IdentityCase]:
    """Five fixed (f, X, Y) triples at n = p = 2."""
    n = p = 2
    V1 = np.array([[1.0, 0.3], [0.3, 0.8]])
    S1 = np.array([[1.2, -0.2], [-0.2, 0.9]])
    V2 = np.array([[1.5, 0.5], [0.5, 1.0]])
    S2 = np.array([[0.8, 0.1], [0.1, 1.1]])
    M0 = np.zeros((n, p))
    M1 = np.array([[0.5, -0.3], [0.2, 0.4]])
    B0 = np.array([[1.0, -0.5], [0.3, 0.8]])
    B1 = np.array([[-0.4, 1.2], [0.9, -0.2]])
    a = np.array([1.0, -0.5, 0.75, 0.25])
    Q = np.array([[1.0, 0.2, 0.0, 0.1], [0.2, 0.8, 0.1, 0.0], [0.0, 0.1, 1.2, 0.3], [0.1, 0.0, 0.3, 0.9]])
    return [
        IdentityCase("linear", linear(n, p, a), MsnParams(M0, V1, S1, B0), MsnParams(M1, V2, S2, B1)),
        IdentityCase("quadratic", quadratic(n, p, Q, b=0.3 * a), MsnParams(M0, V1, S1, B0), MsnParams(M1, V2, S2, B1)),
        IdentityCase("tanh", tanh_ridge(n, p, 0.6 * a, c=0.2, scale=2.0), MsnParams(M1, V1, S1, B1), MsnParams(M0, V2, S2, B0)),
        IdentityCase("quadratic_slant_only", quadratic(n, p, Q), MsnParams(M0, V1, S1, B0), MsnParams(M0, V1, S1, 2.0 * B1)),
        IdentityCase("hinge_scale_only", hinge_squared(n, p, np.abs(a), c=0.5), MsnParams(M1, V1, S1, B0), MsnParams(M1, V2, S1, B0)),
    ]
