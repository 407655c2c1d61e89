"""Matrix variate skew-normal law SN_{n x p}(M, V (x) Sigma, B).

``vec(Y)`` of a matrix law is multivariate skew-normal with location
``vec(M)``, scale ``V (x) Sigma`` and shape ``vec(B)``; ``MvSnParams`` is that
vec'd record and is also used for interpolated laws whose scale is no longer
a Kronecker product. The slant vector ``delta`` is the canonical skew
representation consumed by the orders and identity modules.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy import integrate, special

from . import linalg as la
from .errors import (
    ArgumentTooLarge,
    DegenerateSkew,
    IndexOutOfRange,
    NonFiniteValue,
    NotPositiveDefinite,
    RankDeficient,
    ShapeMismatch,
)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
LOG_2PI = math.log(2.0 * math.pi)
TAU_SERIES_LIMIT = 3.0
TAU_MAX_ARG = 12.0
ADMISSIBLE_MARGIN = 1e-12


# ---------------------------------------------------------------------------
# tau(u) = sqrt(2/pi) * int_0^u exp(z^2/2) dz


def _tau_series(u: np.ndarray) -> np.ndarray:
    u2 = u * u
    term = u.copy()
    total = u.copy()
    for k in range(1, 200):
        term = term * u2 / (2.0 * k)
        inc = term / (2 * k + 1)
        total = total + inc
        if np.all(np.abs(inc) <= 1e-17 * np.abs(total)):
            break
    return SQRT_2_OVER_PI * total


def _scaled_integral(a: float) -> float:
    """exp(-a^2/2) * int_0^a exp(z^2/2) dz for a >= 0, overflow free."""
    if a == 0.0:
        return 0.0
    val, _ = integrate.quad(
        lambda z: math.exp(0.5 * (z - a) * (z + a)), 0.0, a, epsabs=0.0, epsrel=1e-13, limit=200
    )
    return val


def tau(u):
    """tau(u) = sqrt(2/pi) * int_0^u exp(z^2/2) dz for |u| <= 12.

    Maclaurin series up to |u| = 3, adaptive quadrature beyond.
    """
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("tau argument is not finite")
    if np.any(np.abs(arr) > TAU_MAX_ARG):
        raise ArgumentTooLarge(f"|u| > {TAU_MAX_ARG}; use the log-polar characteristic function")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = np.abs(flat) <= TAU_SERIES_LIMIT
    out[small] = _tau_series(flat[small])
    for k in np.nonzero(~small)[0]:
        x = float(flat[k])
        a = abs(x)
        out[k] = math.copysign(SQRT_2_OVER_PI * math.exp(0.5 * a * a) * _scaled_integral(a), x)
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def _log_abs_tau(a: float) -> float:
    """log tau(a) for a > 0 without forming tau."""
    if a <= TAU_SERIES_LIMIT:
        return math.log(float(_tau_series(np.array([a]))[0]))
    return math.log(SQRT_2_OVER_PI) + 0.5 * a * a + math.log(_scaled_integral(a))


def norm_cdf(x):
    return special.ndtr(x)


def log_norm_cdf(x):
    return special.log_ndtr(x)


# ---------------------------------------------------------------------------
# parameter records


def delta_from_alpha(omega: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """delta = (1 + a' Obar a)^(-1/2) w Obar a."""
    dec = la.corr_decompose(omega)
    ra = dec.correlation @ alpha
    return dec.scale_diag * ra / math.sqrt(1.0 + float(alpha @ ra))


def alpha_from_delta(omega, delta) -> np.ndarray:
    """alpha = (1 - d' Omega^-1 d)^(-1/2) w Omega^-1 d."""
    omega = np.asarray(omega, dtype=float)
    delta = np.asarray(delta, dtype=float)
    oid = np.linalg.solve(omega, delta)
    q = float(delta @ oid)
    if q >= 1.0 - ADMISSIBLE_MARGIN:
        raise DegenerateSkew(f"delta' Omega^-1 delta = {q:.15g} is not below 1")
    return np.sqrt(np.diag(omega)) * oid / math.sqrt(1.0 - q)


@dataclass(frozen=True, eq=False)
class MvSnParams:
    """Multivariate skew-normal SN_N(mu, Omega, alpha, delta)."""

    mu: np.ndarray
    omega: np.ndarray
    delta: np.ndarray
    alpha: Optional[np.ndarray] = None
    check_admissible: bool = field(default=True, repr=False)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        omega = la.as_spd(self.omega, "Omega")
        delta = np.asarray(self.delta, dtype=float).reshape(-1)
        N = mu.size
        if omega.shape != (N, N) or delta.size != N:
            raise ShapeMismatch("mu, Omega and delta dimensions disagree")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(delta))):
            raise NonFiniteValue("non-finite location or slant")
        alpha = self.alpha
        if alpha is None and self.check_admissible:
            alpha = alpha_from_delta(omega, delta)
        if alpha is not None:
            alpha = np.asarray(alpha, dtype=float).reshape(-1)
        for name, val in (("mu", mu), ("omega", omega), ("delta", delta), ("alpha", alpha)):
            if val is not None:
                val.setflags(write=False)
            object.__setattr__(self, name, val)

    @classmethod
    def from_alpha(cls, mu, omega, alpha) -> "MvSnParams":
        omega = la.as_spd(omega, "Omega")
        alpha = np.asarray(alpha, dtype=float).reshape(-1)
        return cls(mu, omega, delta_from_alpha(omega, alpha), alpha)

    @property
    def dim(self) -> int:
        return self.mu.size

    @cached_property
    def scale(self) -> np.ndarray:
        return np.sqrt(np.diag(self.omega))

    def skew_quadratic(self) -> float:
        return float(self.delta @ np.linalg.solve(self.omega, self.delta))

    def is_admissible(self) -> bool:
        return self.skew_quadratic() < 1.0 - ADMISSIBLE_MARGIN


@dataclass(frozen=True)
class UnivariateSnParams:
    mu: float
    sigma_sq: float
    delta: float

    def __post_init__(self):
        if not self.sigma_sq > 0:
            raise NotPositiveDefinite("sigma_sq must be positive")
        if self.delta ** 2 >= self.sigma_sq:
            raise DegenerateSkew("delta^2 must be below sigma_sq")


@dataclass(frozen=True, eq=False)
class MsnParams:
    """SN_{n x p}(M, V (x) Sigma, B) with cached derived quantities."""

    M: np.ndarray
    V: np.ndarray
    Sigma: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        M = la.as_matrix(self.M, "M")
        B = la.as_matrix(self.B, "B")
        V = la.as_spd(self.V, "V")
        Sigma = la.as_spd(self.Sigma, "Sigma")
        n, p = M.shape
        if B.shape != (n, p) or V.shape != (p, p) or Sigma.shape != (n, n):
            raise ShapeMismatch(
                f"expected M, B {n}x{p}, V {p}x{p}, Sigma {n}x{n}; got "
                f"B {B.shape}, V {V.shape}, Sigma {Sigma.shape}"
            )
        for name, val in (("M", M), ("V", V), ("Sigma", Sigma), ("B", B)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        if self.skew_quadratic >= 1.0 - ADMISSIBLE_MARGIN:
            raise DegenerateSkew("skewness matrix too large: delta' Omega^-1 delta >= 1")

    @classmethod
    def build(cls, n, p, M, V, Sigma, B) -> "MsnParams":
        params = cls(M, V, Sigma, B)
        if params.shape != (n, p):
            raise ShapeMismatch(f"declared {n}x{p} but M is {params.shape}")
        return params

    @classmethod
    def from_delta(cls, M, V, Sigma, delta) -> "MsnParams":
        """Construct from a slant vector; B = unvec(alpha)."""
        M = la.as_matrix(M, "M")
        omega = la.kron(la.as_spd(V, "V"), la.as_spd(Sigma, "Sigma"))
        alpha = alpha_from_delta(omega, np.asarray(delta, dtype=float).reshape(-1))
        return cls(M, V, Sigma, la.unvec(alpha, *M.shape))

    @property
    def shape(self) -> tuple[int, int]:
        return self.M.shape

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def p(self) -> int:
        return self.M.shape[1]

    @cached_property
    def omega(self) -> np.ndarray:
        return la.kron(self.V, self.Sigma)

    @cached_property
    def v_scale(self) -> np.ndarray:
        return np.sqrt(np.diag(self.V))

    @cached_property
    def sigma_scale(self) -> np.ndarray:
        return np.sqrt(np.diag(self.Sigma))

    @cached_property
    def scale(self) -> np.ndarray:
        """diag of omega = v (x) sigma."""
        return np.kron(self.v_scale, self.sigma_scale)

    @cached_property
    def corr(self) -> np.ndarray:
        return la.kron(
            self.V / np.outer(self.v_scale, self.v_scale),
            self.Sigma / np.outer(self.sigma_scale, self.sigma_scale),
        )

    @cached_property
    def _skew_norm(self) -> float:
        Vbar = self.V / np.outer(self.v_scale, self.v_scale)
        Sbar = self.Sigma / np.outer(self.sigma_scale, self.sigma_scale)
        return math.sqrt(1.0 + float(np.trace(self.B.T @ Sbar @ self.B @ Vbar)))

    @cached_property
    def delta(self) -> np.ndarray:
        d = delta_of(self)
        d.setflags(write=False)
        return d

    @cached_property
    def skew_quadratic(self) -> float:
        return float(self.delta @ np.linalg.solve(self.omega, self.delta))

    @property
    def mu(self) -> np.ndarray:
        return la.vec(self.M)

    @property
    def alpha(self) -> np.ndarray:
        return la.vec(self.B)

    def to_multivariate(self) -> MvSnParams:
        return MvSnParams(self.mu, self.omega, self.delta, self.alpha)

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "M": self.M.tolist(),
            "V": self.V.tolist(),
            "Sigma": self.Sigma.tolist(),
            "B": self.B.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "MsnParams":
        keys = {"n", "p", "M", "V", "Sigma", "B"}
        if not isinstance(doc, dict):
            raise ShapeMismatch("params document must be a JSON object")
        missing = keys - doc.keys()
        extra = doc.keys() - keys
        if missing or extra:
            raise ShapeMismatch(f"params document keys: missing {sorted(missing)}, unknown {sorted(extra)}")
        return cls.build(int(doc["n"]), int(doc["p"]), doc["M"], doc["V"], doc["Sigma"], doc["B"])

    @classmethod
    def from_json(cls, text: str) -> "MsnParams":
        return cls.from_dict(json.loads(text))

    def equals(self, other: "MsnParams") -> bool:
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("M", "V", "Sigma", "B")
        )


def build_params(n, p, M, V, Sigma, B) -> MsnParams:
    return MsnParams.build(n, p, M, V, Sigma, B)


def delta_of(params: MsnParams) -> np.ndarray:
    """vec(Sigma s^-1 B v^-1 V) / sqrt(1 + tr(B' Sbar B Vbar))."""
    core = params.Sigma @ (params.B / params.sigma_scale[:, None] / params.v_scale[None, :]) @ params.V
    return la.vec(core) / params._skew_norm


# ---------------------------------------------------------------------------
# density


def _check_point(params: MsnParams, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.shape[-2:] != params.shape:
        raise ShapeMismatch(f"point of shape {Y.shape[-2:]} for a {params.shape} law")
    return Y


def log_density(params: MsnParams, Y):
    """log f(Y) in matrix form; accepts one ``n x p`` point or a stack."""
    Y = _check_point(params, Y)
    D = Y - params.M
    n, p = params.shape
    Si_D = np.linalg.solve(params.Sigma, D)
    Vi = np.linalg.inv(params.V)
    quad = np.einsum("...ij,...ik,kj->...", D, Si_D, Vi)
    _, ld_v = np.linalg.slogdet(params.V)
    _, ld_s = np.linalg.slogdet(params.Sigma)
    log_phi = -0.5 * (n * p * LOG_2PI + n * ld_v + p * ld_s + quad)
    scaled = D / params.sigma_scale[:, None] / params.v_scale[None, :]
    arg = np.einsum("ij,...ij->...", params.B, scaled)
    return math.log(2.0) + log_phi + log_norm_cdf(arg)


def density(params: MsnParams, Y):
    return np.exp(log_density(params, Y))


def mv_log_density(mv: MvSnParams, z):
    """log of 2 phi_N(z; mu, Omega) Phi(alpha' w^-1 (z - mu))."""
    if mv.alpha is None:
        raise DegenerateSkew("inadmissible slant has no shape vector")
    z = np.asarray(z, dtype=float)
    d = z - mv.mu
    chol = np.linalg.cholesky(mv.omega)
    sol = np.linalg.solve(chol, d[..., None])[..., 0] if d.ndim > 1 else np.linalg.solve(chol, d)
    quad = np.sum(sol * sol, axis=-1)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    log_phi = -0.5 * (mv.dim * LOG_2PI + logdet + quad)
    arg = (d / mv.scale) @ mv.alpha
    return math.log(2.0) + log_phi + log_norm_cdf(arg)


# ---------------------------------------------------------------------------
# characteristic function


def _combine_cf(loc_phase, quad, u):
    """exp(i*loc_phase - quad/2) * (1 + i*tau(u)), switching to log-polar for large |u|."""
    loc_phase, quad, u = np.broadcast_arrays(
        np.asarray(loc_phase, float), np.asarray(quad, float), np.asarray(u, float)
    )
    out = np.empty(u.shape, dtype=complex)
    direct = np.abs(u) <= TAU_MAX_ARG
    if np.any(direct):
        t = tau(u[direct])
        out[direct] = np.exp(1j * loc_phase[direct] - 0.5 * quad[direct]) * (1.0 + 1j * t)
    if not np.all(direct):
        far = ~direct
        log_mag, phase = _logpolar(loc_phase[far], quad[far], u[far])
        out[far] = np.exp(log_mag + 1j * phase)
    return out if out.ndim else complex(out)


def _logpolar(loc_phase, quad, u):
    log_mag = np.empty(u.shape)
    phase = np.empty(u.shape)
    for idx in np.ndindex(u.shape):
        x = float(u[idx])
        a = abs(x)
        if a == 0.0:
            lm, ph = 0.0, 0.0
        elif a <= TAU_MAX_ARG:
            t = float(tau(a))
            lm, ph = 0.5 * math.log1p(t * t), math.atan(t)
        else:
            lt = _log_abs_tau(a)
            lm = lt + 0.5 * math.log1p(math.exp(-2.0 * lt))
            ph = 0.5 * math.pi - math.atan(math.exp(-lt))
        log_mag[idx] = -0.5 * float(quad[idx]) + lm
        phase[idx] = float(loc_phase[idx]) + math.copysign(ph, x)
    return log_mag, phase


def _cf_terms(params: MsnParams, T):
    T = _check_point(params, T)
    loc = np.einsum("ij,...ij->...", params.M, T)
    quad = np.einsum("...ij,ik,...kl,lj->...", T, params.Sigma, T, params.V)
    G = params.Sigma @ (params.B / params.sigma_scale[:, None] / params.v_scale[None, :]) @ params.V
    u = np.einsum("ij,...ij->...", G, T) / params._skew_norm
    return loc, quad, u


def cf(params: MsnParams, T):
    """E etr(i T' Y) = etr(i M'T - T'Sigma T V / 2) (1 + i tau(u))."""
    return _combine_cf(*_cf_terms(params, T))


def cf_logpolar(params: MsnParams, T):
    """(log |cf|, arg cf) without overflow for any T."""
    loc, quad, u = (np.asarray(a, float) for a in _cf_terms(params, T))
    lm, ph = _logpolar(*np.broadcast_arrays(loc, quad, u))
    return (lm, ph) if lm.ndim else (float(lm), float(ph))


def mv_cf(mv: MvSnParams, t):
    """exp(i mu't - t'Omega t / 2) (1 + i tau(delta't)) for t of shape (..., N)."""
    t = np.asarray(t, dtype=float)
    loc = t @ mv.mu
    quad = np.einsum("...i,ij,...j->...", t, mv.omega, t)
    return _combine_cf(loc, quad, t @ mv.delta)


# ---------------------------------------------------------------------------
# moments


def mean(params: MsnParams) -> np.ndarray:
    return la.unvec(params.mu + SQRT_2_OVER_PI * params.delta, params.n, params.p)


def mv_second_moment(mv: MvSnParams) -> np.ndarray:
    mu, d = mv.mu, mv.delta
    return mv.omega + np.outer(mu, mu) + SQRT_2_OVER_PI * (np.outer(mu, d) + np.outer(d, mu))


def second_moment(params: MsnParams) -> np.ndarray:
    """E[vec(Y) vec(Y)']."""
    return mv_second_moment(params.to_multivariate())


def covariance(params: MsnParams) -> np.ndarray:
    m = la.vec(mean(params))
    return second_moment(params) - np.outer(m, m)


def mv_mean(mv: MvSnParams) -> np.ndarray:
    return mv.mu + SQRT_2_OVER_PI * mv.delta


def mv_covariance(mv: MvSnParams) -> np.ndarray:
    return mv.omega - (2.0 / math.pi) * np.outer(mv.delta, mv.delta)


# ---------------------------------------------------------------------------
# linear maps and marginals


def to_multivariate(params: MsnParams) -> MvSnParams:
    return params.to_multivariate()


def linear_transform(mv: MvSnParams, A) -> MvSnParams:
    """Law of A' z for z ~ SN_N(mu, Omega, alpha) and A of full column rank."""
    A = la.as_matrix(A, "A")
    N, q = A.shape
    if N != mv.dim:
        raise ShapeMismatch(f"A has {N} rows for a {mv.dim}-dimensional law")
    if q > N or np.linalg.matrix_rank(A) < q:
        raise RankDeficient("transformation matrix must have full column rank")
    omega_x = A.T @ mv.omega @ A
    omega_x = 0.5 * (omega_x + omega_x.T)
    delta_x = A.T @ mv.delta
    alpha_x = None
    if mv.alpha is not None:
        w = mv.scale
        corr = mv.omega / np.outer(w, w)
        Bm = (mv.omega @ A) / w[:, None]
        resid = corr - Bm @ np.linalg.solve(omega_x, Bm.T)
        denom = math.sqrt(1.0 + float(mv.alpha @ resid @ mv.alpha))
        alpha_x = np.sqrt(np.diag(omega_x)) * np.linalg.solve(omega_x, Bm.T @ mv.alpha) / denom
    return MvSnParams(A.T @ mv.mu, omega_x, delta_x, alpha_x)


def _vec_index(params: MsnParams, i: int, j: int) -> int:
    if not (0 <= i < params.n and 0 <= j < params.p):
        raise IndexOutOfRange(f"entry ({i}, {j}) outside a {params.n}x{params.p} matrix")
    return i + params.n * j


def univariate_marginal(params: MsnParams, i: int, j: int) -> UnivariateSnParams:
    """Law of entry (i, j) (0-based): SN_1(m_ij, v_jj sigma_ii, delta_{i+n*j})."""
    k = _vec_index(params, i, j)
    return UnivariateSnParams(
        float(params.M[i, j]), float(params.V[j, j] * params.Sigma[i, i]), float(params.delta[k])
    )


def pairwise_sum_params(params: MsnParams, first: tuple[int, int], second: tuple[int, int]) -> UnivariateSnParams:
    (i, j), (k, l) = first, second
    a, b = _vec_index(params, i, j), _vec_index(params, k, l)
    if a == b:
        raise IndexOutOfRange("index pairs must be distinct")
    cross = params.V[j, l] * params.Sigma[i, k]
    return UnivariateSnParams(
        float(params.M[i, j] + params.M[k, l]),
        float(params.V[j, j] * params.Sigma[i, i] + params.V[l, l] * params.Sigma[k, k] + 2.0 * cross),
        float(params.delta[a] + params.delta[b]),
    )


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True, eq=False)
class SampleBatch:
    draws: np.ndarray
    seed: int
    method: str
    acceptance_rate: Optional[float] = None
    proposals: Optional[int] = None

    @property
    def count(self) -> int:
        return self.draws.shape[0]

    @property
    def vec(self) -> np.ndarray:
        return la.vec(self.draws) if self.draws.ndim == 3 else self.draws


Law = Union[MsnParams, MvSnParams]


def _as_mv(law: Law) -> MvSnParams:
    return law.to_multivariate() if isinstance(law, MsnParams) else law


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def mv_sample_additive(mv: MvSnParams, count: int, rng) -> np.ndarray:
    """mu + delta |Z0| + W, W ~ N(0, Omega - delta delta')."""
    rng = _rng(rng)
    cov = mv.omega - np.outer(mv.delta, mv.delta)
    root = la.sym_sqrt(cov)
    z0 = np.abs(rng.standard_normal(count))
    w = rng.standard_normal((count, mv.dim)) @ root
    return mv.mu + z0[:, None] * mv.delta + w


def mv_sample_rejection(mv: MvSnParams, count: int, rng) -> tuple[np.ndarray, int]:
    """mu + U conditioned on V < alpha' w^-1 U; returns draws and proposals used."""
    rng = _rng(rng)
    if mv.alpha is None:
        raise DegenerateSkew("rejection sampling needs a shape vector")
    chol = np.linalg.cholesky(mv.omega)
    eta = mv.alpha / mv.scale
    out = np.empty((count, mv.dim))
    filled = 0
    proposals = 0
    while filled < count:
        m = max(1024, 2 * (count - filled) + 64)
        U = rng.standard_normal((m, mv.dim)) @ chol.T
        Vn = rng.standard_normal(m)
        accepted = np.nonzero(Vn < U @ eta)[0]
        need = count - filled
        if accepted.size >= need:
            take = accepted[:need]
            proposals += int(take[-1]) + 1
        else:
            take = accepted
            proposals += m
        out[filled:filled + take.size] = U[take]
        filled += take.size
    return mv.mu + out, proposals


def _batch(law: Law, flat: np.ndarray, seed, method, rate=None, proposals=None) -> SampleBatch:
    draws = la.unvec(flat, *law.shape) if isinstance(law, MsnParams) else flat
    draws.setflags(write=False)
    return SampleBatch(draws, seed, method, rate, proposals)


def sample_additive(law: Law, count: int, seed=0) -> SampleBatch:
    flat = mv_sample_additive(_as_mv(law), int(count), _rng(seed))
    return _batch(law, flat, seed, "additive")


def sample_rejection(law: Law, count: int, seed=0) -> SampleBatch:
    flat, proposals = mv_sample_rejection(_as_mv(law), int(count), _rng(seed))
    rate = count / proposals if proposals else None
    return _batch(law, flat, seed, "rejection", rate, proposals)


def sample(law: Law, count: int, seed=0, method: str = "additive") -> SampleBatch:
    if method == "additive":
        return sample_additive(law, count, seed)
    if method == "rejection":
        return sample_rejection(law, count, seed)
    raise ValueError(f"unknown sampling method {method!r}")
