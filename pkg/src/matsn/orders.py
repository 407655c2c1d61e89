"""Deciders for six integral stochastic orders between skew-normal matrices.

Each checker returns an ``OrderVerdict`` whose status separates proven
equivalences (``HoldsProven``), one-directional sufficient conditions
(``SufficientHolds``) and proven failures (``FailsProven``, always with a
re-verifiable ``Witness``). ``mc_order_evidence`` is the Monte Carlo guard.

The standardized regime (zero location, unit-diagonal scale on both sides)
is detected from the parameters themselves.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg as la
from .distribution import (
    SQRT_2_OVER_PI,
    MsnParams,
    UnivariateSnParams,
    mv_sample_additive,
    univariate_marginal,
)
from .errors import ShapeMismatch
from .functions import (
    TestFunction,
    hinge_squared,
    linear,
    orthant_indicator,
    pair_product,
    quadratic,
    smooth_orthant,
    tanh_pair_product,
)
from .identity import McEstimate

PARAM_TOL = 1e-9


class OrderKind(str, enum.Enum):
    ST = "st"
    CX = "cx"
    ICX = "icx"
    UO = "uo"
    SM = "sm"
    DCX = "dcx"


class Status(str, enum.Enum):
    HOLDS_PROVEN = "HoldsProven"
    FAILS_PROVEN = "FailsProven"
    SUFFICIENT_HOLDS = "SufficientHolds"
    INCONCLUSIVE = "Inconclusive"

    @property
    def holds(self) -> bool:
        return self in (Status.HOLDS_PROVEN, Status.SUFFICIENT_HOLDS)


class WitnessKind(str, enum.Enum):
    INDEX_PAIR = "IndexPair"
    DIRECTION = "Direction"
    SIMPLEX_POINT = "SimplexPoint"
    PARAM_INEQUALITY = "ParamInequality"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


@dataclass(frozen=True)
class Witness:
    """A concrete violation.

    ``payload["quantity"]`` names a parameter-derived quantity (see
    ``quantity_pair``); the remaining keys locate the violation in it.
    """

    kind: WitnessKind
    payload: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "payload": _jsonable(self.payload)}


@dataclass(frozen=True)
class OrderVerdict:
    kind: OrderKind
    status: Status
    certificate: dict = field(default_factory=dict)
    notes: str = ""
    witness: Optional[Witness] = None

    def __post_init__(self):
        if self.status is Status.FAILS_PROVEN and self.witness is None:
            raise ValueError("a FailsProven verdict needs a witness")

    def to_dict(self) -> dict:
        doc = {
            "order": self.kind.value,
            "status": self.status.value,
            "certificate": _jsonable(self.certificate),
            "notes": self.notes,
        }
        if self.witness is not None:
            doc["witness"] = self.witness.to_dict()
        return doc


# ---------------------------------------------------------------------------
# parameter-derived quantities shared by checkers and witness re-verification


def quantity_pair(name: str, x: MsnParams, y: MsnParams) -> tuple[np.ndarray, np.ndarray]:
    if name == "M":
        return x.M, y.M
    if name == "delta":
        return x.delta, y.delta
    if name == "Omega":
        return x.omega, y.omega
    if name == "Omega_bar":
        return x.corr, y.corr
    if name == "Omega_diag":
        return np.diag(x.omega), np.diag(y.omega)
    if name == "mean":
        return x.mu + SQRT_2_OVER_PI * x.delta, y.mu + SQRT_2_OVER_PI * y.delta
    if name == "cov":
        return (x.omega - (2 / math.pi) * np.outer(x.delta, x.delta),
                y.omega - (2 / math.pi) * np.outer(y.delta, y.delta))
    raise KeyError(name)


def _leq_witness(name: str, x, y, tol: float = PARAM_TOL) -> Optional[Witness]:
    """Witness for a violation of x-quantity <= y-quantity."""
    qx, qy = quantity_pair(name, x, y)
    idx = la.first_violation(qx, qy, tol)
    if idx is None:
        return None
    kind = WitnessKind.INDEX_PAIR if len(idx) == 2 else WitnessKind.PARAM_INEQUALITY
    return Witness(kind, {"quantity": name, "index": list(idx), "relation": "<=",
                          "x_value": float(qx[idx]), "y_value": float(qy[idx])})


def _eq_witness(name: str, x, y, tol: float = PARAM_TOL) -> Optional[Witness]:
    qx, qy = quantity_pair(name, x, y)
    gap = np.abs(qx - qy)
    k = int(np.argmax(gap))
    if gap.flat[k] <= tol:
        return None
    idx = tuple(int(i) for i in np.unravel_index(k, gap.shape))
    return Witness(WitnessKind.PARAM_INEQUALITY, {"quantity": name, "index": list(idx), "relation": "==",
                                                  "x_value": float(qx[idx]), "y_value": float(qy[idx])})


def _offdiag_leq_witness(name: str, x, y, tol: float = PARAM_TOL) -> Optional[Witness]:
    qx, qy = quantity_pair(name, x, y)
    excess = qx - qy
    np.fill_diagonal(excess, -np.inf)
    k = int(np.argmax(excess))
    if excess.flat[k] <= tol:
        return None
    i, j = (int(v) for v in np.unravel_index(k, excess.shape))
    return Witness(WitnessKind.INDEX_PAIR, {"quantity": name, "index": [i, j], "relation": "<=",
                                            "x_value": float(qx[i, j]), "y_value": float(qy[i, j])})


def _psd_witness(name: str, x, y, tol: float = PARAM_TOL) -> Optional[Witness]:
    """Direction z with z'(Q_y - Q_x)z < 0."""
    qx, qy = quantity_pair(name, x, y)
    ok, z = la.is_psd(qy - qx, tol)
    if ok:
        return None
    return Witness(WitnessKind.DIRECTION, {"quantity": name, "vector": z, "value": float(z @ (qy - qx) @ z)})


def _copositive_witness(name: str, x, y, tol: float = PARAM_TOL) -> tuple[Optional[Witness], la.CopositivityVerdict]:
    qx, qy = quantity_pair(name, x, y)
    verdict = la.is_copositive(qy - qx, tol)
    if verdict.copositive:
        return None, verdict
    return Witness(WitnessKind.SIMPLEX_POINT, {"quantity": name, "point": verdict.witness,
                                               "value": verdict.min_value}), verdict


def verify_witness(witness: Witness, x: MsnParams, y: MsnParams, tol: float = PARAM_TOL) -> bool:
    """Recompute the violation a witness claims, from the parameters alone."""
    pl = witness.payload
    qx, qy = quantity_pair(pl["quantity"], x, y)
    if witness.kind in (WitnessKind.INDEX_PAIR, WitnessKind.PARAM_INEQUALITY):
        idx = tuple(pl["index"])
        a, b = float(qx[idx]), float(qy[idx])
        return a > b + tol if pl["relation"] == "<=" else abs(a - b) > tol
    if witness.kind is WitnessKind.DIRECTION:
        z = np.asarray(pl["vector"], dtype=float)
        return float(z @ (qy - qx) @ z) < -tol
    if witness.kind is WitnessKind.SIMPLEX_POINT:
        w = np.asarray(pl["point"], dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            return False
        return float(w @ (qy - qx) @ w) < -tol
    return False


# ---------------------------------------------------------------------------
# regime detection and small helpers


def is_standardized(params: MsnParams, tol: float = PARAM_TOL) -> bool:
    return bool(np.max(np.abs(params.M)) <= tol and np.max(np.abs(np.diag(params.omega) - 1.0)) <= tol)


def _check_shapes(x: MsnParams, y: MsnParams) -> None:
    if x.shape != y.shape:
        raise ShapeMismatch(f"laws have shapes {x.shape} and {y.shape}")


def _regime(x, y) -> str:
    return "standardized" if is_standardized(x) and is_standardized(y) else "general"


def _first(*witnesses) -> Optional[Witness]:
    return next((w for w in witnesses if w is not None), None)


def _cond(witness: Optional[Witness]) -> dict:
    return {"holds": witness is None, "witness": None if witness is None else witness.to_dict()}


def _offdiag_entries_leq(a: np.ndarray, b: np.ndarray, tol=PARAM_TOL) -> bool:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return bool(np.all(a[mask] <= b[mask] + tol))


# ---------------------------------------------------------------------------
# checkers


def check_st(x: MsnParams, y: MsnParams) -> OrderVerdict:
    _check_shapes(x, y)
    w_m = _leq_witness("M", x, y)
    w_d = _leq_witness("delta", x, y)
    w_o = _eq_witness("Omega", x, y)
    scale = la.kron_equal_up_to_scale(x.V, x.Sigma, y.V, y.Sigma, tol=PARAM_TOL)
    cert = {
        "M_leq": _cond(w_m),
        "delta_leq": _cond(w_d),
        "Omega_equal": _cond(w_o),
        "kronecker_factor_scale": scale,
    }
    witness = _first(w_m, w_d, w_o)
    status = Status.FAILS_PROVEN if witness else Status.HOLDS_PROVEN
    return OrderVerdict(OrderKind.ST, status, cert, "st holds iff M <= M', delta <= delta', Omega = Omega'", witness)


def check_cx(x: MsnParams, y: MsnParams) -> OrderVerdict:
    _check_shapes(x, y)
    regime = _regime(x, y)
    if regime == "standardized":
        w_d = _eq_witness("delta", x, y)
        w_p = _psd_witness("Omega_bar", x, y)
        witness = _first(w_d, w_p)
        cert = {"regime": regime, "delta_equal": _cond(w_d), "Omega_bar_diff_psd": _cond(w_p)}
        status = Status.FAILS_PROVEN if witness else Status.HOLDS_PROVEN
        return OrderVerdict(OrderKind.CX, status, cert, "standardized regime: iff condition", witness)

    w_mean = _eq_witness("mean", x, y)
    cert = {"regime": regime, "means_equal": _cond(w_mean)}
    if w_mean:
        return OrderVerdict(OrderKind.CX, Status.FAILS_PROVEN, cert, "convex order forces equal means", w_mean)
    w_m, w_d, w_p = _eq_witness("M", x, y), _eq_witness("delta", x, y), _psd_witness("Omega", x, y)
    cert.update({"M_equal": _cond(w_m), "delta_equal": _cond(w_d), "Omega_diff_psd": _cond(w_p)})
    if not (w_m or w_d or w_p):
        return OrderVerdict(OrderKind.CX, Status.SUFFICIENT_HOLDS, cert, "sufficient condition met")
    w_cov = _psd_witness("cov", x, y)
    cert["cov_diff_psd"] = _cond(w_cov)
    if w_cov:
        return OrderVerdict(OrderKind.CX, Status.FAILS_PROVEN, cert,
                            "Var(b'X) > Var(b'Y) along the witness direction with equal means", w_cov)
    return OrderVerdict(OrderKind.CX, Status.INCONCLUSIVE, cert, "necessary conditions pass, sufficient ones do not")


ICX_CAVEAT = (
    "copositivity of the correlation difference is a proven necessary condition; "
    "sufficiency is asserted without a checked proof and is guarded by Monte Carlo evidence"
)


def check_icx(x: MsnParams, y: MsnParams) -> OrderVerdict:
    _check_shapes(x, y)
    regime = _regime(x, y)
    if regime == "standardized":
        w_d = _leq_witness("delta", x, y)
        w_c, cop = _copositive_witness("Omega_bar", x, y)
        cert = {"regime": regime, "delta_leq": _cond(w_d), "Omega_bar_diff_copositive": _cond(w_c),
                "copositive_min_value": cop.min_value}
        witness = _first(w_d, w_c)
        status = Status.FAILS_PROVEN if witness else Status.HOLDS_PROVEN
        return OrderVerdict(OrderKind.ICX, status, cert, ICX_CAVEAT, witness)

    w_mean = _leq_witness("mean", x, y)
    cert = {"regime": regime, "means_leq": _cond(w_mean)}
    if w_mean:
        return OrderVerdict(OrderKind.ICX, Status.FAILS_PROVEN, cert, "icx forces E X <= E Y", w_mean)
    w_m, w_d, w_p = _leq_witness("M", x, y), _leq_witness("delta", x, y), _psd_witness("Omega", x, y)
    cert.update({"M_leq": _cond(w_m), "delta_leq": _cond(w_d), "Omega_diff_psd": _cond(w_p)})
    if not (w_m or w_d or w_p):
        return OrderVerdict(OrderKind.ICX, Status.SUFFICIENT_HOLDS, cert, "sufficient condition met")
    return OrderVerdict(OrderKind.ICX, Status.INCONCLUSIVE, cert, "general regime: only sufficient conditions known")


def check_dcx(x: MsnParams, y: MsnParams) -> OrderVerdict:
    _check_shapes(x, y)
    regime = _regime(x, y)
    if regime == "standardized":
        w_d = _eq_witness("delta", x, y)
        w_e = _leq_witness("Omega_bar", x, y)
        cert = {"regime": regime, "delta_equal": _cond(w_d), "Omega_bar_leq": _cond(w_e)}
        witness = _first(w_d, w_e)
        status = Status.FAILS_PROVEN if witness else Status.HOLDS_PROVEN
        return OrderVerdict(OrderKind.DCX, status, cert, "standardized regime: iff condition", witness)

    w_mean = _eq_witness("mean", x, y)
    cert = {"regime": regime, "means_equal": _cond(w_mean)}
    if w_mean:
        return OrderVerdict(OrderKind.DCX, Status.FAILS_PROVEN, cert,
                            "linear functions of both signs are directionally convex, so means must agree", w_mean)
    w_m, w_d, w_e = _eq_witness("M", x, y), _eq_witness("delta", x, y), _leq_witness("Omega", x, y)
    cert.update({"M_equal": _cond(w_m), "delta_equal": _cond(w_d), "Omega_leq": _cond(w_e)})
    if not (w_m or w_d or w_e):
        return OrderVerdict(OrderKind.DCX, Status.SUFFICIENT_HOLDS, cert,
                            "sufficient: equal location and slant, Omega <= Omega' entrywise")
    return OrderVerdict(OrderKind.DCX, Status.INCONCLUSIVE, cert,
                        "general regime: no characterization available")


def check_uo(x: MsnParams, y: MsnParams) -> OrderVerdict:
    _check_shapes(x, y)
    w_m = _leq_witness("M", x, y)
    w_d = _leq_witness("delta", x, y)
    w_diag = _eq_witness("Omega_diag", x, y)
    cert = {"M_leq": _cond(w_m), "delta_leq": _cond(w_d), "Omega_diag_equal": _cond(w_diag)}
    witness = _first(w_m, w_d, w_diag)
    note = ("necessary conditions come from the entrywise usual stochastic order of marginals; "
            "the sufficient branch compares orthant probabilities via Slepian's inequality")
    if witness:
        return OrderVerdict(OrderKind.UO, Status.FAILS_PROVEN, cert, note, witness)
    w_meq = _eq_witness("M", x, y)
    off_ok = _offdiag_entries_leq(x.omega, y.omega)
    cert.update({"M_equal": _cond(w_meq), "Omega_offdiag_leq": {"holds": off_ok}})
    if w_meq is None and off_ok:
        return OrderVerdict(OrderKind.UO, Status.SUFFICIENT_HOLDS, cert, note)
    extra = "; M < M' with the other sufficient conditions would also suffice by monotonicity" if off_ok else ""
    return OrderVerdict(OrderKind.UO, Status.INCONCLUSIVE, cert, note + extra)


def _marginal_witness(x: MsnParams, y: MsnParams, tol=PARAM_TOL) -> Optional[Witness]:
    for j in range(x.p):
        for i in range(x.n):
            a, b = univariate_marginal(x, i, j), univariate_marginal(y, i, j)
            ta, tb = (a.mu, a.sigma_sq, a.delta), (b.mu, b.sigma_sq, b.delta)
            for name, u, v in zip(("M", "Omega_diag", "delta"), ta, tb):
                if abs(u - v) > tol:
                    k = i + x.n * j
                    index = [i, j] if name == "M" else [k]
                    return Witness(WitnessKind.PARAM_INEQUALITY, {
                        "quantity": name, "index": index, "relation": "==", "x_value": u, "y_value": v,
                        "marginal": [i, j]})
    return None


def check_sm(x: MsnParams, y: MsnParams) -> OrderVerdict:
    _check_shapes(x, y)
    regime = _regime(x, y)
    w_marg = _marginal_witness(x, y)
    cert = {"regime": regime, "marginals_equal": _cond(w_marg)}
    if w_marg:
        return OrderVerdict(OrderKind.SM, Status.FAILS_PROVEN, cert,
                            "supermodular comparison forces identical marginals", w_marg)
    w_off = _offdiag_leq_witness("Omega", x, y)
    cert["Omega_offdiag_leq"] = _cond(w_off)
    if regime == "standardized":
        status = Status.FAILS_PROVEN if w_off else Status.HOLDS_PROVEN
        return OrderVerdict(OrderKind.SM, status, cert, "standardized regime: iff condition", w_off)
    if w_off is None:
        return OrderVerdict(OrderKind.SM, Status.SUFFICIENT_HOLDS, cert,
                            "sufficient: equal marginals and Omega <= Omega' off the diagonal")
    return OrderVerdict(OrderKind.SM, Status.INCONCLUSIVE, cert, "general regime: no characterization available")


CHECKERS = {
    OrderKind.ST: check_st,
    OrderKind.CX: check_cx,
    OrderKind.ICX: check_icx,
    OrderKind.UO: check_uo,
    OrderKind.SM: check_sm,
    OrderKind.DCX: check_dcx,
}


def check_order(kind, x: MsnParams, y: MsnParams) -> OrderVerdict:
    return CHECKERS[OrderKind(kind)](x, y)


def univariate_st(a: UnivariateSnParams, b: UnivariateSnParams, tol: float = PARAM_TOL) -> OrderVerdict:
    checks = (("mu", a.mu, b.mu, "<="), ("sigma_sq", a.sigma_sq, b.sigma_sq, "=="), ("delta", a.delta, b.delta, "<="))
    cert = {}
    witness = None
    for name, u, v, rel in checks:
        ok = u <= v + tol if rel == "<=" else abs(u - v) <= tol
        cert[name] = {"holds": ok, "x_value": u, "y_value": v, "relation": rel}
        if not ok and witness is None:
            witness = Witness(WitnessKind.PARAM_INEQUALITY,
                              {"quantity": name, "index": [], "relation": rel, "x_value": u, "y_value": v})
    status = Status.FAILS_PROVEN if witness else Status.HOLDS_PROVEN
    return OrderVerdict(OrderKind.ST, status, cert, "univariate: iff condition", witness)


# ---------------------------------------------------------------------------
# function classes


CLASS_NAMES = ("increasing", "convex", "supermodular", "directionally_convex", "delta_monotone")


@dataclass(frozen=True)
class MembershipResult:
    passed: bool
    worst_violation: float
    worst_point: Optional[np.ndarray]
    checked: int


def _shifted(x: np.ndarray, steps: dict[int, float]) -> np.ndarray:
    y = x.copy()
    for k, h in steps.items():
        y[:, k] += h
    return y


def class_membership_test(f: TestFunction, cls: str, grid, epsilons: Sequence[float] = (0.1, 1.0),
                          max_subset: int = 4, tol: float = 1e-10) -> MembershipResult:
    """Check the difference-operator inequalities defining ``cls`` on ``grid``.

    ``grid`` holds vec'd probe points, shape ``(k, n*p)``. The Delta-monotone
    check is partial: subsets of at most ``max_subset`` coordinates.
    """
    x = np.atleast_2d(np.asarray(grid, dtype=float))
    d = x.shape[1]
    f0 = f.value(x)
    scale = max(1.0, float(np.max(np.abs(f0))))
    diffs: list[np.ndarray] = []

    if cls == "increasing":
        for k, e in itertools.product(range(d), epsilons):
            diffs.append(f.value(_shifted(x, {k: e})) - f0)
    elif cls == "convex":
        dirs = [np.eye(d)[k] for k in range(d)]
        dirs += [np.eye(d)[k] + s * np.eye(d)[l] for k in range(d) for l in range(k + 1, d) for s in (1.0, -1.0)]
        for u, e in itertools.product(dirs, epsilons):
            diffs.append(f.value(x + e * u) + f.value(x - e * u) - 2.0 * f0)
    elif cls in ("supermodular", "directionally_convex"):
        pairs = itertools.combinations_with_replacement(range(d), 2) if cls == "directionally_convex" \
            else itertools.combinations(range(d), 2)
        for (k, l), e1, e2 in itertools.product(list(pairs), epsilons, epsilons):
            step_kl = {k: e1} if k != l else {k: e1 + e2}
            if k != l:
                step_kl[l] = e2
            diffs.append(f.value(_shifted(x, step_kl)) - f.value(_shifted(x, {k: e1}))
                         - f.value(_shifted(x, {l: e2})) + f0)
    elif cls == "delta_monotone":
        for size in range(1, min(max_subset, d) + 1):
            for subset, e in itertools.product(itertools.combinations(range(d), size), epsilons):
                total = np.zeros(x.shape[0])
                for r in range(size + 1):
                    for sub in itertools.combinations(subset, r):
                        sign = (-1) ** (size - r)
                        total += sign * f.value(_shifted(x, {k: e for k in sub}))
                diffs.append(total)
    else:
        raise ValueError(f"unknown function class {cls!r}")

    stacked = np.stack(diffs)
    k = np.unravel_index(int(np.argmin(stacked)), stacked.shape)
    worst = float(stacked[k])
    passed = worst >= -tol * scale
    return MembershipResult(passed, worst, None if passed else x[k[1]], int(stacked.size))


# ---------------------------------------------------------------------------
# function families


class FamilyKind(str, enum.Enum):
    INCREASING_LINEAR = "IncreasingLinear"
    CONVEX_QUADRATIC = "ConvexQuadratic"
    INCREASING_CONVEX_HINGE = "IncreasingConvexHinge"
    SUPERMODULAR_PAIR_PRODUCTS = "SupermodularPairProducts"
    DCX_PAIR_PRODUCTS = "DcxPairProducts"
    UPPER_ORTHANT_INDICATORS = "UpperOrthantIndicators"
    DELTA_MONOTONE_BOXES = "DeltaMonotoneBoxes"


FAMILY_CLASSES = {
    FamilyKind.INCREASING_LINEAR: ("increasing",),
    FamilyKind.CONVEX_QUADRATIC: ("convex",),
    FamilyKind.INCREASING_CONVEX_HINGE: ("increasing", "convex"),
    FamilyKind.SUPERMODULAR_PAIR_PRODUCTS: ("supermodular",),
    FamilyKind.DCX_PAIR_PRODUCTS: ("directionally_convex",),
    FamilyKind.UPPER_ORTHANT_INDICATORS: ("delta_monotone",),
    FamilyKind.DELTA_MONOTONE_BOXES: ("delta_monotone",),
}

# the family whose functions define each order
ORDER_FAMILY = {
    OrderKind.ST: FamilyKind.INCREASING_LINEAR,
    OrderKind.CX: FamilyKind.CONVEX_QUADRATIC,
    OrderKind.ICX: FamilyKind.INCREASING_CONVEX_HINGE,
    OrderKind.UO: FamilyKind.UPPER_ORTHANT_INDICATORS,
    OrderKind.SM: FamilyKind.SUPERMODULAR_PAIR_PRODUCTS,
    OrderKind.DCX: FamilyKind.DCX_PAIR_PRODUCTS,
}


@dataclass(frozen=True)
class FunctionFamily:
    kind: FamilyKind
    generators: tuple

    @property
    def classes(self) -> tuple[str, ...]:
        return FAMILY_CLASSES[self.kind]


def _pairs(d: int, rng: np.random.Generator, count: int, diagonal: bool) -> list[tuple[int, int]]:
    pool = list(itertools.combinations_with_replacement(range(d), 2) if diagonal
                else itertools.combinations(range(d), 2))
    if not pool:
        raise ValueError("need at least two coordinates for pair products")
    order = rng.permutation(len(pool))
    return [pool[order[i % len(pool)]] for i in range(count)]


def make_family(kind, n: int, p: int, count: int = 8, seed=0) -> FunctionFamily:
    """Deterministic family of ``count`` generators of the given kind."""
    kind = FamilyKind(kind)
    rng = np.random.default_rng(seed)
    d = n * p
    gens: list[TestFunction] = []
    if kind is FamilyKind.INCREASING_LINEAR:
        for m in range(count):
            a = rng.exponential(size=d) if m >= d else np.eye(d)[m]
            gens.append(linear(n, p, a, name=f"linear{m}"))
    elif kind is FamilyKind.CONVEX_QUADRATIC:
        for m in range(count):
            G = rng.normal(size=(d, d)) / math.sqrt(d)
            gens.append(quadratic(n, p, G @ G.T, b=rng.normal(size=d), name=f"quadratic{m}"))
    elif kind is FamilyKind.INCREASING_CONVEX_HINGE:
        for m in range(count):
            gens.append(hinge_squared(n, p, rng.exponential(size=d), c=rng.normal(), name=f"hinge{m}"))
    elif kind is FamilyKind.SUPERMODULAR_PAIR_PRODUCTS:
        for k, l in _pairs(d, rng, count, diagonal=False):
            gens.append(tanh_pair_product(n, p, k, l, *rng.normal(scale=0.5, size=2)))
    elif kind is FamilyKind.DCX_PAIR_PRODUCTS:
        for k, l in _pairs(d, rng, count, diagonal=True):
            s = float(rng.normal(scale=0.5))
            t = s if k == l else float(rng.normal(scale=0.5))
            gens.append(pair_product(n, p, k, l, s, t))
    elif kind is FamilyKind.UPPER_ORTHANT_INDICATORS:
        for m in range(count):
            size = 1 + m % d
            coords = sorted(rng.choice(d, size=size, replace=False).tolist())
            gens.append(orthant_indicator(n, p, coords, rng.normal(scale=0.75, size=size)))
    elif kind is FamilyKind.DELTA_MONOTONE_BOXES:
        for m in range(count):
            size = 1 + m % d
            coords = sorted(rng.choice(d, size=size, replace=False).tolist())
            gens.append(smooth_orthant(n, p, coords, rng.normal(scale=0.75, size=size)))
    return FunctionFamily(kind, tuple(gens))


def family_for_order(kind, n: int, p: int, count: int = 8, seed=0) -> FunctionFamily:
    return make_family(ORDER_FAMILY[OrderKind(kind)], n, p, count, seed)


# ---------------------------------------------------------------------------
# Monte Carlo evidence


@dataclass
class EvidenceReport:
    family: FamilyKind
    names: list[str]
    estimates: list[McEstimate]
    claimed: Optional[Status] = None

    def z_scores(self) -> np.ndarray:
        return np.array([e.z() for e in self.estimates])

    @property
    def below_3sigma(self) -> int:
        return int(np.sum(self.z_scores() < -3.0))

    @property
    def below_5sigma(self) -> int:
        return int(np.sum(self.z_scores() < -5.0))

    @property
    def consistency_failure(self) -> bool:
        """A claimed-holds verdict contradicted at 5 sigma."""
        return self.claimed is not None and self.claimed.holds and self.below_5sigma > 0

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "estimates": [dict(e.to_dict(), function=name, z=e.z()) for name, e in zip(self.names, self.estimates)],
            "below_3sigma": self.below_3sigma,
            "below_5sigma": self.below_5sigma,
            "falsified": self.below_5sigma > 0,
            "consistency_failure": self.consistency_failure,
        }


def mc_order_evidence(x: MsnParams, y: MsnParams, family: FunctionFamily, draws: int = 100_000,
                      seed=0, claimed: Optional[Status] = None) -> EvidenceReport:
    """Estimate E f(Y) - E f(X) for each generator, with its own seed stream."""
    _check_shapes(x, y)
    xm, ym = x.to_multivariate(), y.to_multivariate()
    estimates = []
    for f, ss in zip(family.generators, np.random.SeedSequence(seed).spawn(len(family.generators))):
        rx, ry = (np.random.default_rng(s) for s in ss.spawn(2))
        ex = McEstimate.from_samples(f.value(mv_sample_additive(xm, draws, rx)))
        ey = McEstimate.from_samples(f.value(mv_sample_additive(ym, draws, ry)))
        estimates.append(McEstimate(ey.value - ex.value, math.hypot(ex.std_error, ey.std_error), 2 * draws))
    return EvidenceReport(family.kind, [f.name for f in family.generators], estimates, claimed)


@dataclass(frozen=True)
class OrthantEstimate:
    sampler: McEstimate
    augmented_normal: McEstimate

    @property
    def z(self) -> float:
        se = math.hypot(self.sampler.std_error, self.augmented_normal.std_error)
        diff = self.sampler.value - self.augmented_normal.value
        return 0.0 if se == 0 and diff == 0 else abs(diff) / se if se > 0 else math.inf

    @property
    def agree(self) -> bool:
        return self.z <= 4.0

    @property
    def value(self) -> float:
        return self.sampler.value


def upper_orthant_prob(params: MsnParams, t, draws: int = 100_000, seed=0) -> OrthantEstimate:
    """P(X > t entrywise) by the skew-normal sampler and by 2 P(U > t - M, U0 > 0),
    (U, U0) normal with covariance [[Omega, delta], [delta', 1]]."""
    t = la.as_matrix(t, "t")
    if t.shape != params.shape:
        raise ShapeMismatch(f"threshold is {t.shape}, law is {params.shape}")
    tv = la.vec(t)
    s_samp, s_aug = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    z = mv_sample_additive(params.to_multivariate(), draws, s_samp)
    hit = np.all(z > tv, axis=1).astype(float)

    N = params.n * params.p
    cov = np.empty((N + 1, N + 1))
    cov[:N, :N] = params.omega
    cov[:N, N] = cov[N, :N] = params.delta
    cov[N, N] = 1.0
    u = s_aug.standard_normal((draws, N + 1)) @ np.linalg.cholesky(cov).T
    hit_aug = 2.0 * (np.all(u[:, :N] > tv - params.mu, axis=1) & (u[:, N] > 0)).astype(float)
    return OrthantEstimate(McEstimate.from_samples(hit), McEstimate.from_samples(hit_aug))
