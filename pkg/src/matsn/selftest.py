"""Invariant battery run by ``matsn selftest``."""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import cases
from . import distribution as dist
from . import identity
from . import linalg as la
from . import orders


@dataclass(frozen=True)
class BatteryConfig:
    seed: int = 0xC0FFEE
    quick: bool = False

    def size(self, full: int, quick: int) -> int:
        return quick if self.quick else full


@dataclass
class CheckResult:
    name: str
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3), "detail": self.detail}


# ---------------------------------------------------------------------------
# random inputs


def random_spd(rng: np.random.Generator, k: int, cond: float = 10.0) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    w = np.exp(rng.uniform(0.0, math.log(cond), size=k))
    return (q * w) @ q.T


def random_params(rng: np.random.Generator, n: int, p: int, skew: float = 1.0) -> dist.MsnParams:
    return dist.MsnParams(
        rng.normal(size=(n, p)), random_spd(rng, p), random_spd(rng, n), skew * rng.normal(size=(n, p))
    )


def normal_cf(params: dist.MsnParams, T) -> complex:
    t = la.vec(T)
    return complex(np.exp(1j * (t @ params.mu) - 0.5 * t @ params.omega @ t))


@functools.lru_cache(maxsize=None)
def _compositions(dim: int, total: int) -> np.ndarray:
    if dim == 1:
        return np.array([[total]])
    blocks = []
    for k in range(total + 1):
        rest = _compositions(dim - 1, total - k)
        blocks.append(np.column_stack([np.full(len(rest), k), rest]))
    return np.concatenate(blocks)


def simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of 1/resolution."""
    return _compositions(dim, resolution).astype(float) / resolution


def random_copositivity_inputs(rng: np.random.Generator, count: int, dims=(2, 3, 4),
                               resolution: int = 200, margin: float = 1e-2):
    """Random symmetric matrices whose grid-oracle minimum lies outside [-margin, margin]."""
    grids = {d: simplex_grid(d, resolution) for d in dims}
    out = []
    while len(out) < count:
        d = int(rng.choice(dims))
        a = rng.uniform(-2.0, 2.0, size=(d, d))
        a = 0.5 * (a + a.T)
        np.fill_diagonal(a, rng.uniform(-0.4, 2.0, size=d))
        g = grids[d]
        low = float(np.min(np.einsum("ki,ki->k", g @ a, g)))
        if abs(low) > margin:
            out.append((a, low))
    return out


# ---------------------------------------------------------------------------
# checks


def check_cf(cfg: BatteryConfig, rng) -> CheckResult:
    worst = 0.0
    zero_ok = True
    for n in (1, 2, 3):
        params = random_params(rng, n, n)
        zero_ok &= dist.cf(params, np.zeros((n, n))) == 1.0
        flat = dist.MsnParams(params.M, params.V, params.Sigma, np.zeros((n, n)))
        for _ in range(cfg.size(100, 30)):
            T = rng.normal(size=(n, n))
            worst = max(worst, abs(dist.cf(flat, T) - normal_cf(flat, T)))
    return CheckResult("cf_normalization_degeneracy", bool(zero_ok and worst < 1e-12),
                       detail={"cf_zero_is_one": bool(zero_ok), "max_abs_diff_B0": worst})


def check_vec_equivalence(cfg: BatteryConfig, rng) -> CheckResult:
    worst = 0.0
    for _ in range(cfg.size(20, 5)):
        n, p = rng.integers(1, 4, size=2)
        params = random_params(rng, int(n), int(p))
        mv = params.to_multivariate()
        Y = params.M + rng.normal(size=(cfg.size(100, 20), n, p))
        a = dist.density(params, Y)
        b = np.exp(dist.mv_log_density(mv, la.vec(Y)))
        worst = max(worst, float(np.max(np.abs(a - b) / b)))
    return CheckResult("vec_equivalence", worst < 1e-12, detail={"max_rel_err": worst})


def check_moments(cfg: BatteryConfig, rng) -> CheckResult:
    draws = cfg.size(1_000_000, 100_000)
    worst = 0.0
    for skew in (0.0, 1.0, 5.0):
        params = random_params(rng, 2, 2, skew)
        z = dist.sample_additive(params, draws, int(rng.integers(2**63))).vec
        theo = la.vec(dist.mean(params))
        se = z.std(axis=0, ddof=1) / math.sqrt(draws)
        worst = max(worst, float(np.max(np.abs(z.mean(axis=0) - theo) / se)))
        outer = z[:, :, None] * z[:, None, :]
        se2 = outer.std(axis=0, ddof=1) / math.sqrt(draws)
        worst = max(worst, float(np.max(np.abs(outer.mean(axis=0) - dist.second_moment(params)) / se2)))
    return CheckResult("moments", worst < 4.0, detail={"max_z": worst})


def check_samplers(cfg: BatteryConfig, rng) -> CheckResult:
    draws = cfg.size(100_000, 20_000)
    min_p, max_rate_z = 1.0, 0.0
    for _ in range(cfg.size(5, 2)):
        params = random_params(rng, 2, 2)
        a = dist.sample_additive(params, draws, int(rng.integers(2**63))).vec
        r = dist.sample_rejection(params, draws, int(rng.integers(2**63)))
        rate_z = abs(r.count - 0.5 * r.proposals) / math.sqrt(0.25 * r.proposals)
        max_rate_z = max(max_rate_z, rate_z)
        for _ in range(5):
            w = rng.normal(size=4)
            min_p = min(min_p, float(stats.ks_2samp(a @ w, r.vec @ w).pvalue))
    return CheckResult("sampler_cross_ks", min_p > 1e-3 and max_rate_z < 4.0,
                       detail={"min_ks_pvalue": min_p, "max_acceptance_z": max_rate_z})


def check_copositivity(cfg: BatteryConfig, rng) -> CheckResult:
    inputs = random_copositivity_inputs(rng, cfg.size(500, 100), resolution=cfg.size(200, 60))
    disagree = 0
    psd_violations = 0
    for a, low in inputs:
        verdict = la.is_copositive(a)
        disagree += verdict.copositive != (low >= 0)
        if la.is_psd(a)[0] and not verdict.copositive:
            psd_violations += 1
    return CheckResult("copositivity_oracle", disagree == 0 and psd_violations == 0,
                       detail={"matrices": len(inputs), "disagreements": disagree,
                               "psd_not_copositive": psd_violations})


def check_identity(cfg: BatteryConfig, rng) -> CheckResult:
    mc = cfg.size(200_000, 20_000)
    zs = {}
    for case in identity.preregistered_cases():
        rep = identity.verify_identity(case.f, case.x, case.y, 16, mc, seed=int(rng.integers(2**63)))
        zs[case.name] = rep.z
    return CheckResult("identity_triples", all(z <= 3.0 for z in zs.values()), detail={"z": zs})


def check_orders(cfg: BatteryConfig, rng) -> CheckResult:
    draws = cfg.size(100_000, 20_000)
    problems = []
    for case in cases.positive_cases() + cases.negative_cases():
        verdict = orders.check_order(case.order, case.x, case.y)
        if verdict.status is not case.expected:
            problems.append(f"{case.order.value}/{case.name}: {verdict.status.value}")
        if verdict.witness is not None and not orders.verify_witness(verdict.witness, case.x, case.y):
            problems.append(f"{case.order.value}/{case.name}: witness does not re-verify")
        refl = orders.check_order(case.order, case.x, case.x)
        if not refl.status.holds:
            problems.append(f"{case.order.value}: not reflexive")
    st_case = cases.positive_cases()[0]
    for kind in (orders.FamilyKind.INCREASING_LINEAR, orders.FamilyKind.UPPER_ORTHANT_INDICATORS,
                 orders.FamilyKind.INCREASING_CONVEX_HINGE):
        fam = orders.make_family(kind, 2, 2, 8, seed=int(rng.integers(2**63)))
        ev = orders.mc_order_evidence(st_case.x, st_case.y, fam, draws, int(rng.integers(2**63)),
                                      claimed=orders.Status.HOLDS_PROVEN)
        if ev.consistency_failure:
            problems.append(f"st implication chain broken on {kind.value}")
    return CheckResult("order_deciders", not problems, detail={"problems": problems})


def check_kron_corr(cfg: BatteryConfig, rng) -> CheckResult:
    ok = all(la.kron_corr_check(random_spd(rng, int(a)), random_spd(rng, int(b)))
             for a, b in rng.integers(1, 5, size=(cfg.size(50, 10), 2)))
    return CheckResult("kron_correlation", bool(ok))


CHECKS: tuple[Callable[[BatteryConfig, np.random.Generator], CheckResult], ...] = (
    check_cf, check_vec_equivalence, check_kron_corr, check_samplers, check_moments,
    check_copositivity, check_identity, check_orders,
)


def run_battery(cfg: BatteryConfig) -> list[CheckResult]:
    results = []
    for check, ss in zip(CHECKS, np.random.SeedSequence(cfg.seed).spawn(len(CHECKS))):
        start = time.perf_counter()
        try:
            res = check(cfg, np.random.default_rng(ss))
        except Exception as exc:  # a crashing check is a failing check
            res = CheckResult(check.__name__.removeprefix("check_"), False, detail={"error": repr(exc)})
        res.seconds = time.perf_counter() - start
        results.append(res)
    return results
