"""Command-line interface: ``matsn <command> [options]``.

Exit codes: 0 success (order verdicts included), 1 selftest failure,
2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import distribution as dist
from . import functions
from . import identity
from . import linalg as la
from . import orders
from .errors import ConfigError, MatsnError, MixturePdFailure

SCHEMA_VERSION = 1
DEFAULT_SEED = 0xC0FFEE
COMMANDS = ("sample", "density", "cf", "moments", "check-order", "verify-identity", "selftest")


class NumericFailure(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: Optional[str] = None
    x: Optional[str] = None
    y: Optional[str] = None
    point: Optional[str] = None
    descriptor: Optional[str] = None
    output: Optional[str] = None
    seed: int = DEFAULT_SEED
    count: int = 1000
    method: str = "additive"
    order: Optional[str] = None
    evidence: bool = False
    draws: int = 100_000
    family_size: int = 8
    lambda_nodes: int = 16
    mc_per_node: int = 200_000
    lhs_samples: Optional[int] = None
    quick: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


CONFIG_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


# ---------------------------------------------------------------------------
# input helpers


def _read_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path!r} is not valid JSON: {exc}") from None


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"missing required option --{flag.replace('_', '-')}")
    return value


def _as_config_error(what: str, exc: Exception) -> ConfigError:
    return ConfigError(f"invalid {what}: {type(exc).__name__}: {exc}")


def load_params(path: str) -> dist.MsnParams:
    doc = _read_json(path, "params")
    try:
        return dist.MsnParams.from_dict(doc)
    except (MatsnError, TypeError, ValueError) as exc:
        raise _as_config_error(f"params file {path!r}", exc) from None


VEC_LAW_KEYS = {"n", "p", "mu", "Omega", "delta"}


def _law_from_doc(doc) -> tuple[identity.Law, int, int]:
    """Matrix params document, or vec form ``{n, p, mu, Omega, delta}``."""
    if isinstance(doc, dict) and set(doc) == VEC_LAW_KEYS:
        n, p = int(doc["n"]), int(doc["p"])
        mv = dist.MvSnParams(doc["mu"], doc["Omega"], doc["delta"], check_admissible=False)
        if mv.dim != n * p:
            raise ConfigError(f"vec-form law has dimension {mv.dim}, expected {n * p}")
        return mv, n, p
    params = dist.MsnParams.from_dict(doc)
    return params, params.n, params.p


def _function_from_entry(entry, n: int, p: int) -> functions.TestFunction:
    if isinstance(entry, str):
        if entry not in functions.BUILTIN_NAMES:
            raise ConfigError(f"unknown builtin function {entry!r}; choose from {list(functions.BUILTIN_NAMES)}")
        return functions.builtin(entry, n, p)
    if isinstance(entry, dict) and set(entry) == {"polynomial"}:
        return functions.polynomial(n, p, entry["polynomial"])
    raise ConfigError('f must be a builtin name or {"polynomial": [[coef, exponents], ...]}')


DESCRIPTOR_KEYS = {"f", "x", "y", "lambda_nodes", "mc_per_node", "seed", "lhs_samples"}


def load_descriptor(path: str) -> dict:
    doc = _read_json(path, "descriptor")
    if not isinstance(doc, dict):
        raise ConfigError("descriptor must be a JSON object")
    unknown = set(doc) - DESCRIPTOR_KEYS
    missing = {"f", "x", "y"} - set(doc)
    if unknown or missing:
        raise ConfigError(f"descriptor keys: unknown {sorted(unknown)}, missing {sorted(missing)}")
    return doc


def _points(path: str, shape: tuple[int, int]) -> np.ndarray:
    try:
        arr = np.asarray(_read_json(path, "point"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise _as_config_error("point file", exc) from None
    if not np.all(np.isfinite(arr)):
        raise ConfigError("point file has non-finite entries")
    if arr.shape == shape:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != shape:
        raise ConfigError(f"points must be a {shape[0]}x{shape[1]} matrix or a list of them")
    return arr


# ---------------------------------------------------------------------------
# output helpers


def _atomic_write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".matsn-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _report(cfg: RunConfig, body: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": cfg.command, "config": cfg.to_dict()}
    doc.update(body)
    return json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv(draws: np.ndarray, n: int, p: int) -> str:
    header = ",".join(f"x_{i}_{j}" for j in range(1, p + 1) for i in range(1, n + 1))
    buf = io.StringIO()
    buf.write(header + "\n")
    if len(draws):
        np.savetxt(buf, la.vec(draws), fmt="%.17g", delimiter=",")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_sample(cfg: RunConfig) -> int:
    params = load_params(_require(cfg.params, "params"))
    if cfg.count < 0:
        raise ConfigError("count must be nonnegative")
    if cfg.method not in ("additive", "rejection"):
        raise ConfigError("method must be additive or rejection")
    batch = dist.sample(params, cfg.count, cfg.seed, cfg.method)
    meta = {
        "count": batch.count,
        "method": batch.method,
        "seed": cfg.seed,
        "columns": "vec order: x_i_j is entry (i, j), 1-based, column-stacked",
        "acceptance_rate": batch.acceptance_rate,
        "proposals": batch.proposals,
    }
    text = _csv(np.asarray(batch.draws), params.n, params.p)
    meta_text = _report(cfg, {"metadata": meta})
    if cfg.output is None:
        sys.stdout.write(text)
        sys.stderr.write(meta_text)
    else:
        _atomic_write(cfg.output + ".meta.json", meta_text)
        _atomic_write(cfg.output, text)
    return 0


def cmd_density(cfg: RunConfig) -> int:
    params = load_params(_require(cfg.params, "params"))
    Y = _points(_require(cfg.point, "point"), params.shape)
    logd = dist.log_density(params, Y)
    _atomic_write(cfg.output, _report(cfg, {"log_density": np.atleast_1d(logd), "density": np.exp(np.atleast_1d(logd))}))
    return 0


def cmd_cf(cfg: RunConfig) -> int:
    params = load_params(_require(cfg.params, "params"))
    T = _points(_require(cfg.point, "point"), params.shape)
    vals = np.atleast_1d(dist.cf(params, T))
    _atomic_write(cfg.output, _report(cfg, {"cf": [{"re": float(v.real), "im": float(v.imag)} for v in vals]}))
    return 0


def cmd_moments(cfg: RunConfig) -> int:
    params = load_params(_require(cfg.params, "params"))
    body = {
        "delta": params.delta,
        "mean": dist.mean(params),
        "second_moment": dist.second_moment(params),
        "covariance": dist.covariance(params),
    }
    _atomic_write(cfg.output, _report(cfg, body))
    return 0


def cmd_check_order(cfg: RunConfig) -> int:
    x = load_params(_require(cfg.x, "x"))
    y = load_params(_require(cfg.y, "y"))
    try:
        kind = orders.OrderKind(_require(cfg.order, "order"))
    except ValueError:
        raise ConfigError(f"order must be one of {[k.value for k in orders.OrderKind]}") from None
    if x.shape != y.shape:
        raise ConfigError(f"shape mismatch: x is {x.shape}, y is {y.shape}")
    verdict = orders.check_order(kind, x, y)
    body = verdict.to_dict()
    if cfg.evidence:
        family = orders.family_for_order(kind, x.n, x.p, cfg.family_size, seed=cfg.seed)
        ev = orders.mc_order_evidence(x, y, family, cfg.draws, seed=cfg.seed, claimed=verdict.status)
        body["evidence"] = ev.to_dict()
    _atomic_write(cfg.output, _report(cfg, body))
    return 0


def cmd_verify_identity(cfg: RunConfig) -> int:
    doc = load_descriptor(_require(cfg.descriptor, "descriptor"))
    try:
        x, n, p = _law_from_doc(doc["x"])
        y, n2, p2 = _law_from_doc(doc["y"])
        if (n, p) != (n2, p2):
            raise ConfigError(f"shape mismatch: x is {(n, p)}, y is {(n2, p2)}")
        f = _function_from_entry(doc["f"], n, p)
    except ConfigError:
        raise
    except (MatsnError, TypeError, ValueError, KeyError) as exc:
        raise _as_config_error("descriptor", exc) from None
    nodes = int(doc.get("lambda_nodes", cfg.lambda_nodes))
    mc = int(doc.get("mc_per_node", cfg.mc_per_node))
    seed = int(doc.get("seed", cfg.seed))
    lhs_samples = doc.get("lhs_samples", cfg.lhs_samples)
    try:
        rep = identity.verify_identity(f, x, y, nodes, mc, seed, lhs_samples, convergence=nodes >= 2)
    except MixturePdFailure as exc:
        raise NumericFailure(f"{exc} (failing lambda = {exc.lam:.6g})") from exc
    body = {"descriptor": doc, "function": f.name, **rep.to_dict()}
    _atomic_write(cfg.output, _report(cfg, body))
    return 0


def cmd_selftest(cfg: RunConfig) -> int:
    from .selftest import BatteryConfig, run_battery

    results = run_battery(BatteryConfig(seed=cfg.seed, quick=cfg.quick))
    passed = all(r.passed for r in results)
    body = {"passed": passed, "checks": [r.to_dict() for r in results]}
    _atomic_write(cfg.output, _report(cfg, body))
    for r in results:
        sys.stderr.write(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.1f}s)\n")
    return 0 if passed else 1


HANDLERS = {
    "sample": cmd_sample,
    "density": cmd_density,
    "cf": cmd_cf,
    "moments": cmd_moments,
    "check-order": cmd_check_order,
    "verify-identity": cmd_verify_identity,
    "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------
# argument parsing


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matsn", description="Matrix variate skew-normal toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON file of option values (unknown keys are rejected)")
        sp.add_argument("--seed", type=_seed, help=f"RNG seed (default {DEFAULT_SEED:#x})")
        sp.add_argument("--output", "-o", help="output path (default: standard output)")
        return sp

    sp = add("sample", "draw samples as CSV with a JSON metadata sidecar")
    sp.add_argument("--params", help="params JSON file")
    sp.add_argument("--count", type=int)
    sp.add_argument("--method", choices=["additive", "rejection"])

    for name, label in (("density", "density at one or more points"), ("cf", "characteristic function at T")):
        sp = add(name, label)
        sp.add_argument("--params")
        sp.add_argument("--point", help="JSON matrix or list of matrices")

    sp = add("moments", "mean, second moment and covariance of vec(Y)")
    sp.add_argument("--params")

    sp = add("check-order", "decide a stochastic order between two laws")
    sp.add_argument("--x")
    sp.add_argument("--y")
    sp.add_argument("--order", choices=[k.value for k in orders.OrderKind])
    sp.add_argument("--evidence", action="store_true")
    sp.add_argument("--draws", type=int)
    sp.add_argument("--family-size", dest="family_size", type=int)

    sp = add("verify-identity", "estimate both sides of the expectation-difference identity")
    sp.add_argument("--descriptor")
    sp.add_argument("--lambda-nodes", dest="lambda_nodes", type=int)
    sp.add_argument("--mc-per-node", dest="mc_per_node", type=int)
    sp.add_argument("--lhs-samples", dest="lhs_samples", type=int)

    sp = add("selftest", "run the invariant battery")
    sp.add_argument("--quick", action="store_true")
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    given = vars(ns).copy()
    command = given.pop("command")
    values: dict = {}
    config_path = given.pop("config", None)
    if config_path is not None:
        doc = _read_json(config_path, "config")
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(doc) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        values.update(doc)
    values.update(given)
    try:
        cfg = RunConfig(command=command, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (NumericFailure, MatsnError) as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
