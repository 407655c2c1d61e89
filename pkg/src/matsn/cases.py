"""Constructed parameter pairs with known order relations (n = p = 2)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distribution import MsnParams
from .orders import OrderKind, Status


def corr2(r: float) -> np.ndarray:
    return np.array([[1.0, r], [r, 1.0]])


@dataclass(frozen=True)
class OrderCase:
    order: OrderKind
    name: str
    x: MsnParams
    y: MsnParams
    expected: Status


_DELTA = np.array([0.3, -0.2, 0.25, 0.1])
_M = np.array([[0.5, -1.0], [0.2, 0.8]])
_V = np.array([[1.5, 0.4], [0.4, 0.9]])
_S = np.array([[1.1, -0.3], [-0.3, 0.7]])


def _std(rv: float, rs: float, delta) -> MsnParams:
    return MsnParams.from_delta(np.zeros((2, 2)), corr2(rv), corr2(rs), delta)


def positive_cases() -> list[OrderCase]:
    st_x = MsnParams.from_delta(_M, _V, _S, _DELTA)
    st_y = MsnParams.from_delta(_M + 1.0, 2.0 * _V, _S / 2.0, _DELTA + 0.05)

    cx_x = _std(0.3, 0.2, _DELTA)
    cx_y = MsnParams.from_delta(np.zeros((2, 2)), 2.0 * corr2(0.3), corr2(0.2) / 2.0, _DELTA)

    lo, hi = _std(0.1, 0.3, _DELTA), _std(0.5, 0.3, _DELTA)
    icx_y = _std(0.5, 0.3, _DELTA + np.array([0.05, 0.0, 0.05, 0.1]))

    V_hi = _V + np.array([[0.0, 0.3], [0.3, 0.0]])
    uo_x = MsnParams.from_delta(_M, _V, np.abs(_S), _DELTA)
    uo_y = MsnParams.from_delta(_M, V_hi, np.abs(_S), _DELTA + 0.05)

    return [
        OrderCase(OrderKind.ST, "shift_and_rescaled_factors", st_x, st_y, Status.HOLDS_PROVEN),
        OrderCase(OrderKind.CX, "standardized_equal_law", cx_x, cx_y, Status.HOLDS_PROVEN),
        OrderCase(OrderKind.ICX, "standardized_corr_and_slant_up", lo, icx_y, Status.HOLDS_PROVEN),
        OrderCase(OrderKind.DCX, "standardized_corr_up", lo, hi, Status.HOLDS_PROVEN),
        OrderCase(OrderKind.UO, "slepian_branch", uo_x, uo_y, Status.SUFFICIENT_HOLDS),
        OrderCase(OrderKind.SM, "standardized_corr_up", lo, hi, Status.HOLDS_PROVEN),
    ]


def negative_cases() -> list[OrderCase]:
    base = MsnParams.from_delta(_M, _V, _S, _DELTA)
    lo, hi = _std(0.1, 0.3, _DELTA), _std(0.5, 0.3, _DELTA)
    return [
        OrderCase(OrderKind.ST, "location_decreased", base,
                  MsnParams.from_delta(_M - 0.5, _V, _S, _DELTA), Status.FAILS_PROVEN),
        OrderCase(OrderKind.CX, "slant_changed", lo, _std(0.1, 0.3, -_DELTA), Status.FAILS_PROVEN),
        OrderCase(OrderKind.ICX, "corr_decreased", hi, lo, Status.FAILS_PROVEN),
        OrderCase(OrderKind.DCX, "corr_decreased", hi, lo, Status.FAILS_PROVEN),
        OrderCase(OrderKind.UO, "location_decreased", base,
                  MsnParams.from_delta(_M - 0.5, _V, _S, _DELTA), Status.FAILS_PROVEN),
        OrderCase(OrderKind.SM, "corr_decreased", hi, lo, Status.FAILS_PROVEN),
    ]
