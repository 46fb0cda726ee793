"""Monomial derivative tables for the quintic Argyris basis."""

from __future__ import annotations

from collections.abc import Sequence
from math import factorial

import numpy as np

from constants.types import DERIVATIVE_ORDERS, FloatArray

QUINTIC_DEGREE = 5

# ξ^a η^b の指数 (a, b)。次数の昇順、同次数内では a の降順
MONOMIAL_EXPONENTS: tuple[tuple[int, int], ...] = tuple(
    (k - j, j) for k in range(QUINTIC_DEGREE + 1) for j in range(k + 1)
)
N_MONOMIALS = len(MONOMIAL_EXPONENTS)  # 21


def falling_factorial(n: int, k: int) -> int:
    """下降階乗 n (n-1) ... (n-k+1)。k > n のときは 0"""
    if k > n:
        return 0
    return factorial(n) // factorial(n - k)


def monomial_derivatives(
    xi: FloatArray,
    eta: FloatArray,
    orders: Sequence[tuple[int, int]] = DERIVATIVE_ORDERS,
) -> FloatArray:
    """
    5 次以下の全単項式について、局所座標での偏導関数を評価する

    Args:
        xi, eta: 同じ形状の局所座標
        orders: 評価する (p, q) の並び

    Returns:
        形状 (len(orders), *xi.shape, 21) の配列
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi_pow = np.stack([np.ones_like(xi)] + [xi**k for k in range(1, QUINTIC_DEGREE + 1)])
    eta_pow = np.stack(
        [np.ones_like(eta)] + [eta**k for k in range(1, QUINTIC_DEGREE + 1)]
    )

    out = np.zeros((len(orders), *xi.shape, N_MONOMIALS))
    for i, (p, q) in enumerate(orders):
        for j, (a, b) in enumerate(MONOMIAL_EXPONENTS):
            coef = falling_factorial(a, p) * falling_factorial(b, q)
            if coef == 0:
                continue
            out[i, ..., j] = coef * xi_pow[a - p] * eta_pow[b - q]
    return out
