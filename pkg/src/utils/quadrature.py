from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from models.domains.element import QuadratureRule
from utils.errors import QuadratureDegreeError

MAX_QUADRATURE_DEGREE = 40
TRIANGLE_DEGREE = 10  # 剛性の被積分関数は 6 次、荷重項のための余裕
EDGE_DEGREE = 9  # 辺上の M_nn, V_n は 3 次以下、その 2 乗は 6 次以下


def _check_degree(degree: int) -> None:
    if not 0 <= degree <= MAX_QUADRATURE_DEGREE:
        raise QuadratureDegreeError(
            f"Quadrature degree {degree} is not supported "
            f"(supported: 0..{MAX_QUADRATURE_DEGREE})"
        )


@lru_cache(maxsize=None)
def triangle_quadrature(degree: int = TRIANGLE_DEGREE) -> QuadratureRule:
    """
    参照三角形 {x, y >= 0, x + y <= 1} 上の積分則

    Duffy 変換 x = ξ, y = (1 - ξ) η による Gauss-Jacobi × Gauss-Legendre の
    テンソル積。n 点ずつで 2n - 1 次まで厳密、重みはすべて正。
    """
    _check_degree(degree)
    n = degree // 2 + 1
    t_jac, w_jac = roots_jacobi(n, 1.0, 0.0)
    t_leg, w_leg = np.polynomial.legendre.leggauss(n)

    xi = 0.5 * (1.0 + t_jac)
    eta = 0.5 * (1.0 + t_leg)
    w_xi = 0.25 * w_jac
    w_eta = 0.5 * w_leg

    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    points = np.column_stack([XI.ravel(), ((1.0 - XI) * ETA).ravel()])
    weights = np.outer(w_xi, w_eta).ravel()
    return QuadratureRule(points=points, weights=weights, degree=2 * n - 1)


@lru_cache(maxsize=None)
def edge_quadrature(degree: int = EDGE_DEGREE) -> QuadratureRule:
    """単位区間 [0, 1] 上の Gauss-Legendre 則"""
    _check_degree(degree)
    n = degree // 2 + 1
    t, w = np.polynomial.legendre.leggauss(n)
    return QuadratureRule(
        points=0.5 * (1.0 + t), weights=0.5 * w, degree=2 * n - 1
    )
