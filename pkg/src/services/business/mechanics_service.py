from __future__ import annotations

import numpy as np

from constants.types import FloatArray
from models.domains.element import DerivativeBundle
from models.domains.plate import Material, PlateResultants


def bending_stiffness(material: Material) -> float:
    """D = E d³ / (12 (1 - ν²))"""
    return material.D


def constitutive_apply(A: FloatArray, material: Material) -> FloatArray:
    """𝔼A = E / (1 + ν) (A + ν / (1 - ν) tr(A) I)。A は (..., 2, 2)"""
    A = np.asarray(A, dtype=float)
    E, nu = material.E, material.nu
    trace = A[..., 0, 0] + A[..., 1, 1]
    return E / (1.0 + nu) * (A + (nu / (1.0 - nu)) * trace[..., None, None] * np.eye(2))


def bending_matrix(material: Material) -> FloatArray:
    """曲率 (u_xx, u_yy, u_xy) に対するエネルギー密度の行列"""
    D, nu = material.D, material.nu
    return D * np.array([[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 2.0 * (1.0 - nu)]])


def plate_operator(derivatives: DerivativeBundle, material: Material) -> FloatArray:
    """D (u_xxxx + 2 u_xxyy + u_yyyy)"""
    d4 = derivatives.fourth
    return material.D * (d4[0] + 2.0 * d4[2] + d4[4])


def pointwise_mechanics(
    derivatives: DerivativeBundle,
    material: Material,
    normal: FloatArray,
    tangent: FloatArray,
) -> PlateResultants:
    """
    モーメント・せん断力・辺上の量

    normal, tangent は先頭軸が (x, y) 成分で、残りの軸は導関数の点の軸にブロードキャストする。

    Raises:
        DerivativeOrderError: 3 階までの導関数がない
    """
    derivatives.require(3)
    n = np.asarray(normal, dtype=float)
    s = np.asarray(tangent, dtype=float)
    D, nu = material.D, material.nu

    u_xx, u_xy, u_yy = derivatives.hessian
    hessian = np.stack([np.stack([u_xx, u_xy], -1), np.stack([u_xy, u_yy], -1)], -2)
    moment = material.moment_factor * constitutive_apply(-hessian, material)
    m_xx, m_xy, m_yy = moment[..., 0, 0], moment[..., 0, 1], moment[..., 1, 1]

    u_xxx, u_xxy, u_xyy, u_yyy = derivatives.third
    q_x = -D * (u_xxx + u_xyy)
    q_y = -D * (u_xxy + u_yyy)

    # モーメントの x, y 微分
    dx_mxx = -D * (u_xxx + nu * u_xyy)
    dy_mxx = -D * (u_xxy + nu * u_yyy)
    dx_myy = -D * (u_xyy + nu * u_xxx)
    dy_myy = -D * (u_yyy + nu * u_xxy)
    dx_mxy = -D * (1.0 - nu) * u_xxy
    dy_mxy = -D * (1.0 - nu) * u_xyy

    cross = s[0] * n[1] + s[1] * n[0]
    m_nn = n[0] ** 2 * m_xx + 2.0 * n[0] * n[1] * m_xy + n[1] ** 2 * m_yy
    m_ns = s[0] * n[0] * m_xx + cross * m_xy + s[1] * n[1] * m_yy
    dx_mns = s[0] * n[0] * dx_mxx + cross * dx_mxy + s[1] * n[1] * dx_myy
    dy_mns = s[0] * n[0] * dy_mxx + cross * dy_mxy + s[1] * n[1] * dy_myy
    q_n = q_x * n[0] + q_y * n[1]
    v_n = q_n + s[0] * dx_mns + s[1] * dy_mns

    return PlateResultants(
        moments=np.stack([m_xx, m_xy, m_yy]),
        shear=np.stack([q_x, q_y]),
        q_n=q_n,
        m_nn=m_nn,
        m_ns=m_ns,
        v_n=v_n,
        plate_operator=(
            plate_operator(derivatives, material) if derivatives.max_order >= 4 else None
        ),
    )
