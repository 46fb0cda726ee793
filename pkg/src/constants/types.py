from collections.abc import Callable

import numpy as np
import numpy.typing as npt

# 数値配列の型定義
FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
BoolArray = npt.NDArray[np.bool_]

# 座標 (x, y) の組
Point = tuple[float, float]

# 補間用の場: (x, y) -> [u, u_x, u_y, u_xx, u_xy, u_yy] （形状 (6, n)）
JetField = Callable[[FloatArray, FloatArray], FloatArray]

# スカラー密度関数 (x, y) -> f(x, y)
Density = Callable[[FloatArray, FloatArray], FloatArray]

# 導関数の並び (p, q) = ∂^{p+q} / ∂x^p ∂y^q 。4 階まで計 15 成分
DERIVATIVE_ORDERS: tuple[tuple[int, int], ...] = (
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
)

# 各階数までの成分数 (0 階: 1, 1 階: 3, 2 階: 6, 3 階: 10, 4 階: 15)
COMPONENTS_UP_TO_ORDER: tuple[int, ...] = (1, 3, 6, 10, 15)
