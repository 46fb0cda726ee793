from enum import Enum


class BcKind(Enum):
    """境界条件の種類"""

    CLAMPED = "clamped"  # 固定: u = ∂u/∂n = 0
    SIMPLY_SUPPORTED = "simply_supported"  # 単純支持: u = M_nn = 0
    FREE = "free"  # 自由: M_nn = V_n = 0


class EdgeTag(Enum):
    """辺のタグ（内部 or 境界条件）"""

    INTERIOR = "interior"
    CLAMPED = "clamped"
    SIMPLY_SUPPORTED = "simply_supported"
    FREE = "free"

    @classmethod
    def from_bc(cls, kind: BcKind) -> "EdgeTag":
        return cls(kind.value)

    @property
    def is_boundary(self) -> bool:
        return self is not EdgeTag.INTERIOR


# 配列に格納する際の整数コード（順序は固定）
EDGE_TAG_CODES: dict[EdgeTag, int] = {
    EdgeTag.INTERIOR: 0,
    EdgeTag.CLAMPED: 1,
    EdgeTag.SIMPLY_SUPPORTED: 2,
    EdgeTag.FREE: 3,
}
CODE_TO_EDGE_TAG: dict[int, EdgeTag] = {v: k for k, v in EDGE_TAG_CODES.items()}


class DofKind(Enum):
    """Argyris 要素の自由度の種類"""

    VERTEX_VALUE = "vertex_value"
    VERTEX_DX = "vertex_dx"
    VERTEX_DY = "vertex_dy"
    VERTEX_DXX = "vertex_dxx"
    VERTEX_DXY = "vertex_dxy"
    VERTEX_DYY = "vertex_dyy"
    EDGE_NORMAL = "edge_normal"


# 頂点ごとの 6 自由度（この順で連続した番号を振る）
VERTEX_DOF_KINDS: tuple[DofKind, ...] = (
    DofKind.VERTEX_VALUE,
    DofKind.VERTEX_DX,
    DofKind.VERTEX_DY,
    DofKind.VERTEX_DXX,
    DofKind.VERTEX_DXY,
    DofKind.VERTEX_DYY,
)


class Strategy(Enum):
    """メッシュ細分化の戦略"""

    UNIFORM = "uniform"  # 赤細分（4 分割）
    ADAPTIVE = "adaptive"  # マーキング + 最新頂点二分割


class BuiltinCase(Enum):
    """組み込みの数値実験ケース"""

    POINT = "point"
    LINE = "line"
    SQUARE = "square"
    LSHAPE_SS = "lshape_ss"
    LSHAPE_CC = "lshape_cc"
    LSHAPE_FREE = "lshape_free"


class OracleCase(Enum):
    """Navier 級数の荷重ケース"""

    SQUARE = "square"
    LINE = "line"
    POINT = "point"
    POINT_MAX = "point-max"  # 中央点の高速単級数


class IndicatorTerm(Enum):
    """誤差指標の内訳（η² の 6 項）"""

    INTERIOR_RESIDUAL = "interior_residual"
    MOMENT_JUMP = "moment_jump"
    SHEAR_JUMP = "shear_jump"
    BOUNDARY_MOMENT = "boundary_moment"
    BOUNDARY_SHEAR = "boundary_shear"
    LINE_LOAD = "line_load"
