class PlateError(RuntimeError):
    """本パッケージのエラー基底クラス."""


# ---------------------------------------------------------------- mesh
class MeshError(PlateError):
    """メッシュの構築・細分化に関するエラー."""


class NonConformingMeshError(MeshError):
    """ぶら下がり節点や 3 要素以上が共有する辺がある場合に送出."""


class DegenerateTriangleError(MeshError):
    """面積ゼロの三角形がある場合に送出."""


class BoundarySegmentError(MeshError):
    """境界区間が境界上にない、または境界辺にタグが付かない場合に送出."""


class LineLoadCoverageError(MeshError):
    """線荷重の折れ線がメッシュの辺で覆われていない場合に送出."""


class PointLocationError(MeshError):
    """評価点がどの要素にも含まれない場合に送出."""


# ---------------------------------------------------------------- element
class ElementError(PlateError):
    """要素基底の構築に関するエラー."""


class DegenerateElementError(ElementError):
    """21×21 の自由度行列が特異な場合に送出."""

    def __init__(self, element_id: int, condition: float):
        super().__init__(
            f"Argyris functional matrix is singular on element {element_id} "
            f"(condition estimate {condition:.3e})"
        )
        self.element_id = element_id
        self.condition = condition


class QuadratureDegreeError(ElementError):
    """サポートしていない積分次数が要求された場合に送出."""


class DerivativeOrderError(PlateError):
    """必要な階数の導関数が与えられていない場合に送出."""


# ---------------------------------------------------------------- problem
class ProblemError(PlateError):
    """問題設定（材料・荷重・境界条件）の検証エラー."""


class LoadPlacementError(ProblemError):
    """点荷重が節点上にない、分布荷重の領域が要素を横切る場合などに送出."""


class SingularProblemError(ProblemError):
    """拘束のない（全辺自由）問題を明示的な許可なしに作ろうとした場合に送出."""


# ---------------------------------------------------------------- solver
class SolverError(PlateError):
    """連立一次方程式の求解エラー."""


class SingularSystemError(SolverError):
    """縮約系が特異または不定の場合に送出."""


# ---------------------------------------------------------------- oracle
class OracleError(PlateError):
    """参照解の計算エラー."""


class EnergyRadicandError(OracleError):
    """エネルギー誤差の被開平数が大きく負になった場合に送出."""


# ---------------------------------------------------------------- study
class StudyError(PlateError):
    """収束スタディのエラー."""


class InsufficientRecordsError(StudyError):
    """収束率の推定に必要な記録が足りない場合に送出."""


class StudyAbortedError(StudyError):
    """途中で失敗したスタディ。それまでの記録を保持する."""

    def __init__(self, message: str, records: list):
        super().__init__(message)
        self.records = records


# ---------------------------------------------------------------- config
class ConfigError(PlateError):
    """設定ファイルの読み込み・検証に失敗した場合に送出."""
