from __future__ import annotations

from typing import Literal

import numpy as np
import scipy.sparse as sp
from pydantic import field_validator

from constants.types import FloatArray, IntArray
from models.bases._base import CoreBaseModel, readonly
from models.domains.element import ElementBasis
from models.domains.mesh import Mesh


class DofMap(CoreBaseModel):
    """
    大域自由度の番号付け

    頂点 v -> 6v .. 6v+5 (値, dx, dy, dxx, dxy, dyy)、辺 e -> 6V + e
    """

    n_vertices: int
    n_edges: int
    element_dofs: IntArray  # (T, 21) 要素局所順の大域番号

    @field_validator("element_dofs", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value, dtype=np.int64)

    @property
    def n_dofs(self) -> int:
        return 6 * self.n_vertices + self.n_edges

    def vertex_dofs(self, vertex_id: int) -> IntArray:
        return np.arange(6 * vertex_id, 6 * vertex_id + 6)

    def edge_dof(self, edge_id: int) -> int:
        return 6 * self.n_vertices + edge_id

    @property
    def value_dofs(self) -> IntArray:
        return np.arange(self.n_vertices) * 6


class ConstraintSet(CoreBaseModel):
    """
    斉次線形拘束 R x = 0 と、その零空間の基底 x = T y

    relations は階数落とし後の独立な行、free_dofs は y の各成分に対応する自由度。
    """

    relations: sp.csr_matrix  # (r, N)
    transform: sp.csr_matrix  # (N, n_free)
    free_dofs: IntArray
    dependent_dofs: IntArray

    @field_validator("free_dofs", "dependent_dofs", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value, dtype=np.int64)

    @property
    def n_relations(self) -> int:
        return self.relations.shape[0]

    @property
    def n_free(self) -> int:
        return len(self.free_dofs)

    @property
    def n_constrained(self) -> int:
        return len(self.dependent_dofs)

    def expand(self, reduced: FloatArray) -> FloatArray:
        return self.transform @ reduced


class LinearSystem(CoreBaseModel):
    """縮約済みの対称系 K y = b"""

    matrix: sp.csr_matrix
    rhs: FloatArray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


class SolverDiagnostics(CoreBaseModel):
    method: Literal["splu", "cg", "empty"]
    n_free: int
    residual: float  # 相対残差 ‖K y - b‖ / ‖b‖
    iterations: int | None = None  # cg の反復回数
    min_pivot: float | None = None  # スケール済み LU の最小ピボット
    refined: bool = False  # 反復改良を行ったか


class Solution(CoreBaseModel):
    mesh: Mesh
    dofmap: DofMap
    basis: ElementBasis
    coefficients: FloatArray  # (N,)
    diagnostics: SolverDiagnostics | None = None

    @field_validator("coefficients", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly(value)

    def element_coefficients(self) -> FloatArray:
        """(T, 21) 要素局所順の係数"""
        return self.coefficients[self.dofmap.element_dofs]
