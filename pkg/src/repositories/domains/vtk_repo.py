from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from constants.types import FloatArray
from models.domains.mesh import Mesh
from utils.errors import PlateError

logger = logging.getLogger(__name__)

VTK_TRIANGLE = 5


class VtkRepository:
    """
    レガシー ASCII 形式の VTK 非構造格子ファイル

    セルデータ eta_K（要素ごとの誤差指標）、点データ deflection（頂点のたわみ）。
    """

    def write(
        self,
        path: Path,
        mesh: Mesh,
        eta_K: FloatArray,
        deflection: FloatArray,
        title: str = "plate-adapt",
    ) -> Path:
        eta_K = np.asarray(eta_K, dtype=float)
        deflection = np.asarray(deflection, dtype=float)
        if eta_K.shape != (mesh.n_triangles,):
            raise PlateError(f"eta_K has shape {eta_K.shape}, mesh has {mesh.n_triangles} cells")
        if deflection.shape != (mesh.n_vertices,):
            raise PlateError(
                f"deflection has shape {deflection.shape}, mesh has {mesh.n_vertices} points"
            )

        lines = [
            "# vtk DataFile Version 2.0",
            title.replace("\n", " ")[:255],
            "ASCII",
            "DATASET UNSTRUCTURED_GRID",
            f"POINTS {mesh.n_vertices} double",
        ]
        lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist()]
        lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
        lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
        lines.append(f"CELL_TYPES {mesh.n_triangles}")
        lines += [str(VTK_TRIANGLE)] * mesh.n_triangles
        lines += [f"CELL_DATA {mesh.n_triangles}", "SCALARS eta_K double 1", "LOOKUP_TABLE default"]
        lines += [repr(v) for v in eta_K.tolist()]
        lines += [
            f"POINT_DATA {mesh.n_vertices}",
            "SCALARS deflection double 1",
            "LOOKUP_TABLE default",
        ]
        lines += [repr(v) for v in deflection.tolist()]

        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        logger.info("wrote vtk cells=%d points=%d path=%s", mesh.n_triangles, mesh.n_vertices, path)
        return path
