"""Mesh construction, red and newest-vertex refinement, and point location."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence

import numpy as np

from constants.options import EDGE_TAG_CODES, BcKind, EdgeTag
from constants.types import FloatArray, IntArray, Point
from models.domains.mesh import BoundarySegment, Mesh, MeshStatistics
from utils.errors import (
    BoundarySegmentError,
    DegenerateTriangleError,
    LineLoadCoverageError,
    MeshError,
    NonConformingMeshError,
    PointLocationError,
)

logger = logging.getLogger(__name__)

_GEOM_TOL = 1e-10
_LOCATE_CHUNK = 256

# (lo, hi) -> (タグコード, 線荷重フラグ)
TagLookup = dict[tuple[int, int], tuple[int, bool]]


# =====================================================================
# internal helpers
# =====================================================================
def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _signed_areas(vertices: FloatArray, triangles: IntArray) -> FloatArray:
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _label_longest_edge(vertices: FloatArray, triangles: IntArray) -> IntArray:
    """各三角形を巡回させ、最長辺を局所辺 0 にする（向きは保つ）"""
    p = vertices[triangles]
    lengths = np.stack(
        [np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3)], axis=1
    )
    # 同長の辺は番号の小さい方を選ぶ
    longest = np.argmax(lengths >= lengths.max(axis=1, keepdims=True) * (1 - 1e-12), axis=1)
    rows = np.arange(len(triangles))[:, None]
    cols = (longest[:, None] + np.arange(3)[None, :]) % 3
    return triangles[rows, cols]


def _connect(triangles: IntArray, n_vertices: int) -> tuple[IntArray, IntArray, IntArray]:
    """辺の一覧、要素→辺、辺→要素を構築する"""
    n_tri = len(triangles)
    local = np.stack(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1
    )
    lo = local.min(axis=2)
    hi = local.max(axis=2)
    keys = (lo * n_vertices + hi).ravel()
    uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    if (counts > 2).any():
        bad = int(np.flatnonzero(counts > 2)[0])
        raise NonConformingMeshError(
            f"Edge ({uniq[bad] // n_vertices}, {uniq[bad] % n_vertices}) "
            f"is shared by {counts[bad]} triangles"
        )

    edges = np.column_stack([uniq // n_vertices, uniq % n_vertices])
    triangle_edges = inverse.reshape(n_tri, 3)

    owner = np.repeat(np.arange(n_tri), 3)
    forward = (local[..., 0] < local[..., 1]).ravel()
    order = np.argsort(inverse, kind="stable")
    sorted_edges = inverse[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_edges[1:] != sorted_edges[:-1]

    edge_triangles = np.full((len(edges), 2), -1, dtype=np.int64)
    edge_triangles[sorted_edges[first], 0] = owner[order][first]
    edge_triangles[sorted_edges[~first], 1] = owner[order][~first]

    # 共有辺は両側から逆向きに辿られるはず
    edge_forward = np.zeros((len(edges), 2), dtype=bool)
    edge_forward[sorted_edges[first], 0] = forward[order][first]
    edge_forward[sorted_edges[~first], 1] = forward[order][~first]
    shared = edge_triangles[:, 1] >= 0
    overlapping = shared & (edge_forward[:, 0] == edge_forward[:, 1])
    if overlapping.any():
        e = int(np.flatnonzero(overlapping)[0])
        raise NonConformingMeshError(
            f"Triangles {edge_triangles[e].tolist()} overlap across edge {edges[e].tolist()}"
        )
    return edges, triangle_edges, edge_triangles


def _check_hanging_vertices(vertices: FloatArray, edges: IntArray, boundary: IntArray) -> None:
    """境界辺の内部に乗っている頂点（ぶら下がり節点）を検出する"""
    scale = max(1.0, float(np.abs(vertices).max()))
    for e in boundary:
        a, b = vertices[edges[e, 0]], vertices[edges[e, 1]]
        d = b - a
        rel = vertices - a
        t = rel @ d / (d @ d)
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / np.linalg.norm(d)
        inside = (dist <= _GEOM_TOL * scale) & (t > _GEOM_TOL) & (t < 1 - _GEOM_TOL)
        if inside.any():
            raise NonConformingMeshError(
                f"Vertex {int(np.flatnonzero(inside)[0])} hangs on edge {edges[e].tolist()}"
            )


def edges_on_segment(
    vertices: FloatArray, edges: IntArray, start: FloatArray, end: FloatArray
) -> IntArray:
    """線分 start-end 上にある辺の ID"""
    d = end - start
    length2 = float(d @ d)
    scale = max(1.0, float(np.abs(vertices).max()))
    on = np.ones(len(edges), dtype=bool)
    for k in range(2):
        rel = vertices[edges[:, k]] - start
        t = rel @ d / length2
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / np.sqrt(length2)
        on &= (dist <= _GEOM_TOL * scale) & (t >= -_GEOM_TOL) & (t <= 1 + _GEOM_TOL)
    return np.flatnonzero(on)


def _edge_index(edges: IntArray) -> dict[tuple[int, int], int]:
    return {(int(lo), int(hi)): i for i, (lo, hi) in enumerate(edges)}


def _assemble(
    vertices: FloatArray,
    triangles: IntArray,
    tags: TagLookup,
    boundary_segments: tuple[BoundarySegment, ...],
    line_load_polyline: tuple[Point, ...] | None,
) -> Mesh:
    """細分化の結果からメッシュを組み立てる（タグは継承表から）"""
    edges, triangle_edges, edge_triangles = _connect(triangles, len(vertices))
    interior = EDGE_TAG_CODES[EdgeTag.INTERIOR]
    info = [tags.get((int(lo), int(hi)), (interior, False)) for lo, hi in edges]
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        triangle_edges=triangle_edges,
        edge_triangles=edge_triangles,
        edge_tags=np.array([code for code, _ in info], dtype=np.int64),
        edge_on_line_load=np.array([on for _, on in info], dtype=bool),
        boundary_segments=boundary_segments,
        line_load_polyline=line_load_polyline,
    )


def _inherited_tags(mesh: Mesh, midpoint_of: IntArray) -> TagLookup:
    """分割された辺の半分に親のタグを引き継ぐ"""
    tags: TagLookup = {}
    interior = EDGE_TAG_CODES[EdgeTag.INTERIOR]
    for e, (lo, hi) in enumerate(mesh.edges):
        code = int(mesh.edge_tags[e])
        on_line = bool(mesh.edge_on_line_load[e])
        if code == interior and not on_line:
            continue
        m = int(midpoint_of[e])
        if m < 0:
            tags[(int(lo), int(hi))] = (code, on_line)
        else:
            tags[_pair(int(lo), m)] = (code, on_line)
            tags[_pair(int(hi), m)] = (code, on_line)
    return tags


def _split_segments(mesh: Mesh, midpoint_of: IntArray) -> tuple[BoundarySegment, ...]:
    index = _edge_index(mesh.edges)
    out = []
    for segment in mesh.boundary_segments:
        path = [segment.path[0]]
        for a, b in zip(segment.path[:-1], segment.path[1:]):
            m = int(midpoint_of[index[_pair(a, b)]])
            if m >= 0:
                path.append(m)
            path.append(b)
        out.append(BoundarySegment(path=tuple(path), kind=segment.kind))
    return tuple(out)


# =====================================================================
# construction
# =====================================================================
def build_mesh(
    vertices: Sequence[Point] | FloatArray,
    triangles: Sequence[Sequence[int]] | IntArray,
    boundary_segments: Iterable[tuple[Sequence[int], BcKind]] = (),
    line_load_polyline: Sequence[Point] | None = None,
) -> Mesh:
    """
    三角形分割からメッシュを構築する

    時計回りの三角形は向きを反転し、最長辺を局所辺 0（二分割の対象辺）にする。

    Raises:
        DegenerateTriangleError: 面積ゼロの三角形がある
        NonConformingMeshError: ぶら下がり節点、3 要素以上で共有される辺、重なり
        BoundarySegmentError: 境界区間が境界上にない、またはタグのない境界辺がある
        LineLoadCoverageError: 線荷重の折れ線が内部辺で覆われていない
    """
    verts = np.asarray(vertices, dtype=float).reshape(-1, 2)
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if not np.isfinite(verts).all():
        raise MeshError("Vertex coordinates must be finite")
    if len(tris) == 0:
        raise MeshError("Mesh has no triangles")
    if tris.min() < 0 or tris.max() >= len(verts):
        raise MeshError("Triangle refers to an unknown vertex")
    if (
        (tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])
    ).any():
        raise DegenerateTriangleError("Triangle with repeated vertices")

    areas = _signed_areas(verts, tris)
    scale = max(1.0, float(np.abs(verts).max())) ** 2
    degenerate = np.abs(areas) <= _GEOM_TOL * scale
    if degenerate.any():
        raise DegenerateTriangleError(
            f"Triangle {int(np.flatnonzero(degenerate)[0])} has zero area"
        )
    clockwise = areas < 0
    if clockwise.any():
        logger.debug("reoriented clockwise triangles count=%d", int(clockwise.sum()))
        tris = tris.copy()
        tris[clockwise] = tris[clockwise][:, [0, 2, 1]]
    tris = _label_longest_edge(verts, tris)

    edges, triangle_edges, edge_triangles = _connect(tris, len(verts))
    boundary = np.flatnonzero(edge_triangles[:, 1] < 0)
    _check_hanging_vertices(verts, edges, boundary)

    index = _edge_index(edges)
    interior = EDGE_TAG_CODES[EdgeTag.INTERIOR]
    edge_tags = np.full(len(edges), interior, dtype=np.int64)
    segments = []
    for path, kind in boundary_segments:
        path = tuple(int(v) for v in path)
        segment = BoundarySegment(path=path, kind=BcKind(kind))
        code = EDGE_TAG_CODES[EdgeTag.from_bc(segment.kind)]
        for a, b in zip(path[:-1], path[1:]):
            e = index.get(_pair(a, b))
            if e is None or edge_triangles[e, 1] >= 0:
                raise BoundarySegmentError(
                    f"Segment step ({a}, {b}) of {segment.kind.value} boundary "
                    "is not a boundary edge"
                )
            if edge_tags[e] not in (interior, code):
                raise BoundarySegmentError(
                    f"Boundary edge ({a}, {b}) is assigned two different conditions"
                )
            edge_tags[e] = code
        segments.append(segment)

    untagged = boundary[edge_tags[boundary] == interior]
    if len(untagged):
        raise BoundarySegmentError(
            f"{len(untagged)} boundary edges carry no boundary condition, "
            f"first: {edges[untagged[0]].tolist()}"
        )

    on_line = np.zeros(len(edges), dtype=bool)
    polyline = None
    if line_load_polyline is not None:
        polyline = tuple((float(x), float(y)) for x, y in line_load_polyline)
        if len(polyline) < 2:
            raise LineLoadCoverageError("Line-load polyline needs at least two points")
        pts = np.asarray(polyline)
        for p, q in zip(pts[:-1], pts[1:]):
            covered = edges_on_segment(verts, edges, p, q)
            length = float(
                np.linalg.norm(verts[edges[covered, 1]] - verts[edges[covered, 0]], axis=1).sum()
            )
            if not np.isclose(length, np.linalg.norm(q - p), rtol=1e-10, atol=1e-12):
                raise LineLoadCoverageError(
                    f"Line-load segment {p.tolist()} -> {q.tolist()} is not covered by mesh edges"
                )
            if (edge_triangles[covered, 1] < 0).any():
                raise LineLoadCoverageError(
                    f"Line-load segment {p.tolist()} -> {q.tolist()} runs along the boundary"
                )
            on_line[covered] = True

    mesh = Mesh(
        vertices=verts,
        triangles=tris,
        edges=edges,
        triangle_edges=triangle_edges,
        edge_triangles=edge_triangles,
        edge_tags=edge_tags,
        edge_on_line_load=on_line,
        boundary_segments=tuple(segments),
        line_load_polyline=polyline,
    )
    logger.debug(
        "built mesh vertices=%d edges=%d triangles=%d min_angle=%.2f",
        mesh.n_vertices,
        mesh.n_edges,
        mesh.n_triangles,
        mesh.min_angle,
    )
    return mesh


# =====================================================================
# refinement
# =====================================================================
def refine_uniform_red(mesh: Mesh) -> Mesh:
    """各三角形を辺の中点で相似な 4 つに分割する"""
    n_v = mesh.n_vertices
    midpoint_of = n_v + np.arange(mesh.n_edges)
    vertices = np.vstack([mesh.vertices, mesh.edge_midpoints])

    a, b, c = mesh.triangles.T
    m_ab, m_bc, m_ca = (midpoint_of[mesh.triangle_edges[:, i]] for i in range(3))
    # 子の局所辺 0 は親の局所辺 0 の半分（ラベルが相似に保たれる）
    children = np.stack(
        [
            np.column_stack([a, m_ab, m_ca]),
            np.column_stack([m_ab, b, m_bc]),
            np.column_stack([m_ca, m_bc, c]),
            np.column_stack([m_bc, m_ca, m_ab]),
        ],
        axis=1,
    ).reshape(-1, 3)

    refined = _assemble(
        vertices,
        children,
        _inherited_tags(mesh, midpoint_of),
        _split_segments(mesh, midpoint_of),
        mesh.line_load_polyline,
    )
    logger.debug("red refinement triangles=%d->%d", mesh.n_triangles, refined.n_triangles)
    return refined


def refine_marked(mesh: Mesh, marked: Iterable[int]) -> Mesh:
    """
    最新頂点二分割による適合細分化

    マークされた三角形は 3 辺すべてを分割対象にし（4 分割）、
    分割対象の辺を持つ三角形はその対象辺も分割する閉包を取る。
    """
    marked_ids = np.array(sorted({int(t) for t in marked}), dtype=np.int64)
    if len(marked_ids) == 0:
        return mesh
    if marked_ids[0] < 0 or marked_ids[-1] >= mesh.n_triangles:
        raise MeshError("Marked triangle id out of range")

    edge_marked = np.zeros(mesh.n_edges, dtype=bool)
    edge_marked[mesh.triangle_edges[marked_ids].ravel()] = True
    while True:
        touched = edge_marked[mesh.triangle_edges].any(axis=1)
        missing = touched & ~edge_marked[mesh.triangle_edges[:, 0]]
        if not missing.any():
            break
        edge_marked[mesh.triangle_edges[missing, 0]] = True

    split_edges = np.flatnonzero(edge_marked)
    midpoint_of = np.full(mesh.n_edges, -1, dtype=np.int64)
    midpoint_of[split_edges] = mesh.n_vertices + np.arange(len(split_edges))
    vertices = np.vstack([mesh.vertices, mesh.edge_midpoints[split_edges]])
    index = _edge_index(mesh.edges)

    def bisect(tri: tuple[int, int, int]) -> list[tuple[int, int, int]]:
        a, b, c = tri
        e = index.get(_pair(a, b))
        if e is None or not edge_marked[e]:
            return [tri]
        m = int(midpoint_of[e])
        return bisect((c, a, m)) + bisect((b, c, m))

    children: list[tuple[int, int, int]] = []
    for tri in mesh.triangles:
        children.extend(bisect((int(tri[0]), int(tri[1]), int(tri[2]))))

    refined = _assemble(
        vertices,
        np.array(children, dtype=np.int64),
        _inherited_tags(mesh, midpoint_of),
        _split_segments(mesh, midpoint_of),
        mesh.line_load_polyline,
    )
    logger.debug(
        "bisection marked=%d split_edges=%d triangles=%d->%d",
        len(marked_ids),
        len(split_edges),
        mesh.n_triangles,
        refined.n_triangles,
    )
    return refined


def mesh_statistics(mesh: Mesh) -> MeshStatistics:
    return mesh.statistics()


# =====================================================================
# point location
# =====================================================================
def locate_points(mesh: Mesh, points: FloatArray, strict: bool = True) -> IntArray:
    """
    各点を含む要素の ID（共有辺・頂点上の点は番号の最も小さい要素）

    strict=False のとき領域外の点は -1。

    Raises:
        PointLocationError: どの要素にも含まれない点がある
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    p = mesh.vertices[mesh.triangles]
    origin = p[:, 0]
    jac = np.stack([p[:, 1] - origin, p[:, 2] - origin], axis=2)  # (T, 2, 2)
    inv = np.linalg.inv(jac)
    tol = 1e-10

    owner = np.full(len(pts), -1, dtype=np.int64)
    for start in range(0, len(pts), _LOCATE_CHUNK):
        chunk = pts[start : start + _LOCATE_CHUNK]
        rel = chunk[:, None, :] - origin[None, :, :]
        lam = np.einsum("tij,ptj->pti", inv, rel)
        inside = (lam >= -tol).all(axis=2) & (lam.sum(axis=2) <= 1 + tol)
        found = inside.any(axis=1)
        owner[start : start + len(chunk)] = np.where(found, inside.argmax(axis=1), -1)

    if strict and (owner < 0).any():
        bad = int(np.flatnonzero(owner < 0)[0])
        raise PointLocationError(f"Point {pts[bad].tolist()} lies outside the mesh")
    return owner


# =====================================================================
# structured grids for the built-in cases
# =====================================================================
def rectangle_grid(
    nx: int,
    ny: int,
    x_range: tuple[float, float] = (0.0, 1.0),
    y_range: tuple[float, float] = (0.0, 1.0),
    keep_cell=None,
    crossed: bool = False,
) -> tuple[FloatArray, IntArray]:
    """
    構造格子の三角形分割

    対角線は左下から右上。crossed=True のときは各象限の対角線が矩形の中心へ向かう。
    keep_cell(i, j) が False のセルは除き、使われない頂点は番号を詰める。
    """
    xs = np.linspace(*x_range, nx + 1)
    ys = np.linspace(*y_range, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i: int, j: int) -> int:
        return j * (nx + 1) + i

    triangles = []
    for j in range(ny):
        for i in range(nx):
            if keep_cell is not None and not keep_cell(i, j):
                continue
            p00, p10, p01, p11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            if crossed and (2 * i < nx) != (2 * j < ny):
                triangles.append((p00, p10, p01))
                triangles.append((p10, p11, p01))
            else:
                triangles.append((p00, p10, p11))
                triangles.append((p00, p11, p01))
    tris = np.array(triangles, dtype=np.int64)

    used = np.unique(tris)
    renumber = np.full(len(vertices), -1, dtype=np.int64)
    renumber[used] = np.arange(len(used))
    return vertices[used], renumber[tris]


def path_along(vertices: FloatArray, corners: Sequence[Point]) -> list[int]:
    """折れ線 corners 上にある頂点を順にたどった頂点列"""
    verts = np.asarray(vertices, dtype=float)
    scale = max(1.0, float(np.abs(verts).max()))
    path: list[int] = []
    for p, q in zip(corners[:-1], corners[1:]):
        p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
        d = q - p
        rel = verts - p
        t = rel @ d / (d @ d)
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / np.linalg.norm(d)
        on = np.flatnonzero((dist <= _GEOM_TOL * scale) & (t >= -_GEOM_TOL) & (t <= 1 + _GEOM_TOL))
        ordered = on[np.argsort(t[on], kind="stable")].tolist()
        if path and ordered and path[-1] == ordered[0]:
            ordered = ordered[1:]
        path.extend(ordered)
    if len(path) < 2:
        raise BoundarySegmentError(f"No mesh vertices found along {list(corners)}")
    return path
