"""Specimen geometry, graded triangulation and rough-boundary perturbation.

Coordinates are millimetres.  Rough-boundary abscissae handed to the surface
sampler are outline arc lengths converted to micrometres, so nodes on distinct
rough edges are separated by at least the length of the edges in between and
their sampled deviations are effectively uncorrelated.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import triangle
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)

UM_PER_MM = 1000.0
COLLAR_FACTOR = 3.0
SMOOTHING_SWEEPS = 20


class GeometryError(ValueError):
    pass


class MeshQualityError(RuntimeError):
    def __init__(self, element: int, area: float):
        super().__init__(f"element {element} inverted after smoothing (area {area:.3e} mm^2)")
        self.element = element
        self.area = area


class Plane(enum.Enum):
    PLANE_STRESS = "plane_stress"
    PLANE_STRAIN = "plane_strain"


class Tag(enum.IntEnum):
    FREE = 0
    LOAD = 1
    FIXED = 2
    ROUGH = 3


@dataclass(frozen=True)
class SpecimenGeometry:
    """Closed counter-clockwise outline with one tag per outline segment.

    Segment ``i`` joins vertex ``i`` to vertex ``i + 1`` (cyclically).
    """

    outline: np.ndarray
    tags: tuple
    plane: Plane = Plane.PLANE_STRESS
    name: str = "custom"

    def __post_init__(self):
        pts = np.asarray(self.outline, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise GeometryError("outline needs at least three 2-D vertices")
        if len(self.tags) != pts.shape[0]:
            raise GeometryError("one tag per outline segment is required")
        if _signed_area(pts) <= 0:
            raise GeometryError("outline must be counter-clockwise with positive area")
        if not _is_simple(pts):
            raise GeometryError("outline self-intersects")
        object.__setattr__(self, "outline", pts)
        object.__setattr__(self, "tags", tuple(Tag(t) for t in self.tags))

    @property
    def n_segments(self) -> int:
        return self.outline.shape[0]

    def segment(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.outline[i], self.outline[(i + 1) % self.n_segments]

    @property
    def rough_edges(self) -> list[int]:
        return [i for i, t in enumerate(self.tags) if t is Tag.ROUGH]

    def segment_lengths(self) -> np.ndarray:
        d = np.roll(self.outline, -1, axis=0) - self.outline
        return np.hypot(d[:, 0], d[:, 1])

    def with_plane(self, plane: Plane) -> "SpecimenGeometry":
        return replace(self, plane=plane)


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _is_simple(pts: np.ndarray) -> bool:
    n = len(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = pts[j], pts[(j + 1) % n]
            d1, d2 = cross(c, d, a), cross(c, d, b)
            d3, d4 = cross(a, b, c), cross(a, b, d)
            if d1 * d2 < 0 and d3 * d4 < 0:
                return False
    return True


def strip_geometry(length: float, width: float, rough: str = "both",
                   plane: Plane = Plane.PLANE_STRESS) -> SpecimenGeometry:
    """Rectangular strip loaded along x: FIXED at x=0, LOAD at x=length.

    ``rough`` selects the lateral edges carrying roughness: ``"both"``,
    ``"bottom"``, ``"top"`` or ``"none"``.
    """
    if rough not in ("both", "bottom", "top", "none"):
        raise GeometryError(f"unknown rough edge selection {rough!r}")
    outline = np.array([[0.0, 0.0], [length, 0.0], [length, width], [0.0, width]])
    bottom = Tag.ROUGH if rough in ("both", "bottom") else Tag.FREE
    top = Tag.ROUGH if rough in ("both", "top") else Tag.FREE
    return SpecimenGeometry(outline, (bottom, Tag.LOAD, top, Tag.FIXED), plane, "strip")


def dogbone_geometry(gauge_length: float = 12.0, gauge_width: float = 5.0,
                     grip_width: float = 10.0, grip_length: float = 10.0,
                     fillet_radius: float = 8.0, fillet_segments: int = 12,
                     plane: Plane = Plane.PLANE_STRESS) -> SpecimenGeometry:
    """Flat dog-bone: straight rough gauge, circular fillets, FIXED/LOAD grip ends.

    The default dimensions approximate a small flat fatigue coupon; they are
    not the dimensions of any particular test programme.
    """
    step = 0.5 * (grip_width - gauge_width)
    if step <= 0:
        raise GeometryError("grip must be wider than the gauge")
    if step > fillet_radius:
        raise GeometryError("fillet radius must be at least the shoulder height")
    # fillet: tangent to the gauge edge, meets the grip edge at angle theta_end
    theta_end = math.acos(1.0 - step / fillet_radius)
    run = fillet_radius * math.sin(theta_end)
    x_g0 = grip_length + run
    x_g1 = x_g0 + gauge_length
    total = x_g1 + run + grip_length
    yb, yt = 0.0, gauge_width
    yb_grip, yt_grip = -step, gauge_width + step

    pts, tags = [], []

    def add(p, t):
        pts.append(p)
        tags.append(t)

    add((0.0, yb_grip), Tag.FREE)              # bottom grip edge
    add((grip_length, yb_grip), Tag.FREE)      # fillet start
    th = np.linspace(theta_end, 0.0, fillet_segments + 1)[1:-1]
    for t in th:
        add((x_g0 - fillet_radius * math.sin(t), yb - fillet_radius * (1 - math.cos(t))), Tag.FREE)
    add((x_g0, yb), Tag.ROUGH)                 # gauge bottom
    add((x_g1, yb), Tag.FREE)
    for t in th[::-1]:
        add((x_g1 + fillet_radius * math.sin(t), yb - fillet_radius * (1 - math.cos(t))), Tag.FREE)
    add((total - grip_length, yb_grip), Tag.FREE)
    add((total, yb_grip), Tag.LOAD)
    add((total, yt_grip), Tag.FREE)
    add((total - grip_length, yt_grip), Tag.FREE)
    for t in th:
        add((x_g1 + fillet_radius * math.sin(t), yt + fillet_radius * (1 - math.cos(t))), Tag.FREE)
    add((x_g1, yt), Tag.ROUGH)                 # gauge top
    add((x_g0, yt), Tag.FREE)
    for t in th[::-1]:
        add((x_g0 - fillet_radius * math.sin(t), yt + fillet_radius * (1 - math.cos(t))), Tag.FREE)
    add((grip_length, yt_grip), Tag.FREE)
    add((0.0, yt_grip), Tag.FIXED)
    return SpecimenGeometry(np.array(pts), tuple(tags), plane, "dogbone")


def mesh_size_rule(corr_length: float, phase_field_length: float) -> float:
    """Boundary element size: one fifth of the smaller resolved length."""
    if not (corr_length > 0 and phase_field_length > 0):
        raise GeometryError("both lengths must be positive")
    return min(corr_length, phase_field_length) / 5.0


def default_interior_size(boundary_size: float, ell: float, ratio: float = 50.0) -> float:
    return min(ratio * boundary_size, ell / 5.0)


@dataclass
class Mesh:
    """Linear triangle mesh with tagged boundary facets.

    ``rough_nodes`` lists the nodes on ROUGH segments in outline arc-length
    order; ``rough_x0`` holds their polished arc-length positions (mm) and
    ``rough_normals`` the outward normals of the polished outline there.
    """

    nodes: np.ndarray
    elements: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    facet_segments: np.ndarray
    plane: Plane = Plane.PLANE_STRESS
    rough_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    rough_x0: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rough_normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    boundary_size: float | None = None

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def areas(self) -> np.ndarray:
        return element_areas(self.nodes, self.elements)

    def tagged_nodes(self, tag: Tag) -> np.ndarray:
        return np.unique(self.facets[self.facet_tags == int(tag)])

    def rough_x0_um(self) -> np.ndarray:
        return self.rough_x0 * UM_PER_MM

    def copy(self) -> "Mesh":
        return replace(self, nodes=self.nodes.copy())


def element_areas(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    p = nodes[elements]
    a = p[:, 1] - p[:, 0]
    b = p[:, 2] - p[:, 0]
    return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((p - a) @ ab) / float(ab @ ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(*(p - proj).T)


class _Sizing:
    def __init__(self, geom: SpecimenGeometry, h_min: float, h_max: float, grading: float):
        self.segs = [geom.segment(i) for i in geom.rough_edges]
        self.h_min, self.h_max, self.grading = h_min, h_max, grading

    def __call__(self, p: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(p)
        if not self.segs:
            return np.full(len(p), self.h_max)
        d = np.min([_point_segment_distance(p, a, b) for a, b in self.segs], axis=0)
        return np.minimum(self.h_max, self.h_min + self.grading * d)


def _discretize_segment(a, b, size_fn, fixed_h: float | None) -> np.ndarray:
    """Points along [a, b) at spacing given by the sizing field."""
    length = float(np.hypot(*(b - a)))
    if fixed_h is not None:
        n = max(1, int(math.ceil(length / fixed_h - 1e-9)))
        t = np.arange(n) / n
    else:
        s = [0.0]
        while s[-1] < length:
            p = a + (b - a) * min(s[-1] / length, 1.0)
            s.append(s[-1] + float(size_fn(p)[0]))
        s = np.array(s)
        if len(s) > 2 and (s[-1] - length) > 0.5 * (s[-1] - s[-2]):
            s = np.append(s[:-2], s[-1])
        t = s[:-1] / s[-1]
    return a + t[:, None] * (b - a)


def build_polished_mesh(geom: SpecimenGeometry, boundary_size: float, interior_size: float,
                        grading: float = 0.25, require_rough: bool = False,
                        max_refinements: int = 12) -> Mesh:
    """Graded unstructured triangulation of the polished specimen.

    ROUGH segments are split uniformly at spacing at most ``boundary_size``;
    the element size then grows linearly with distance from the rough edges
    (slope ``grading``) up to ``interior_size``.
    """
    if not (0 < boundary_size <= interior_size):
        raise GeometryError("need 0 < boundary_size <= interior_size")
    if require_rough and not geom.rough_edges:
        raise GeometryError("roughness requested but the geometry has no ROUGH edge")
    size = _Sizing(geom, boundary_size, interior_size, grading)

    verts, seg_id = [], []
    for i in range(geom.n_segments):
        a, b = geom.segment(i)
        fixed = boundary_size if geom.tags[i] is Tag.ROUGH else None
        pts = _discretize_segment(a, b, size, fixed)
        verts.append(pts)
        seg_id.extend([i] * len(pts))
    verts = np.vstack(verts)
    nv = len(verts)
    segments = np.column_stack([np.arange(nv), (np.arange(nv) + 1) % nv])
    markers = np.array(seg_id) + 1

    pslg = {"vertices": verts, "segments": segments, "segment_markers": markers[:, None]}
    area0 = math.sqrt(3) / 4 * interior_size**2
    try:
        out = triangle.triangulate(pslg, f"pq28Ya{area0:.12g}")
        for _ in range(max_refinements):
            cent = out["vertices"][out["triangles"]].mean(axis=1)
            target = math.sqrt(3) / 4 * size(cent) ** 2
            areas = element_areas(out["vertices"], out["triangles"])
            if np.all(areas <= 1.6 * target):
                break
            out["triangle_max_area"] = target[:, None]
            out = triangle.triangulate(out, "rpq28Ya")
    except Exception as exc:  # triangle raises plain RuntimeError/ValueError
        raise GeometryError(f"meshing failed: {exc}") from exc
    nodes = np.asarray(out["vertices"], dtype=float)
    elems = np.asarray(out["triangles"], dtype=np.int64)
    if elems.size == 0:
        raise GeometryError("meshing produced no elements")
    a = element_areas(nodes, elems)
    flip = a < 0
    elems[flip] = elems[flip][:, [0, 2, 1]]
    if np.any(np.abs(a) <= 1e-300):
        raise GeometryError("degenerate element in triangulation")

    segs = np.asarray(out["segments"], dtype=np.int64)
    seg_marks = np.asarray(out["segment_markers"]).ravel().astype(int) - 1
    keep = seg_marks >= 0
    segs, seg_marks = segs[keep], seg_marks[keep]
    tags = np.array([int(geom.tags[s]) for s in seg_marks], dtype=int)
    mesh = Mesh(nodes, elems, segs, tags, seg_marks, geom.plane, boundary_size=boundary_size)
    _attach_rough_data(mesh, geom)
    return mesh


def structured_strip_mesh(length: float, width: float, nx: int, ny: int,
                          rough: str = "none", plane: Plane = Plane.PLANE_STRESS) -> Mesh:
    """Regular ``nx`` x ``ny`` grid of cells on the strip, two triangles per cell.

    Tags and segment numbering follow :func:`strip_geometry`.
    """
    if nx < 1 or ny < 1:
        raise GeometryError("nx and ny must be >= 1")
    geom = strip_geometry(length, width, rough, plane)
    xs = np.linspace(0.0, length, nx + 1)
    ys = np.linspace(0.0, width, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    c, d = idx[1:, 1:].ravel(), idx[1:, :-1].ravel()
    elems = np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    edges = [np.column_stack([idx[0, :-1], idx[0, 1:]]),
             np.column_stack([idx[:-1, -1], idx[1:, -1]]),
             np.column_stack([idx[-1, 1:], idx[-1, :-1]]),
             np.column_stack([idx[1:, 0], idx[:-1, 0]])]
    facets = np.vstack(edges).astype(np.int64)
    segs = np.concatenate([np.full(len(e), i) for i, e in enumerate(edges)])
    tags = np.array([int(geom.tags[s]) for s in segs], dtype=int)
    h = min(length / nx, width / ny)
    mesh = Mesh(nodes, elems.astype(np.int64), facets, tags, segs, plane, boundary_size=h)
    _attach_rough_data(mesh, geom)
    return mesh


def _attach_rough_data(mesh: Mesh, geom: SpecimenGeometry) -> None:
    lengths = geom.segment_lengths()
    starts = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    ids, arc, normals = [], [], []
    for i in geom.rough_edges:
        a, b = geom.segment(i)
        t = (b - a) / lengths[i]
        nrm = np.array([t[1], -t[0]])  # outward for a CCW outline
        nodes_i = np.unique(mesh.facets[mesh.facet_segments == i])
        s = (mesh.nodes[nodes_i] - a) @ t
        ids.append(nodes_i)
        arc.append(starts[i] + s)
        normals.append(np.tile(nrm, (len(nodes_i), 1)))
    if not ids:
        return
    ids = np.concatenate(ids)
    arc = np.concatenate(arc)
    normals = np.concatenate(normals)
    # a vertex shared by two rough segments appears twice: average its normal
    order = np.argsort(arc, kind="stable")
    ids, arc, normals = ids[order], arc[order], normals[order]
    uniq, first, inv = np.unique(ids, return_index=True, return_inverse=True)
    nsum = np.zeros((len(uniq), 2))
    np.add.at(nsum, inv, normals)
    nsum /= np.linalg.norm(nsum, axis=1)[:, None]
    sel = np.sort(first)
    mesh.rough_nodes = ids[sel]
    mesh.rough_x0 = arc[sel]
    mesh.rough_normals = nsum[np.searchsorted(uniq, ids[sel])]


def _node_neighbours(elements: np.ndarray, n_nodes: int) -> list[np.ndarray]:
    e = elements
    pairs = np.vstack([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
    pairs = np.vstack([pairs, pairs[:, ::-1]])
    pairs = np.unique(pairs, axis=0)
    splits = np.searchsorted(pairs[:, 0], np.arange(n_nodes + 1))
    return [pairs[splits[i]:splits[i + 1], 1] for i in range(n_nodes)]


def perturb_boundary(mesh: Mesh, profile) -> Mesh:
    """Offset ROUGH boundary nodes by ``z`` (um) along the polished outward normal.

    Nodes within ``3 * max|z|`` of the rough boundary follow with a linearly
    decaying share of the nearest rough node's offset (boundary nodes only
    slide along their own edge); if any element still inverts, up to 20
    Laplacian sweeps relax the collar.  Connectivity is never changed.
    """
    x0 = mesh.rough_x0_um()
    z = np.asarray(profile.z, dtype=float)
    if z.shape != x0.shape or not np.allclose(np.asarray(profile.x0), x0, rtol=0, atol=1e-6):
        raise GeometryError("profile abscissae do not match the rough boundary nodes")
    out = mesh.copy()
    if z.size == 0 or not np.any(z):
        return out
    disp = (z / UM_PER_MM)[:, None] * mesh.rough_normals
    zmax = float(np.max(np.abs(z))) / UM_PER_MM
    radius = COLLAR_FACTOR * zmax

    rough = mesh.rough_nodes
    tree = cKDTree(mesh.nodes[rough])
    dist, nearest = tree.query(mesh.nodes, distance_upper_bound=radius)
    inside = np.isfinite(dist)
    inside[rough] = False
    boundary = np.zeros(mesh.n_nodes, dtype=bool)
    boundary[mesh.facets.ravel()] = True

    new = out.nodes
    new[rough] += disp
    collar = np.nonzero(inside)[0]
    w = (1.0 - dist[collar] / radius)[:, None]
    d_collar = w * disp[nearest[collar]]
    on_bnd = boundary[collar]
    if np.any(on_bnd):
        tangents = _boundary_tangents(mesh)
        idx = collar[on_bnd]
        t = tangents[idx]
        d_collar[on_bnd] = np.sum(d_collar[on_bnd] * t, axis=1)[:, None] * t
    new[collar] += d_collar

    areas = element_areas(new, mesh.elements)
    if np.any(areas <= 0):
        movable = collar[~on_bnd]
        nbrs = _node_neighbours(mesh.elements, mesh.n_nodes)
        for _ in range(SMOOTHING_SWEEPS):
            for i in movable:
                new[i] = new[nbrs[i]].mean(axis=0)
            areas = element_areas(new, mesh.elements)
            if np.all(areas > 0):
                break
    if np.any(areas <= 0):
        worst = int(np.argmin(areas))
        raise MeshQualityError(worst, float(areas[worst]))
    return out


def _boundary_tangents(mesh: Mesh) -> np.ndarray:
    t = np.zeros((mesh.n_nodes, 2))
    p = mesh.nodes[mesh.facets]
    d = p[:, 1] - p[:, 0]
    d /= np.linalg.norm(d, axis=1)[:, None]
    # corner nodes (tangents disagree) get zero: they do not slide
    for k in (0, 1):
        np.add.at(t, mesh.facets[:, k], d)
    norm = np.linalg.norm(t, axis=1)
    ok = norm > 1.9
    t[ok] /= norm[ok][:, None]
    t[~ok] = 0.0
    return t


@dataclass(frozen=True)
class QualityReport:
    min_edge: float
    max_edge: float
    min_area: float
    min_angle_deg: float
    n_nodes: int
    n_elements: int


def quality_report(mesh: Mesh) -> QualityReport:
    p = mesh.nodes[mesh.elements]
    edges = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
    lens = np.linalg.norm(edges, axis=2)
    # interior angle at vertex k lies between the edges leaving and entering it
    angles = []
    for k in range(3):
        u = -edges[:, (k + 2) % 3]
        v = edges[:, k]
        c = np.sum(u * v, axis=1) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles.append(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
    return QualityReport(float(lens.min()), float(lens.max()), float(mesh.areas().min()),
                         float(np.min(angles)), mesh.n_nodes, mesh.n_elements)


def rough_edge_spacing(mesh: Mesh) -> float:
    """Largest distance between consecutive rough nodes on the same segment."""
    if mesh.rough_nodes.size < 2:
        return 0.0
    mask = mesh.facet_tags == int(Tag.ROUGH)
    p = mesh.nodes[mesh.facets[mask]]
    return float(np.max(np.linalg.norm(p[:, 1] - p[:, 0], axis=1)))


def write_mesh(mesh: Mesh, path) -> None:
    """Plain-text mesh: node, element and facet tables."""
    tag_names = {int(t): t.name for t in Tag}
    with open(path, "w") as fh:
        fh.write("# roughfat mesh v1 (coordinates in mm)\n")
        fh.write(f"plane {mesh.plane.value}\n")
        fh.write(f"nodes {mesh.n_nodes}\n")
        for i, (x, y) in enumerate(mesh.nodes):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
        fh.write(f"elements {mesh.n_elements}\n")
        for i, (a, b, c) in enumerate(mesh.elements):
            fh.write(f"{i} {a} {b} {c}\n")
        fh.write(f"facets {len(mesh.facets)}\n")
        for (a, b), t, s in zip(mesh.facets, mesh.facet_tags, mesh.facet_segments):
            fh.write(f"{a} {b} {tag_names[int(t)]} {s}\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.startswith("#")]
    it = iter(lines)
    plane = Plane(next(it)[1])
    n = int(next(it)[1])
    nodes = np.array([[float(v) for v in next(it)[1:3]] for _ in range(n)])
    m = int(next(it)[1])
    elems = np.array([[int(v) for v in next(it)[1:4]] for _ in range(m)], dtype=np.int64)
    f = int(next(it)[1])
    rows = [next(it) for _ in range(f)]
    facets = np.array([[int(r[0]), int(r[1])] for r in rows], dtype=np.int64).reshape(-1, 2)
    tags = np.array([int(Tag[r[2]]) for r in rows], dtype=int)
    segs = np.array([int(r[3]) for r in rows], dtype=int)
    return Mesh(nodes, elems, facets, tags, segs, plane)


def write_vtk(mesh: Mesh, path, point_data: dict | None = None,
              cell_data: dict | None = None, title: str = "roughfat") -> None:
    """Legacy ASCII VTK unstructured grid, readable by ParaView/VisIt."""
    with open(path, "w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_nodes} double\n")
        for x, y in mesh.nodes:
            fh.write(f"{float(x)!r} {float(y)!r} 0.0\n")
        fh.write(f"CELLS {mesh.n_elements} {4 * mesh.n_elements}\n")
        for a, b, c in mesh.elements:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {mesh.n_elements}\n")
        fh.write("5\n" * mesh.n_elements)
        for header, data, count in (("POINT_DATA", point_data, mesh.n_nodes),
                                    ("CELL_DATA", cell_data, mesh.n_elements)):
            if not data:
                continue
            fh.write(f"{header} {count}\n")
            for name, values in data.items():
                values = np.asarray(values, dtype=float)
                if values.ndim == 2:
                    fh.write(f"VECTORS {name} double\n")
                    for v in values:
                        fh.write(f"{float(v[0])!r} {float(v[1])!r} 0.0\n")
                else:
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    fh.write("\n".join(repr(float(v)) for v in values) + "\n")
