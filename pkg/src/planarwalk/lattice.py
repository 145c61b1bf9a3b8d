"""Finite planar lattice graphs.

Vertices are labelled by a pair of polyline indices ``(j, k)`` with
``1 <= j <= n_j`` and ``1 <= k <= n_k`` and by the single linear index
``l = n_k * (j - 1) + k`` (1-based). Internally, arrays are ordered by
``l - 1``; a *position* in this module always means that 0-based offset.

Neighbour edges carry a direction label (``"A"``, ``"B"``, ...). For the
three regular tessellations the labels follow the usual nearest-neighbour
table, e.g. on the square lattice ``A=+x, B=+y, C=-x, D=-y``. The
truncated-square lattice uses ``A`` (horizontal), ``B`` (vertical) and
``C`` (diagonal).
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from .errors import LatticeError

SQRT3 = math.sqrt(3.0)
SQRT2 = math.sqrt(2.0)


class LatticeKind(str, enum.Enum):
    SQUARE = "square"
    TRIANGULAR = "triangular"
    HONEYCOMB = "honeycomb"
    TRUNCATED_SQUARE = "truncated-square"

    @property
    def semiregular(self) -> bool:
        return self is LatticeKind.TRUNCATED_SQUARE

    @property
    def regular(self) -> bool:
        return not self.semiregular

    @property
    def interior_degree(self) -> int:
        return _INTERIOR_DEGREE[self]


_INTERIOR_DEGREE = {
    LatticeKind.SQUARE: 4,
    LatticeKind.TRIANGULAR: 6,
    LatticeKind.HONEYCOMB: 3,
    LatticeKind.TRUNCATED_SQUARE: 3,
}


class VertexClass(str, enum.Enum):
    EQUIVALENT = "equivalent"
    WHITE_CIRCLE = "white-circle"
    BLACK_CIRCLE = "black-circle"
    WHITE_CIRCLE_DOT = "white-circle-dot"
    BLACK_CIRCLE_DOT = "black-circle-dot"

    @property
    def sign(self) -> int:
        """``+1`` for the white honeycomb class, ``-1`` for the black one."""
        if self is VertexClass.WHITE_CIRCLE:
            return 1
        if self is VertexClass.BLACK_CIRCLE:
            return -1
        raise ValueError(f"sign undefined for vertex class {self.value!r}")


def _table(entries):
    return {label: (float(dx), float(dy)) for label, dx, dy in entries}


# Nearest-neighbour offsets in units of the lattice parameter, keyed by the
# class of the starting vertex. Order of insertion is the label order.
NEIGHBOR_OFFSETS = {
    (LatticeKind.SQUARE, VertexClass.EQUIVALENT): _table(
        [("A", 1, 0), ("B", 0, 1), ("C", -1, 0), ("D", 0, -1)]
    ),
    (LatticeKind.TRIANGULAR, VertexClass.EQUIVALENT): _table(
        [
            ("A", 1, 0),
            ("B", 0.5, SQRT3 / 2),
            ("C", -0.5, SQRT3 / 2),
            ("D", -1, 0),
            ("E", -0.5, -SQRT3 / 2),
            ("F", 0.5, -SQRT3 / 2),
        ]
    ),
    (LatticeKind.HONEYCOMB, VertexClass.WHITE_CIRCLE): _table(
        [("A", SQRT3 / 2, -0.5), ("B", -SQRT3 / 2, -0.5), ("C", 0, 1)]
    ),
    (LatticeKind.HONEYCOMB, VertexClass.BLACK_CIRCLE): _table(
        [("A", SQRT3 / 2, 0.5), ("B", -SQRT3 / 2, 0.5), ("C", 0, -1)]
    ),
}


@dataclass(frozen=True)
class LatticeSpec:
    """Size and shape of a finite lattice graph.

    ``periodic`` wraps both index directions and is only accepted for the
    square lattice; the symmetric-gauge vector potential is discontinuous
    across the seam on the other tessellations.
    """

    kind: LatticeKind
    n_j: int
    n_k: int
    a: float = 1.0
    periodic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", LatticeKind(self.kind))
        for name in ("n_j", "n_k"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise LatticeError(f"{name} must be an integer, got {value!r}")
            if value < 3:
                raise LatticeError(f"{name} must be >= 3, got {value}")
            object.__setattr__(self, name, int(value))
        if not (self.a > 0 and math.isfinite(self.a)):
            raise LatticeError(f"lattice parameter must be positive, got {self.a}")
        if self.periodic and self.kind is not LatticeKind.SQUARE:
            raise LatticeError("periodic boundaries are only offered for the square lattice")

    @property
    def size(self) -> int:
        return self.n_j * self.n_k


@dataclass(frozen=True)
class VertexId:
    j: int
    k: int
    linear: int

    @property
    def position(self) -> int:
        return self.linear - 1


def linear_index(spec: LatticeSpec, j: int, k: int) -> int:
    if not (1 <= j <= spec.n_j and 1 <= k <= spec.n_k):
        raise LatticeError(f"vertex ({j}, {k}) outside {spec.n_j}x{spec.n_k} lattice")
    return spec.n_k * (j - 1) + k


def inverse_index(spec: LatticeSpec, l: int) -> tuple[int, int]:
    if not (1 <= l <= spec.size):
        raise LatticeError(f"linear index {l} outside [1, {spec.size}]")
    j, k0 = divmod(l - 1, spec.n_k)
    return j + 1, k0 + 1


def vertex_coordinates(kind: LatticeKind, j, k, a: float = 1.0):
    """Planar coordinates of vertices ``(j, k)``; works on scalars or arrays."""
    j = np.asarray(j)
    k = np.asarray(k)
    if kind is LatticeKind.SQUARE:
        x, y = j * 1.0, k * 1.0
    elif kind is LatticeKind.TRIANGULAR:
        x = j + (1 - np.mod(k, 2)) / 2
        y = SQRT3 * k / 2
    elif kind is LatticeKind.HONEYCOMB:
        x = SQRT3 * j / 2
        delta = np.floor((k - 1) / 2)
        y = k + delta + (1 - np.mod(j, 2)) * (0.5 - np.mod(k, 2))
    elif kind is LatticeKind.TRUNCATED_SQUARE:
        x = np.floor((j + 1) / 2) + np.floor(j / 2) / SQRT2
        delta = SQRT2 * np.floor((k - 1) / 2)
        shifted = (np.mod(j, 2) != np.mod(j, 4)).astype(float)
        y = k + delta + SQRT2 * (0.5 - np.mod(k, 2)) * shifted
    else:  # pragma: no cover
        raise LatticeError(f"unknown lattice kind {kind!r}")
    return a * np.asarray(x, dtype=float), a * np.asarray(y, dtype=float)


def vertex_class(kind: LatticeKind, j: int, k: int) -> VertexClass:
    if kind is LatticeKind.HONEYCOMB:
        return VertexClass.WHITE_CIRCLE if (j + k) % 2 == 0 else VertexClass.BLACK_CIRCLE
    if kind is LatticeKind.TRUNCATED_SQUARE:
        return _TS_CLASSES[(k % 2, j % 4)]
    return VertexClass.EQUIVALENT


_TS_CLASSES = {
    (1, 1): VertexClass.WHITE_CIRCLE_DOT,
    (0, 3): VertexClass.WHITE_CIRCLE_DOT,
    (1, 2): VertexClass.BLACK_CIRCLE,
    (0, 0): VertexClass.BLACK_CIRCLE,
    (1, 3): VertexClass.WHITE_CIRCLE,
    (0, 1): VertexClass.WHITE_CIRCLE,
    (1, 0): VertexClass.BLACK_CIRCLE_DOT,
    (0, 2): VertexClass.BLACK_CIRCLE_DOT,
}


@dataclass(frozen=True, eq=False)
class Lattice:
    """Immutable finite lattice graph.

    Attributes
    ----------
    spec : LatticeSpec
    j, k : ndarray of int
        Polyline indices, ordered by linear index.
    coords : ndarray, shape (N, 2)
        Vertex coordinates in the same length unit as ``spec.a``.
    classes : tuple of VertexClass
    neighbors : tuple of tuple of (int, str)
        Per-vertex ``(position, label)`` pairs, in label order.
    """

    spec: LatticeSpec
    j: np.ndarray
    k: np.ndarray
    coords: np.ndarray
    classes: tuple
    neighbors: tuple
    degree: np.ndarray = field(repr=False)

    @property
    def kind(self) -> LatticeKind:
        return self.spec.kind

    @property
    def size(self) -> int:
        return self.spec.size

    @property
    def x(self) -> np.ndarray:
        return self.coords[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.coords[:, 1]

    def vertex(self, j: int, k: int) -> VertexId:
        return VertexId(j, k, linear_index(self.spec, j, k))

    def vertex_at(self, position: int) -> VertexId:
        j, k = inverse_index(self.spec, position + 1)
        return VertexId(j, k, position + 1)

    @functools.cached_property
    def boundary_mask(self) -> np.ndarray:
        """Vertices with fewer neighbours than an interior vertex."""
        return self.degree < self.kind.interior_degree

    @functools.cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Undirected edges as ``(pairs, labels)`` with ``pairs[:, 0] < pairs[:, 1]``.

        The label is the direction from the first to the second vertex.
        """
        pairs, labels = [], []
        for v, nbrs in enumerate(self.neighbors):
            for w, label in nbrs:
                if v < w:
                    pairs.append((v, w))
                    labels.append(label)
        return np.array(pairs, dtype=int).reshape(-1, 2), np.array(labels, dtype=object)

    def to_dict(self) -> dict:
        pairs, labels = self.edges
        return {
            "kind": self.kind.value,
            "n_j": self.spec.n_j,
            "n_k": self.spec.n_k,
            "a": self.spec.a,
            "periodic": self.spec.periodic,
            "vertices": [
                {
                    "j": int(self.j[p]),
                    "k": int(self.k[p]),
                    "l": p + 1,
                    "x": float(self.coords[p, 0]),
                    "y": float(self.coords[p, 1]),
                    "class": self.classes[p].value,
                }
                for p in range(self.size)
            ],
            "edges": [[int(v) + 1, int(w) + 1, str(lab)] for (v, w), lab in zip(pairs, labels)],
        }


def build_lattice(spec: LatticeSpec) -> Lattice:
    n = spec.size
    jj, kk = np.meshgrid(np.arange(1, spec.n_j + 1), np.arange(1, spec.n_k + 1), indexing="ij")
    j = jj.ravel()
    k = kk.ravel()
    x, y = vertex_coordinates(spec.kind, j, k, spec.a)
    coords = np.column_stack([x, y])
    classes = tuple(vertex_class(spec.kind, int(a), int(b)) for a, b in zip(j, k))

    if spec.kind is LatticeKind.SQUARE:
        neighbors = _square_neighbors(spec, j, k)
    else:
        neighbors = _geometric_neighbors(spec, coords, classes)

    for arr in (j, k, coords):
        arr.setflags(write=False)
    degree = np.array([len(nb) for nb in neighbors], dtype=int)
    degree.setflags(write=False)
    assert len(neighbors) == n
    return Lattice(spec, j, k, coords, classes, neighbors, degree)


def _square_neighbors(spec, j, k):
    steps = [("A", 1, 0), ("B", 0, 1), ("C", -1, 0), ("D", 0, -1)]
    out = []
    for jv, kv in zip(j, k):
        nbrs = []
        for label, dj, dk in steps:
            jw, kw = jv + dj, kv + dk
            if spec.periodic:
                jw = (jw - 1) % spec.n_j + 1
                kw = (kw - 1) % spec.n_k + 1
            elif not (1 <= jw <= spec.n_j and 1 <= kw <= spec.n_k):
                continue
            nbrs.append((spec.n_k * (jw - 1) + kw - 1, label))
        out.append(tuple(nbrs))
    return tuple(out)


def _geometric_neighbors(spec, coords, classes):
    a = spec.a
    tree = cKDTree(coords)
    found = [[] for _ in range(len(coords))]
    for v, w in tree.query_pairs(a * (1 + 1e-6)):
        found[v].append(w)
        found[w].append(v)
    out = []
    for v, nbrs in enumerate(found):
        labelled = [(w, _direction_label(spec.kind, classes[v], (coords[w] - coords[v]) / a)) for w in nbrs]
        labelled.sort(key=lambda item: item[1])
        out.append(tuple(labelled))
    return tuple(out)


def _direction_label(kind, cls, offset) -> str:
    if kind is LatticeKind.TRUNCATED_SQUARE:
        dx, dy = offset
        if abs(dy) < 1e-9:
            return "A"
        if abs(dx) < 1e-9:
            return "B"
        return "C"
    for label, (dx, dy) in NEIGHBOR_OFFSETS[(kind, cls)].items():
        if abs(offset[0] - dx) < 1e-9 and abs(offset[1] - dy) < 1e-9:
            return label
    raise LatticeError(f"unexpected neighbour offset {tuple(offset)} for {kind.value}/{cls.value}")


def center_vertex(lattice: Lattice) -> VertexId:
    n_j, n_k = lattice.spec.n_j, lattice.spec.n_k
    if n_j % 2 == 0 or n_k % 2 == 0:
        raise LatticeError(f"a {n_j}x{n_k} lattice has no central vertex (dimensions must be odd)")
    return lattice.vertex((n_j + 1) // 2, (n_k + 1) // 2)


# --- dual tessellation patches ----------------------------------------------


@dataclass(frozen=True)
class DualPatch:
    """Cell of the dual tessellation attached to one vertex.

    ``clipped`` marks boundary vertices, whose cell is the interior cell of
    the same vertex class cut down to the convex hull of the lattice.
    """

    vertex: VertexId
    polygon: tuple
    clipped: bool = False

    @property
    def area(self) -> float:
        return polygon_area(np.asarray(self.polygon))


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def full_neighbor_offsets(kind: LatticeKind, cls: VertexClass) -> dict:
    """Offsets (units of ``a``) of all neighbours of an interior vertex of a class."""
    if kind is LatticeKind.TRUNCATED_SQUARE:
        return _truncated_square_offsets()[cls]
    return NEIGHBOR_OFFSETS[(kind, cls)]


@functools.lru_cache(maxsize=None)
def _truncated_square_offsets():
    probe = build_lattice(LatticeSpec(LatticeKind.TRUNCATED_SQUARE, 12, 8))
    table = {}
    for p in np.flatnonzero(~probe.boundary_mask):
        cls = probe.classes[p]
        if cls not in table:
            table[cls] = {lab: tuple(probe.coords[w] - probe.coords[p]) for w, lab in probe.neighbors[p]}
    return table


def dual_cell_template(kind: LatticeKind, cls: VertexClass, a: float = 1.0) -> np.ndarray:
    """Counter-clockwise dual cell of an interior vertex, relative to the vertex.

    The corners are the centres of the regular faces meeting at the vertex.
    For two angularly consecutive edges enclosing an angle ``theta`` the face
    is a regular ``n``-gon with ``theta = pi - 2 pi / n`` and its centre lies
    on the bisector at the circumradius ``a / (2 sin(pi / n))``.
    """
    angles = sorted(math.atan2(dy, dx) % (2 * math.pi) for dx, dy in full_neighbor_offsets(kind, cls).values())
    corners = []
    for i, phi in enumerate(angles):
        nxt = angles[(i + 1) % len(angles)]
        theta = (nxt - phi) % (2 * math.pi)
        n_sides = round(2 * math.pi / (math.pi - theta))
        radius = a / (2 * math.sin(math.pi / n_sides))
        bisector = phi + theta / 2
        corners.append((radius * math.cos(bisector), radius * math.sin(bisector)))
    return np.array(corners)


def _clip_convex(poly: np.ndarray, clip: np.ndarray) -> np.ndarray:
    # Sutherland-Hodgman; both polygons counter-clockwise, ``clip`` convex.
    out = poly
    for i in range(len(clip)):
        if len(out) == 0:
            break
        p, q = clip[i], clip[(i + 1) % len(clip)]
        edge = q - p

        def inside(pt):
            return edge[0] * (pt[1] - p[1]) - edge[1] * (pt[0] - p[0]) >= -1e-12

        src, out = out, []
        for s_idx in range(len(src)):
            cur, prev = src[s_idx], src[s_idx - 1]
            cur_in, prev_in = inside(cur), inside(prev)
            if cur_in != prev_in:
                d = cur - prev
                denom = edge[0] * d[1] - edge[1] * d[0]
                t = (edge[1] * (prev[0] - p[0]) - edge[0] * (prev[1] - p[1])) / denom
                out.append(prev + t * d)
            if cur_in:
                out.append(cur)
        out = np.array(out).reshape(-1, 2)
    return _drop_repeated(out)


def _drop_repeated(poly: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    # clipping leaves coincident corners where the cell touches the hull
    keep = []
    for pt in poly:
        if not keep or np.max(np.abs(pt - keep[-1])) > tol:
            keep.append(pt)
    while len(keep) > 1 and np.max(np.abs(keep[0] - keep[-1])) <= tol:
        keep.pop()
    return np.array(keep).reshape(-1, 2)


def dual_patches(lattice: Lattice) -> list[DualPatch]:
    a = lattice.spec.a
    templates = {}
    hull = None
    if lattice.boundary_mask.any():
        ch = ConvexHull(lattice.coords)
        hull = lattice.coords[ch.vertices]
        if polygon_area(hull) < 0:
            hull = hull[::-1]
    patches = []
    for p in range(lattice.size):
        cls = lattice.classes[p]
        if cls not in templates:
            templates[cls] = dual_cell_template(lattice.kind, cls, a)
        poly = templates[cls] + lattice.coords[p]
        clipped = bool(lattice.boundary_mask[p])
        if clipped:
            poly = _clip_convex(poly, hull)
        patches.append(DualPatch(lattice.vertex_at(p), tuple(map(tuple, poly.tolist())), clipped))
    return patches


def patches_to_dict(patches, rho=None) -> list[dict]:
    out = []
    for i, patch in enumerate(patches):
        item = {
            "j": patch.vertex.j,
            "k": patch.vertex.k,
            "l": patch.vertex.linear,
            "polygon": [list(pt) for pt in patch.polygon],
            "clipped": patch.clipped,
        }
        if rho is not None:
            item["rho"] = float(rho[i])
        out.append(item)
    return out
