"""Discrete differential operators on planar lattice graphs.

Laplacians come from second-order Taylor expansion over the nearest
neighbours; first derivatives come from the discrete Green's formulae,
i.e. a trapezoid-rule contour integral along the closed path through the
nearest neighbours divided by the enclosed area. Stencils are stored as
direction-labelled coefficient tables so the same object can act on real
test fields and assemble complex Hamiltonians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import UnsupportedStencil
from .lattice import NEIGHBOR_OFFSETS, Lattice, LatticeKind, VertexClass, polygon_area

HBAR = 1.0


def _require_regular(kind: LatticeKind) -> LatticeKind:
    kind = LatticeKind(kind)
    if kind.semiregular:
        raise UnsupportedStencil(
            f"{kind.value}: hopping directions are not symmetric, no finite-difference stencil is defined"
        )
    return kind


def _classes(kind: LatticeKind):
    if kind is LatticeKind.HONEYCOMB:
        return (VertexClass.WHITE_CIRCLE, VertexClass.BLACK_CIRCLE)
    return (VertexClass.EQUIVALENT,)


@dataclass(frozen=True)
class LaplacianStencil:
    """``lap f_V = neighbor_coeff * sum_W f_W + center_coeff * f_V``."""

    kind: LatticeKind
    neighbor_coeff: float
    center_coeff: float
    degree: int

    def apply_at(self, f_v, f_neighbors):
        return self.neighbor_coeff * (np.sum(f_neighbors) - len(f_neighbors) * f_v)


def laplacian_stencil(kind, a: float = 1.0) -> LaplacianStencil:
    """Second-order Taylor Laplacian with unit weights on every neighbour.

    With equal weights the first-order terms cancel and the second-order
    terms reduce to ``(1/2) sum_W (d_W . grad)^2 f``; for the three regular
    tessellations the neighbour second moments are isotropic, so the
    prefactor is ``2 / sum_W dx_W^2``.
    """
    kind = _require_regular(kind)
    offsets = np.array(list(NEIGHBOR_OFFSETS[(kind, _classes(kind)[0])].values())) * a
    sxx = float(np.sum(offsets[:, 0] ** 2))
    syy = float(np.sum(offsets[:, 1] ** 2))
    sxy = float(np.sum(offsets[:, 0] * offsets[:, 1]))
    assert abs(sxx - syy) < 1e-12 * sxx and abs(sxy) < 1e-12 * sxx
    coeff = 2.0 / sxx
    degree = len(offsets)
    return LaplacianStencil(kind, coeff, -degree * coeff, degree)


@dataclass(frozen=True)
class GradientStencil:
    """Per-class, per-direction ``(d/dx, d/dy)`` coefficients.

    ``coefficients[cls][label] = (cx, cy)`` so that
    ``df/dx at V = sum_W cx_W f_W``; the coefficient of ``f_V`` is zero for
    every regular tessellation. Honeycomb tables differ between the two
    vertex classes by the sign of the ``d/dy`` column.
    """

    kind: LatticeKind
    coefficients: dict
    cell_area: float

    def at(self, cls: VertexClass) -> dict:
        return self.coefficients[cls]


def _contour(offsets: dict) -> list:
    # Closed path through the neighbours, counter-clockwise.
    return sorted(offsets.items(), key=lambda item: math.atan2(item[1][1], item[1][0]) % (2 * math.pi))


def gradient_stencil(kind, a: float = 1.0) -> GradientStencil:
    kind = _require_regular(kind)
    tables = {}
    area = None
    for cls in _classes(kind):
        path = _contour(NEIGHBOR_OFFSETS[(kind, cls)])
        pts = np.array([off for _, off in path]) * a
        omega = polygon_area(pts)
        area = omega if area is None else area
        n = len(path)
        coeffs = {}
        for i, (label, _) in enumerate(path):
            nxt, prv = pts[(i + 1) % n], pts[i - 1]
            # trapezoid rule: f_i enters the two sides meeting at node i
            int_f_dy = (nxt[1] - prv[1]) / 2
            int_f_dx = (nxt[0] - prv[0]) / 2
            coeffs[label] = (int_f_dy / omega, -int_f_dx / omega)
        tables[cls] = dict(sorted(coeffs.items()))
    return GradientStencil(kind, tables, area)


def cell_area(kind, a: float = 1.0) -> float:
    """Area enclosed by the Green's-formula contour through the neighbours."""
    return gradient_stencil(kind, a).cell_area


def apply_gradient(lattice: Lattice, field) -> np.ndarray:
    """``(d/dx, d/dy)`` of a per-vertex field; NaN at boundary vertices."""
    field = _check_field(lattice, field)
    stencil = gradient_stencil(lattice.kind, lattice.spec.a)
    out = np.full((lattice.size, 2), np.nan, dtype=np.result_type(field.dtype, float))
    for v in np.flatnonzero(~lattice.boundary_mask):
        table = stencil.at(lattice.classes[v])
        gx = gy = 0.0
        for w, label in lattice.neighbors[v]:
            cx, cy = table[label]
            gx = gx + cx * field[w]
            gy = gy + cy * field[w]
        out[v] = gx, gy
    return out


def _check_field(lattice: Lattice, field) -> np.ndarray:
    field = np.asarray(field)
    if field.shape != (lattice.size,):
        raise ValueError(f"field has shape {field.shape}, expected ({lattice.size},)")
    return field


def adjacency_matrix(lattice: Lattice, sparse: bool = False):
    pairs, _ = lattice.edges
    n = lattice.size
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    adj = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    return adj if sparse else adj.toarray()


def graph_laplacian_matrix(lattice: Lattice, sparse: bool = False):
    """``L = A - D`` on the finite graph (defined for every lattice kind)."""
    adj = adjacency_matrix(lattice, sparse=True)
    lap = adj - sp.diags(lattice.degree.astype(float))
    return lap.tocsr() if sparse else lap.toarray()


def apply_laplacian(lattice: Lattice, field) -> np.ndarray:
    """Taylor Laplacian; boundary rows use the actual (reduced) degree."""
    field = _check_field(lattice, field)
    stencil = laplacian_stencil(lattice.kind, lattice.spec.a)
    pairs, _ = lattice.edges
    # summed edge differences keep constants exactly in the kernel
    diff = field[pairs[:, 1]] - field[pairs[:, 0]]
    out = np.zeros(lattice.size, dtype=np.result_type(field.dtype, float))
    np.add.at(out, pairs[:, 0], diff)
    np.add.at(out, pairs[:, 1], -diff)
    return stencil.neighbor_coeff * out


@dataclass(frozen=True)
class HoppingAmplitude:
    """Nearest-neighbour hopping energy ``J`` and the walker mass it encodes."""

    J: float
    kind: LatticeKind
    m: float
    a: float = 1.0


def hopping_amplitude(kind, m: float, a: float = 1.0) -> HoppingAmplitude:
    """``J = (hbar^2 / 2m) * c`` with ``c`` the Laplacian neighbour coefficient.

    The truncated-square lattice has no Taylor Laplacian; it is given the
    square-lattice coefficient ``1/a^2``.
    """
    kind = LatticeKind(kind)
    if not (m > 0 and a > 0):
        raise ValueError(f"mass and lattice parameter must be positive (m={m}, a={a})")
    coeff = 1.0 / a**2 if kind.semiregular else laplacian_stencil(kind, a).neighbor_coeff
    return HoppingAmplitude(HBAR**2 / (2 * m) * coeff, kind, m, a)


def hopping_from_js(kind, J_S: float = 1.0, a: float = 1.0) -> HoppingAmplitude:
    """Hopping amplitude for a walker whose square-lattice amplitude is ``J_S``."""
    if not J_S > 0:
        raise ValueError(f"J_S must be positive, got {J_S}")
    return hopping_amplitude(kind, HBAR**2 / (2 * J_S * a**2), a)
