"""CTQW Hamiltonians on planar lattices, with and without a magnetic field.

Matrix entries are indexed ``H[final, initial]``: the hopping amplitude for
``V -> W`` sits at ``H[W, V]``. All builders return dense complex matrices.

Models
------
free
    ``H = -J L`` with ``L = A - D`` the graph Laplacian.
peierls
    Free hopping multiplied by the Peierls phase ``exp(i phi_VW)``; on-site
    energies stay at ``J deg(V)``.
peierls-modified
    Peierls hopping plus the on-site ``q^2 A^2 / 2m`` energy.
discretized
    Hybrid discretisation of ``(p - qA)^2 / 2m``: Taylor Laplacian for the
    kinetic term, Green's-formula gradients for the paramagnetic term.
harmonic
    Free hopping plus the isotropic potential ``q^2 B^2 r^2 / 8m``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ModelError
from .lattice import Lattice, LatticeKind
from .operators import HBAR, HoppingAmplitude, gradient_stencil, hopping_from_js

HERMITICITY_TOL = 1e-12


class ModelKind(str, enum.Enum):
    FREE = "free"
    PEIERLS = "peierls"
    PEIERLS_MODIFIED = "peierls-modified"
    DISCRETIZED = "discretized"
    HARMONIC = "harmonic"

    @property
    def needs_regular_lattice(self) -> bool:
        return self in (ModelKind.PEIERLS_MODIFIED, ModelKind.DISCRETIZED, ModelKind.HARMONIC)


class MagneticLengthWarning(UserWarning):
    """Field strong enough that the magnetic length drops below the lattice constant."""


@dataclass(frozen=True)
class GaugeField:
    """Uniform perpendicular field in the symmetric gauge centred at ``center``."""

    B: float
    center: tuple = (0.0, 0.0)
    q: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.B) or self.B < 0:
            raise ModelError(f"field modulus must be >= 0, got {self.B}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.magnetic_length < 1.0:
            warnings.warn(
                f"magnetic length below lattice constant (B={self.B} > 1)",
                MagneticLengthWarning,
                stacklevel=3,
            )

    @property
    def magnetic_length(self) -> float:
        return math.inf if self.B == 0 else math.sqrt(HBAR / (self.q * self.B))

    def potential(self, x, y):
        return vector_potential(self, x, y)


def vector_potential(field: GaugeField, x, y):
    """``A = (B/2) * (-(y - y_c), x - x_c)``."""
    xc, yc = field.center
    half = field.B / 2
    return -half * (np.asarray(y) - yc), half * (np.asarray(x) - xc)


def peierls_phase(field: GaugeField, r0, r1):
    """``(q/hbar) * int_{r0}^{r1} A . dr`` along the straight segment (trapezoid rule).

    Exact for the symmetric gauge, whose components are affine. ``r0`` and
    ``r1`` may be arrays of shape ``(..., 2)``.
    """
    r0 = np.asarray(r0, dtype=float)
    r1 = np.asarray(r1, dtype=float)
    ax0, ay0 = vector_potential(field, r0[..., 0], r0[..., 1])
    ax1, ay1 = vector_potential(field, r1[..., 0], r1[..., 1])
    dx = r1[..., 0] - r0[..., 0]
    dy = r1[..., 1] - r0[..., 1]
    return field.q / HBAR * 0.5 * (dx * (ax0 + ax1) + dy * (ay0 + ay1))


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    matrix: np.ndarray
    model: ModelKind
    hopping: HoppingAmplitude
    field: GaugeField | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def J(self) -> float:
        return self.hopping.J

    def to_triples(self) -> list:
        """Nonzero entries as ``[row, col, re, im]`` (1-based linear indices)."""
        rows, cols = np.nonzero(self.matrix)
        vals = self.matrix[rows, cols]
        return [[int(r) + 1, int(c) + 1, float(v.real), float(v.imag)] for r, c, v in zip(rows, cols, vals)]


def hermiticity_residual(H) -> float:
    H = H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    return float(np.max(np.abs(H - H.conj().T))) if H.size else 0.0


def default_field(lattice: Lattice, B: float, q: float = 1.0) -> GaugeField:
    """Gauge centred on the central vertex of an odd-sized lattice."""
    from .lattice import center_vertex

    c = center_vertex(lattice)
    return GaugeField(B, tuple(lattice.coords[c.position]), q)


def _resolve_hopping(lattice: Lattice, J) -> HoppingAmplitude:
    if J is None:
        return hopping_from_js(lattice.kind, 1.0, lattice.spec.a)
    if isinstance(J, HoppingAmplitude):
        if LatticeKind(J.kind) is not lattice.kind:
            raise ModelError(f"hopping amplitude is for {J.kind}, lattice is {lattice.kind.value}")
        return J
    # bare float: the hopping energy of this lattice kind
    ref = hopping_from_js(lattice.kind, 1.0, lattice.spec.a)
    return HoppingAmplitude(float(J), lattice.kind, ref.m * ref.J / float(J), lattice.spec.a)


def _check_magnetic(lattice: Lattice, field: GaugeField, model: ModelKind):
    if field is None:
        raise ModelError(f"model {model.value} requires a gauge field")
    if lattice.spec.periodic:
        raise ModelError("magnetic models are not offered with periodic boundaries")
    if model.needs_regular_lattice and lattice.kind.semiregular:
        raise ModelError(f"model {model.value} is not defined on the {lattice.kind.value} lattice")


def _directed_edges(lattice: Lattice):
    pairs, _ = lattice.edges
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return src, dst


def _assemble(n, dst, src, hop_values, diag) -> np.ndarray:
    off = sp.coo_matrix((hop_values, (dst, src)), shape=(n, n))
    H = off.toarray().astype(complex)
    H[np.diag_indices(n)] += diag
    return H


def _finish(H, model, hopping, field) -> HamiltonianMatrix:
    res = hermiticity_residual(H)
    if res > HERMITICITY_TOL * max(1.0, float(np.max(np.abs(H)))):
        raise ModelError(f"{model.value} Hamiltonian is not Hermitian (residual {res:.3e})")
    H = 0.5 * (H + H.conj().T)
    H.setflags(write=False)
    return HamiltonianMatrix(H, model, hopping, field)


def build_free(lattice: Lattice, J=None) -> HamiltonianMatrix:
    hopping = _resolve_hopping(lattice, J)
    src, dst = _directed_edges(lattice)
    H = _assemble(lattice.size, dst, src, np.full(len(src), -hopping.J), hopping.J * lattice.degree)
    return _finish(H, ModelKind.FREE, hopping, None)


def _edge_phases(lattice: Lattice, field: GaugeField, src, dst):
    return peierls_phase(field, lattice.coords[src], lattice.coords[dst])


def onsite_vector_potential_energy(lattice: Lattice, hopping: HoppingAmplitude, field: GaugeField) -> np.ndarray:
    """``q^2 |A_V|^2 / 2m`` at every vertex."""
    ax, ay = vector_potential(field, lattice.x, lattice.y)
    return field.q**2 * (ax**2 + ay**2) / (2 * hopping.m)


def build_peierls(lattice: Lattice, J=None, field: GaugeField = None) -> HamiltonianMatrix:
    hopping = _resolve_hopping(lattice, J)
    _check_magnetic(lattice, field, ModelKind.PEIERLS)
    src, dst = _directed_edges(lattice)
    hops = -hopping.J * np.exp(1j * _edge_phases(lattice, field, src, dst))
    H = _assemble(lattice.size, dst, src, hops, hopping.J * lattice.degree)
    return _finish(H, ModelKind.PEIERLS, hopping, field)


def build_peierls_modified(lattice: Lattice, J=None, field: GaugeField = None) -> HamiltonianMatrix:
    hopping = _resolve_hopping(lattice, J)
    _check_magnetic(lattice, field, ModelKind.PEIERLS_MODIFIED)
    src, dst = _directed_edges(lattice)
    hops = -hopping.J * np.exp(1j * _edge_phases(lattice, field, src, dst))
    diag = hopping.J * lattice.degree + onsite_vector_potential_energy(lattice, hopping, field)
    H = _assemble(lattice.size, dst, src, hops, diag)
    return _finish(H, ModelKind.PEIERLS_MODIFIED, hopping, field)


def build_discretized(lattice: Lattice, J=None, field: GaugeField = None) -> HamiltonianMatrix:
    """Hybrid spatial discretisation of ``(p - qA)^2 / 2m``.

    Row ``V`` of ``-(hbar^2/2m) lap + i hbar q/2m (div(A .) + A . grad) + q^2 A^2/2m``
    with the gradient applied to ``A psi`` in product form, so the entry for
    neighbour ``W`` is ``-J + i (hbar q / 2m) g_W . (A_V + A_W)``.
    Missing neighbours at the boundary simply drop out of the row.
    """
    hopping = _resolve_hopping(lattice, J)
    _check_magnetic(lattice, field, ModelKind.DISCRETIZED)
    stencil = gradient_stencil(lattice.kind, lattice.spec.a)
    ax, ay = vector_potential(field, lattice.x, lattice.y)
    scale = HBAR * field.q / (2 * hopping.m)

    rows, cols, vals = [], [], []
    for v in range(lattice.size):
        table = stencil.at(lattice.classes[v])
        for w, label in lattice.neighbors[v]:
            gx, gy = table[label]
            rows.append(v)
            cols.append(w)
            vals.append(-hopping.J + 1j * scale * (gx * (ax[v] + ax[w]) + gy * (ay[v] + ay[w])))
    diag = hopping.J * lattice.degree + onsite_vector_potential_energy(lattice, hopping, field)
    H = _assemble(lattice.size, np.array(rows), np.array(cols), np.array(vals), diag)
    return _finish(H, ModelKind.DISCRETIZED, hopping, field)


def harmonic_potential(lattice: Lattice, hopping: HoppingAmplitude, field: GaugeField) -> np.ndarray:
    xc, yc = field.center
    r2 = (lattice.x - xc) ** 2 + (lattice.y - yc) ** 2
    return field.q**2 * field.B**2 / (8 * hopping.m) * r2


def build_harmonic(lattice: Lattice, J=None, field: GaugeField = None) -> HamiltonianMatrix:
    hopping = _resolve_hopping(lattice, J)
    _check_magnetic(lattice, field, ModelKind.HARMONIC)
    src, dst = _directed_edges(lattice)
    diag = hopping.J * lattice.degree + harmonic_potential(lattice, hopping, field)
    H = _assemble(lattice.size, dst, src, np.full(len(src), -hopping.J), diag)
    return _finish(H, ModelKind.HARMONIC, hopping, field)


BUILDERS = {
    ModelKind.FREE: lambda lattice, J, field: build_free(lattice, J),
    ModelKind.PEIERLS: build_peierls,
    ModelKind.PEIERLS_MODIFIED: build_peierls_modified,
    ModelKind.DISCRETIZED: build_discretized,
    ModelKind.HARMONIC: build_harmonic,
}


def build_hamiltonian(lattice: Lattice, model, J=None, field: GaugeField | None = None) -> HamiltonianMatrix:
    model = ModelKind(model)
    if model is not ModelKind.FREE and field is None:
        field = default_field(lattice, 0.0)
    return BUILDERS[model](lattice, J, field)
