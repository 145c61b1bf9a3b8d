"""Continuous-time quantum walks of a charged particle on planar lattice graphs."""

from .dynamics import (
    FitResult,
    ObservableSeries,
    Propagator,
    WalkerState,
    evolve,
    fit_power_law,
    l1_coherence,
    local_extrema,
    localized_state,
    simulate,
    time_grid,
)
from .errors import LatticeError, ModelError, NumericalGuardError, UnsupportedStencil
from .hamiltonian import GaugeField, HamiltonianMatrix, ModelKind, build_hamiltonian, default_field
from .lattice import Lattice, LatticeKind, LatticeSpec, VertexClass, build_lattice, center_vertex, dual_patches
from .operators import gradient_stencil, hopping_from_js, laplacian_stencil

__version__ = "0.1.0"
