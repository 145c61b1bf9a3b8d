"""Exception types shared across the package."""


class LatticeError(ValueError):
    """Invalid lattice specification, index or vertex."""


class UnsupportedStencil(ValueError):
    """A discrete differential operator is not defined for this lattice kind."""


class ModelError(ValueError):
    """A Hamiltonian model cannot be built for the given lattice or field."""


class NumericalGuardError(RuntimeError):
    """A numerical invariant (Hermiticity, norm) was violated."""
