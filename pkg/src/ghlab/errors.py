"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands act on different numbers of qubits."""


class DegenerateGeometryError(ValueError):
    """Lattice dimensions too small to host a plaquette column or a logical string."""


class SectorNotFoundError(RuntimeError):
    """Requested symmetry sector is absent from the computed ground space."""


class LogicalDestroyedError(RuntimeError):
    """A noise operator anticommutes with a logical operator."""


class TooLargeError(ValueError):
    """Problem size exceeds the exact-computation cap."""
