"""Exception types shared across the package."""


class StackpackError(Exception):
    """Base class for all package errors."""


class MeshFormatError(StackpackError):
    """A mesh file could not be parsed.

    Carries the file path and, when known, the 1-based line number (text
    formats) or byte offset (binary STL) of the offending record.
    """

    def __init__(self, path, message, line=None, byte=None):
        self.path = str(path)
        self.line = line
        self.byte = byte
        where = f"{self.path}"
        if line is not None:
            where += f":{line}"
        elif byte is not None:
            where += f" (byte {byte})"
        super().__init__(f"{where}: {message}")


class MeshValidationError(StackpackError):
    """Mesh contents violate a structural invariant (bad index, empty, NaN)."""


class DegenerateGeometryError(StackpackError):
    """Input points are collinear/coplanar where a 3D hull is required."""


class NoGraspError(StackpackError):
    """The object exposes no top surface to grasp at the given orientation."""


class LpValidationError(StackpackError):
    """Linear program dimensions are inconsistent or coefficients non-finite."""


class IndeterminateStabilityError(StackpackError):
    """The equilibrium LP failed numerically; verdict is neither stable nor unstable."""
