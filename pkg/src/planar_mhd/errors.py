"""Exception hierarchy.

Every error raised on purpose by the package derives from ``PlanarMHDError``
so callers (the CLI in particular) can map families of failures onto exit
codes without catching unrelated exceptions.
"""


class PlanarMHDError(Exception):
    """Base class for all package errors."""


class ParameterError(PlanarMHDError, ValueError):
    """A physical or numerical parameter is out of its admissible range."""


class DomainError(PlanarMHDError, ValueError):
    """A function was evaluated outside its domain (e.g. non-positive density)."""


class ShapeError(PlanarMHDError, ValueError):
    """Array shapes do not match the grid."""


class InputError(PlanarMHDError, ValueError):
    """Inputs are individually valid but mutually inconsistent."""


class RangeError(PlanarMHDError, ValueError):
    """A query point lies outside the represented region."""


class ConfigurationError(PlanarMHDError, ValueError):
    """Initial-data configuration is inadmissible (e.g. bump support too wide)."""


class StateCorruptionError(PlanarMHDError):
    """A state violates a structural invariant such as J > 0."""


class NumericalAbort(PlanarMHDError):
    """A time integration cannot continue."""


class VacuumCollapseError(NumericalAbort):
    """Specific volume fell below the configured floor."""

    def __init__(self, index: int, t: float, J_value: float, J_floor: float):
        self.index = index
        self.t = t
        self.J_value = J_value
        self.J_floor = J_floor
        super().__init__(
            f"J collapsed at node {index}, t={t:.6g}: J={J_value:.3e} <= floor {J_floor:.3e}"
        )


class SolveFailureError(NumericalAbort):
    """The implicit tridiagonal system lost diagonal dominance."""


class CrossingError(PlanarMHDError):
    """The reconstructed flow map is not strictly increasing."""


class ConfigSyntaxError(PlanarMHDError, ValueError):
    """The configuration text is not valid JSON."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class ConfigValidationError(PlanarMHDError, ValueError):
    """A configuration field is missing, unknown or out of range."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class SinkError(PlanarMHDError, OSError):
    """Writing an output artefact failed."""

    def __init__(self, path, reason: str):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")
