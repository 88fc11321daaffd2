"""Exception hierarchy shared by all adiabaton modules.

Every error carries a stable machine-readable ``code`` so the CLI can map
failures onto structured error records and exit statuses.
"""

from __future__ import annotations


class AdiabatonError(Exception):
    """Base class for all package errors."""

    code = "ERROR"


class InvalidEnvelope(AdiabatonError):
    """Envelope specification violates its invariants."""

    code = "INVALID_ENVELOPE"


class InvalidGrid(AdiabatonError):
    """Grid or medium specification violates its invariants."""

    code = "INVALID_GRID"


class DegeneratePulse(AdiabatonError):
    """Pulse metrics requested for an identically zero envelope."""

    code = "DEGENERATE_PULSE"


class SolverError(AdiabatonError):
    """Base class for direct-solver failures."""

    code = "SOLVER_ERROR"


class NonUnitary(SolverError):
    """Atomic-amplitude norm drifted beyond tolerance (tau grid too coarse)."""

    code = "NON_UNITARY"


class NonFinite(SolverError):
    """NaN or infinity encountered during integration."""

    code = "NON_FINITE"


class Blowup(SolverError):
    """Field amplitude exceeded the configured guard value."""

    code = "BLOWUP"


class WindowTooSmall(SolverError):
    """Probe envelope does not decay below threshold at the window edges."""

    code = "WINDOW_TOO_SMALL"


class WindowExceeded(AdiabatonError):
    """A characteristic curve leaves the retarded-time window."""

    code = "WINDOW_EXCEEDED"


class MultivaluedError(AdiabatonError):
    """Characteristics have crossed; the transported angle is multivalued."""

    code = "MULTIVALUED"


class NoRoot(AdiabatonError):
    """Back-traced characteristic has no admissible entry time."""

    code = "NO_ROOT"


class Infeasible(AdiabatonError):
    """Target probe amplitude exceeds the total-conversion bound."""

    code = "INFEASIBLE_TARGET"


class CrossedCharacteristics(AdiabatonError):
    """Inverse design requires characteristics that cross before the exit."""

    code = "CROSSED_CHARACTERISTICS"


class NonConvergent(AdiabatonError):
    """Refinement study errors failed to decrease."""

    code = "NON_CONVERGENT"


class ParseError(AdiabatonError):
    """Config document is not syntactically valid."""

    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(AdiabatonError):
    """Config document is well-formed but violates the schema."""

    code = "VALIDATION_ERROR"

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class IoError(AdiabatonError):
    """Result persistence failed."""

    code = "IO_ERROR"
