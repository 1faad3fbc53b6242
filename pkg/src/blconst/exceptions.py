"""Exception types shared across the package."""


class BLError(Exception):
    """Base class for all errors raised by blconst."""


class DatumFormatError(BLError, ValueError):
    """Structurally malformed datum input (bad JSON shape, ragged matrices)."""


class InvalidDatumError(BLError, ValueError):
    """A well-formed datum that violates a semantic invariant."""

    def __init__(self, report):
        self.report = report
        msgs = "; ".join(v.message for v in report.violations)
        super().__init__(f"invalid datum: {msgs}")


class DegenerateError(BLError, ArithmeticError):
    """The assembled matrix sum_j p_j L_j^T A_j L_j is (numerically) singular."""

    def __init__(self, message, spectrum=None):
        self.spectrum = spectrum
        super().__init__(message)


class StepFailure(BLError, ArithmeticError):
    """A fixed-point update could not be formed."""


class InfiniteConstantError(BLError):
    """Raised when a solver is asked for a constant already known to be infinite."""

    def __init__(self, verdict):
        self.verdict = verdict
        super().__init__(f"Brascamp-Lieb constant is infinite (certificate: {verdict.describe()})")
