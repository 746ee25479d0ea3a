"""Exception hierarchy.

The CLI maps :class:`ConfigError` to exit code 1 and every other
:class:`DiracVacError` (failed invariants and numerical breakdowns such as
unconverged quadrature) to exit code 2.
"""


class DiracVacError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(DiracVacError, ValueError):
    """Invalid parameters, cutoffs or configuration documents."""


class InvariantError(DiracVacError):
    """A checked physical or numerical invariant was violated."""


class RootFindingError(DiracVacError):
    def __init__(self, index, message="dispersion bracket not found"):
        self.index = index
        super().__init__(f"mode {index}: {message}")


class DegeneracyError(InvariantError):
    def __init__(self, pair, gap):
        self.pair = pair
        self.gap = gap
        super().__init__(f"modes {pair[0]} and {pair[1]} are degenerate (gap {gap:.3e})")


class MatchingError(DiracVacError):
    """Lattice eigenvalues could not be matched one-to-one to basis energies."""


class QuadratureError(DiracVacError):
    def __init__(self, pair, error_estimate):
        self.pair = pair
        self.error_estimate = error_estimate
        super().__init__(
            f"quadrature for element {pair} did not converge "
            f"(error estimate {error_estimate:.3e})"
        )


class TableMissingError(DiracVacError, KeyError):
    """A matrix element needed by a sum is not stored in the table."""


class AdiabaticError(DiracVacError):
    """No perturbed eigenstate overlaps the unperturbed vacuum strongly enough."""
