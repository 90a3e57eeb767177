"""Exception types shared across the package."""


class SgfemError(Exception):
    """Base class for all package errors."""


class NonConvergence(SgfemError):
    """Closest-point iteration failed near a degenerate level set."""


class DegenerateCut(SgfemError):
    """Interface passes through element geometry in a way the cut
    decomposition cannot resolve at the configured depth."""


class OutOfDomain(SgfemError):
    """Point lies outside the closed computational domain."""


class UnsupportedOrder(SgfemError):
    """Requested quadrature order is not available."""


class SolverFailure(SgfemError):
    """Linear solve broke down or left a residual above tolerance."""


class InfeasibleBounds(SgfemError):
    """Lower control bound exceeds the upper bound at an evaluated point."""


class NonPositiveError(SgfemError):
    """Convergence-order computation received a non-positive error."""


class IncompatibleMeshes(SgfemError):
    """Reference and coarse discretizations cannot be compared."""


class ConfigError(SgfemError):
    """Invalid run configuration."""
