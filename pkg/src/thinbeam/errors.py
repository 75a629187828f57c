"""Exception hierarchy shared by all thinbeam modules."""


class ThinbeamError(Exception):
    """Base class for all domain errors raised by this package."""


# tensor module
class NotCoercive(ThinbeamError):
    """The elastic tensor is not positive definite on symmetric matrices."""


class InvalidLame(ThinbeamError):
    """Lame parameters outside the admissible range (mu > 0, 2 mu + lambda > 0)."""


# truss module
class DegeneratePair(ThinbeamError):
    """A segment pair with coincident endpoints carries no direction."""


class WrongCount(ThinbeamError):
    """Number of segments does not match dim Skew(d) + d."""


class NeedsReordering(ThinbeamError):
    """The first line must be transversal to the other two; permute and retry."""


class NotParallelTriple(ThinbeamError):
    """The first three lines of the 3D factorization must share one direction."""


class DegenerateProjection(ThinbeamError):
    """A line direction projects to zero in the plane orthogonal to the triple."""


class SingularTruss(ThinbeamError):
    """The truss matrix is numerically singular; the segments under-constrain
    the rigid motion (for instance, all extended lines pass through a point)."""


# beam module
class GridMismatch(ThinbeamError):
    """State and problem grids have different sizes."""


class TrivialProblem(ThinbeamError):
    """Zero fidelity weight makes the minimizer trivial; likely misconfigured."""


class TooLarge(ThinbeamError):
    """Brute-force enumeration is only supported on very small grids."""


# sharp-interface module
class CrackOutsideDomain(ThinbeamError):
    """A crack segment leaves the closure of the strip."""


class InvalidThickness(ThinbeamError):
    """Thickness outside the range where the construction makes sense."""


class BallTooLarge(ThinbeamError):
    """The moving-ball construction requires h^2 well inside the strip."""


# phase-field module
class ShapeMismatch(ThinbeamError):
    """Field arrays have incompatible shapes."""


class SingularSystem(ThinbeamError):
    """No fidelity term and no boundary data: the elastic system is singular."""


# recovery module
class CannotAchieveEta(ThinbeamError):
    """The grid is too coarse to mollify within the requested L2 distance."""


# compactness module
class EmptyRectangle(ThinbeamError):
    """The excluded set covers the whole rectangle."""


class NoSegmentsFound(ThinbeamError):
    """The deterministic scan found no crack-avoiding segments although the
    crack budget permits them."""


class CertificateViolation(ThinbeamError):
    """More severed components than the jump certificate allows; delta or eta
    are outside the regime where the certificate is guaranteed."""


# cli
class ConfigError(ThinbeamError):
    """Invalid or incomplete configuration."""


class NumericalFailure(ThinbeamError):
    """A solver failed to produce a usable result."""
