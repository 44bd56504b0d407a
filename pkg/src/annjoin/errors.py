"""Exception types shared across the package."""


class AnnJoinError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteCoordinate(AnnJoinError):
    """A coordinate is NaN or infinite."""


class DuplicatePoints(AnnJoinError):
    """Two points in one dataset share identical coordinates."""


class DegenerateInput(AnnJoinError):
    """Fewer than three points, or all points collinear."""


class RecordTooLarge(AnnJoinError):
    """A serialized record does not fit into one block."""


class IoFailure(AnnJoinError):
    """File could not be read/written, or its framing is corrupt."""


class UnknownPoint(AnnJoinError):
    """Requested id is absent from the store directory."""


class UnknownStart(AnnJoinError):
    """Search start vertex does not exist in the indexed dataset."""


class ExhaustedGraph(AnnJoinError):
    """A graph traversal ran out of vertices before finishing.

    Impossible on a valid index (Delaunay graphs are connected); treated
    as index corruption.
    """


class EmptyQuery(AnnJoinError):
    """The query set is empty."""


class VerificationMismatch(AnnJoinError):
    """Computed nearest-neighbour pairs disagree with the exhaustive oracle."""
