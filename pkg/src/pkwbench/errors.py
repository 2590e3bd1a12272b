"""Exception taxonomy shared across the pipeline.

Every error raised by pkwbench derives from :class:`PkwError` so callers can
catch pipeline failures without also swallowing programming errors.
"""


class PkwError(Exception):
    """Base class for all pkwbench errors."""


# geometry / parametric model

class DegenerateGeometry(PkwError):
    """Raised when a parameter set collapses the streamwise extent (B <= T_s)."""


class NonPositiveOutletWidth(PkwError):
    """Raised when the derived outlet key widths are not strictly positive."""


# sampling

class InfeasibleSpace(PkwError):
    """Raised when repeated sampling rounds cannot produce a feasible design."""


class GridTooLarge(PkwError):
    """Raised when an exhaustive grid would exceed the candidate cap."""


# solid model / meshing

class DegenerateRegion(PkwError):
    """Raised when a plan region footprint pinches below the lattice resolution."""


class StitchFailure(PkwError):
    """Raised when tessellation leaves open or non-manifold edges.

    The offending edges are attached as ``edges`` (list of vertex index pairs).
    """

    def __init__(self, message, edges=None):
        super().__init__(message)
        self.edges = list(edges) if edges is not None else []


class EmptyMesh(PkwError):
    """Raised when an operation receives a mesh with no triangles."""


class MalformedStl(PkwError):
    """Raised when an STL file is truncated or internally inconsistent."""


# point clouds

class DegenerateExtent(PkwError):
    """Raised when normalizing a cloud whose bounding box has zero extent."""


class MalformedCloud(PkwError):
    """Raised when a point cloud file is truncated or has a bad header."""


# hydraulics / labels

class NonPhysical(PkwError):
    """Raised for non-physical hydraulic inputs (Q <= 0, head <= 0, L <= 0)."""


class OutOfRange(PkwError):
    """Raised when an input leaves the calibrated range of the synthetic oracle."""


class MissingGeometry(PkwError):
    """Raised when a label references a geometry id absent from the manifest."""


class UnitError(PkwError):
    """Raised when a label file lacks the unit-suffixed columns it must carry."""


class ParseError(PkwError):
    """Raised when structured text cannot be parsed; carries the row number."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


# dataset / splits

class TooFewGeometries(PkwError):
    """Raised when a split policy receives fewer geometries than it can divide."""


class EmptyBin(PkwError):
    """Raised when a requested out-of-distribution bin contains no samples."""


class ZeroVariance(PkwError):
    """Raised when a statistic is undefined because a column is constant."""


# surrogate models

class EmptyData(PkwError):
    """Raised when fitting is attempted on an empty design matrix."""


class ShapeMismatch(PkwError):
    """Raised when features, targets, or clouds disagree in shape."""


class NonFiniteLoss(PkwError):
    """Raised when training produces a NaN or infinite loss."""


class MalformedModel(PkwError):
    """Raised when a model file is truncated or has an unknown layout."""


# command-line pipeline

class ArtifactExists(PkwError):
    """Raised when a command would overwrite an artifact without --force."""


class MissingArtifact(PkwError):
    """Raised when a pipeline stage needs an artifact that was never built."""
