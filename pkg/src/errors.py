"""Exception types raised by the solver."""


class InfluenceDiagramError(Exception):
    """Base class for all solver errors."""


class ModelFormatError(InfluenceDiagramError):
    """A model or maze file could not be parsed."""


class DiagramValidationError(InfluenceDiagramError):
    """A diagram violates one of its structural or numerical invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class StructuralError(InfluenceDiagramError):
    """An internal structure (join tree, search plan) is inconsistent."""


class ZeroProbabilityError(InfluenceDiagramError):
    """The entered evidence has probability zero."""


class InconsistentEvidenceError(InfluenceDiagramError):
    """A message brought mass into a separator entry that was previously zero."""


class CheckpointError(InfluenceDiagramError):
    """Checkpoints were restored out of order or left open."""


class InfeasibleSeparationError(InfluenceDiagramError):
    """No node separator exists between the requested sets."""


class ResourceLimitError(InfluenceDiagramError):
    """A size guard or memory budget was exceeded."""


class MalformedPolicyError(InfluenceDiagramError):
    """A policy tree does not match the diagram it claims to solve."""
