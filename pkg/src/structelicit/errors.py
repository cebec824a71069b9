"""Shared exception types."""

from __future__ import annotations


class StructureError(Exception):
    """Base class for all model-structure errors."""


class UnknownNodeError(StructureError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"unknown node: {node!r}")


class DuplicateEdgeError(StructureError):
    def __init__(self, edge):
        self.edge = edge
        super().__init__(f"edge already present: {edge[0]!r} -> {edge[1]!r}")


class CycleError(StructureError):
    """Raised when an edge addition would create a directed cycle.

    ``cycle`` is a witness node sequence [v0, v1, ..., v0].
    """

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("adding edge would induce cycle: " + " -> ".join(map(str, self.cycle)))


class OverlappingSetsError(StructureError):
    def __init__(self, message="node sets must be pairwise disjoint"):
        super().__init__(message)


class InvalidPartitionError(StructureError):
    pass


class UnknownPositionError(StructureError):
    def __init__(self, position):
        self.position = position
        super().__init__(f"unknown position: {position!r}")


class UnknownStageError(StructureError):
    def __init__(self, stage):
        self.stage = stage
        super().__init__(f"unknown stage: {stage!r}")


class InvalidStagingError(StructureError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(f"{len(self.violations)} staging violation(s)")


class MalformedQueryError(StructureError):
    pass


class EmptyEventError(StructureError):
    pass


class MissingLabelError(StructureError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"no label for node: {node!r}")


class MissingParentObservationError(StructureError):
    def __init__(self, series, parent):
        self.series = series
        self.parent = parent
        super().__init__(f"series {series!r} needs observation of parent {parent!r}")


class OrderingViolationError(StructureError):
    pass


class NumericalBreakdownError(StructureError):
    pass


class SpecValidationError(StructureError):
    """A model document or spec failed its invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(map(str, self.violations)))


class UnknownActorError(StructureError):
    def __init__(self, actor):
        self.actor = actor
        super().__init__(f"unknown actor: {actor!r}")


class DisconnectedResultError(StructureError):
    """An intervention would leave a site without any supply path."""


class StaleQuestionError(StructureError):
    pass


class NotACutError(StructureError):
    pass
