"""Exception types shared across the package."""


class ExpTreesError(Exception):
    """Base class for all package errors."""


class NonSummableError(ExpTreesError):
    """The declared degree function does not certify a summable reciprocal tail."""


class UnsupportedVariantError(ExpTreesError):
    """The requested operation has no formula for this variant."""


class ToleranceError(ExpTreesError):
    """A certified tolerance could not be reached within the term budget."""


class DegenerateFitnessError(ExpTreesError):
    """Total fitness collapsed to zero; the attachment law is undefined."""


class CapExceededError(ExpTreesError):
    """Tree too large for exhaustive ordering enumeration."""


class InvalidSubtreeError(ExpTreesError):
    """A subtree specification violates ancestor or sibling closure."""

    def __init__(self, node, reason):
        self.node = node
        self.reason = reason
        super().__init__(f"invalid subtree at node {node!r}: {reason}")


class NotInStarPhaseError(ExpTreesError):
    """Sub-tree phase predicates require a model classified as Star."""


class InvalidParametersError(ExpTreesError):
    """Model parameters are outside their admissible ranges."""
