"""Semantic exception hierarchy.

Every failure mode that callers are expected to branch on gets its own class.
The CLI maps these onto exit codes: numeric failures exit 3, oracle-capacity
failures exit 4 (see ``sharptail.cli``).
"""

from __future__ import annotations

__all__ = [
    "SharptailError",
    "DegenerateEnvironment",
    "EmptyInterval",
    "InsufficientReplicas",
    "MismatchedRuns",
    "NonConvergence",
    "NotEnumerable",
    "OutOfRange",
    "PrefactorDegenerate",
    "QuadratureFailure",
    "TooLarge",
    "NUMERIC_ERRORS",
    "CAPACITY_ERRORS",
]


class SharptailError(Exception):
    """Base class for all library-specific failures."""


class DegenerateEnvironment(SharptailError):
    """All realized weights are zero; the weighted sum is identically 0."""


class QuadratureFailure(SharptailError):
    """Adaptive quadrature did not reach tolerance within the node budget."""


class OutOfRange(SharptailError):
    """Requested threshold lies outside the solvable range of the mean map."""


class NonConvergence(SharptailError):
    """Safeguarded Newton exceeded its iteration cap (convexity violation)."""


class EmptyInterval(SharptailError):
    """The admissible threshold interval collapsed to the empty set."""


class PrefactorDegenerate(SharptailError):
    """Tail prefactor undefined: nonpositive saddle point or curvature."""


class TooLarge(SharptailError):
    """Exact enumeration would exceed the tuple budget."""


class NotEnumerable(TooLarge):
    """Exact enumeration requires a finite-support lattice distribution."""


class InsufficientReplicas(SharptailError):
    """Fewer replicas than the minimum needed for a covariance report."""


class MismatchedRuns(SharptailError):
    """Comparison report input records disagree on (seed, n, a)."""


NUMERIC_ERRORS = (
    DegenerateEnvironment,
    EmptyInterval,
    NonConvergence,
    OutOfRange,
    PrefactorDegenerate,
    QuadratureFailure,
)

CAPACITY_ERRORS = (TooLarge, InsufficientReplicas)
