"""Exception types shared across the package."""


class ReldnError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(ReldnError):
    """Malformed schema: bad functor declaration, unknown population, duplicates."""


class DataError(ReldnError):
    """Malformed data: unknown constant or value, conflicting duplicate rows,
    missing attribute groundings."""


class QueryError(ReldnError):
    """Ill-typed query construct: unknown functor, arity mismatch, variable
    bound to a constant outside its population, conflicting literals."""


class ModelError(ReldnError):
    """Invalid template model: cycles, incomplete CPT coverage, rows that do
    not normalize, inconsistent variable typing."""


class EstimationError(ReldnError):
    """Parameter estimation failure, e.g. a zero-count parent configuration
    with pseudocount 0."""


class ScoreError(ReldnError):
    """Scoring failure: a zero-probability CPT entry was instantiated with a
    positive relevant count."""


class GroundingError(ReldnError):
    """Grounding/inference failure: ground cycle, ambiguous ground family,
    joint table beyond the exact-enumeration limit."""


class SamplerDeadlockError(ReldnError):
    """Every candidate value of a node scored zero probability."""


class WitnessError(ReldnError):
    """A consistency witness could not be constructed for an edge."""
