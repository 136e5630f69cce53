"""Shared exception types.

Error taxonomy: LoadError for unreadable or malformed inputs, ValidationError
for data that parses but breaks an invariant, NotFoundError for unknown ids,
ContractViolation for bad call arguments. Agent-specific failures live in
talentkg.agents.
"""


class TalentKGError(Exception):
    """Base class for all engine errors."""


class LoadError(TalentKGError):
    """An input file is missing, unreadable, or malformed at the line level."""


class ValidationError(TalentKGError):
    """Loaded data violates a corpus or artifact invariant."""


class NotFoundError(TalentKGError):
    """An entity id does not resolve."""


class ContractViolation(TalentKGError):
    """A caller broke an operation precondition."""


class NoSignalError(TalentKGError):
    """An entity has no embedded papers to aggregate from."""


class DegenerateAggregateError(TalentKGError):
    """Aggregation produced a (near-)zero vector that cannot be normalized."""
