"""
Exception hierarchy shared by all services
"""

from typing import Optional


class RevLabError(Exception):
    """Base class for every error raised by the laboratory"""


# Pebble game


class IllegalMove(RevLabError):
    """A move breaks the pebble game rules"""


class NotReachable(RevLabError):
    """No strategy within the pebble budget reaches the target"""


class BudgetTooLarge(RevLabError):
    """Exhaustive search space exceeds the configured cap"""


class ScheduleOverflow(RevLabError):
    """k^n does not fit the chain index type"""


# Reversible VM


class CorruptHistory(RevLabError):
    """A history record is inconsistent with backward application"""


class SlotOutOfRange(RevLabError):
    """Checkpoint slot outside the store"""


class CapacityExceeded(RevLabError):
    """Checkpoint store overflow (signals a schedule bug)"""


class VmFault(RevLabError):
    """A micro-op precondition failed"""


class NonInvertibleEvent(RevLabError):
    """A trace event has no defined inverse"""


class TraceMismatch(RevLabError):
    """A trace does not line up with the state it is replayed against"""


# Oracles


class Infeasible(RevLabError):
    """Not enough distinct node identifiers for the requested chain"""


class FormatError(RevLabError):
    """A file or tape does not follow the expected format"""


class NotSelfReversible(RevLabError):
    """A second query did not restore the tape"""


# Analysis


class RuleViolation(RevLabError):
    """Moves derived from a trace break the pebble game rules"""


class ReconstructionFailure(RevLabError):
    """A description could not be expanded back into x"""


class NoDuplicate(RevLabError):
    """All nodes of x are distinct"""


class NoZeroNode(RevLabError):
    """No node of x equals the all-zero start node"""


class NoInitialPebble(RevLabError):
    """No node is pebbled in the trace's start configuration"""


class NoIncompressible(RevLabError):
    """Every string of a length has a shorter description"""


# Euler tour


class StepCapExceeded(RevLabError):
    """The tour was truncated by its step cap"""


class BijectivityViolation(RevLabError):
    """A tour state has in-degree or out-degree other than one"""


# CLI


class ConfigError(RevLabError):
    """Invalid experiment configuration"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
