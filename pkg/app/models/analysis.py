"""
Query events, pebble justifications and compressed descriptions
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from app.models.oracle import OracleTape
from app.models.vm import VmState


@dataclass(frozen=True)
class QueryEvent:
    """One oracle (or input-access) query: clock and tape before/after"""

    time: int
    before: OracleTape
    after: OracleTape


class QueryForm(str, Enum):
    """How a query string involves node j"""

    PRED = "pred"  # q_(j-1)
    PRED_PAIR = "pred_pair"  # q_(j-1)#q_j
    SELF = "self"  # q_j
    SELF_PAIR = "self_pair"  # q_j#q_(j+1)


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


# Case numbering: looking back, a.1/a.2/a.3; looking ahead, b.1/b.2/b.3
PREV_CASES = {QueryForm.PRED: 1, QueryForm.SELF: 2, QueryForm.SELF_PAIR: 3}
NEXT_CASES = {QueryForm.SELF: 1, QueryForm.SELF_PAIR: 2, QueryForm.PRED_PAIR: 3}

# The final node counts only a.1 and b.3
FINAL_PREV_CASES = {QueryForm.PRED: 1}
FINAL_NEXT_CASES = {QueryForm.PRED_PAIR: 3}


@dataclass(frozen=True)
class Justification:
    """Why node j is (or is not) pebbled at some instant"""

    node: int
    prev_time: Optional[int] = None
    prev_case: Optional[int] = None
    next_time: Optional[int] = None
    next_case: Optional[int] = None

    @property
    def pebbled(self) -> bool:
        return self.prev_case is not None or self.next_case is not None

    def case(self, direction: Direction) -> Optional[int]:
        return self.next_case if direction is Direction.FORWARD else self.prev_case

    def query_time(self, direction: Direction) -> Optional[int]:
        return self.next_time if direction is Direction.FORWARD else self.prev_time


@dataclass(frozen=True)
class Triple:
    """A node recovered by simulation: index, signed clock offset, case tag"""

    node: int
    delta: int
    tag: int

    def __post_init__(self) -> None:
        if self.node < 1:
            raise ValueError(f"node index must be positive, got {self.node}")
        if self.tag not in (1, 2, 3):
            raise ValueError(f"tag must be 1, 2 or 3, got {self.tag}")


@dataclass(frozen=True)
class Description:
    """
    Shorter description of a chain string x built from a traced run

    `config_snapshot` is C_tau (its clock is tau); `x_prime` holds the
    nodes not recovered in `direction`, in index order.
    """

    config_snapshot: VmState
    direction: Direction
    x_prime: str
    triples: Tuple[Triple, ...]
    extra_bits: str = ""

    @property
    def h(self) -> int:
        return len(self.triples)

    @property
    def tau(self) -> int:
        return self.config_snapshot.clock

    @property
    def node_width(self) -> int:
        return self.config_snapshot.width

    @property
    def chain_length(self) -> int:
        return self.h + len(self.x_prime) // self.node_width
