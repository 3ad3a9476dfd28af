"""
Pebble game board, moves and schedules
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Tuple


class MoveKind(str, Enum):
    PEBBLE = "P"
    UNPEBBLE = "U"

    def flipped(self) -> "MoveKind":
        return MoveKind.UNPEBBLE if self is MoveKind.PEBBLE else MoveKind.PEBBLE


@dataclass(frozen=True)
class Move:
    node: int
    kind: MoveKind

    def inverse(self) -> "Move":
        return Move(self.node, self.kind.flipped())

    def __str__(self) -> str:
        return f"{self.kind.value} {self.node}"


@dataclass(frozen=True)
class PebbleState:
    """
    Pebbled nodes of a chain q_1..q_t

    The empty set is the unique initial state.
    """

    chain_length: int
    pebbled: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.chain_length < 1:
            raise ValueError(f"chain_length must be positive, got {self.chain_length}")
        bad = [j for j in self.pebbled if not 1 <= j <= self.chain_length]
        if bad:
            raise ValueError(f"pebbled nodes out of range 1..{self.chain_length}: {bad}")

    def __contains__(self, node: int) -> bool:
        return node in self.pebbled

    def __len__(self) -> int:
        return len(self.pebbled)


@dataclass(frozen=True)
class Schedule:
    k: int
    n: int
    moves: Tuple[Move, ...]

    @property
    def target(self) -> int:
        return self.k**self.n

    def __len__(self) -> int:
        return len(self.moves)
