"""
Reversible VM value types: machines, state, micro-ops, programs and traces
"""

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Optional, Tuple, Union

from app.models.oracle import OracleTape

# Step rules up to this width are materialized as explicit tables
TABLE_MAX_WIDTH = 16


@dataclass(frozen=True)
class IrrevMachine:
    """
    Black-box irreversible machine: a total deterministic step rule on
    width-S configurations, given as an explicit table or a keyed hash
    """

    config_width: int
    table: Optional[Tuple[int, ...]] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.config_width < 1:
            raise ValueError(f"config_width must be positive, got {self.config_width}")
        if self.table is None and self.seed is None:
            raise ValueError("a step rule needs a table or a seed")
        if self.table is not None:
            if len(self.table) != 1 << self.config_width:
                raise ValueError(
                    f"step table needs {1 << self.config_width} entries, got {len(self.table)}"
                )
            if any(not 0 <= v <= self.mask for v in self.table):
                raise ValueError(f"step table entry wider than {self.config_width} bits")

    @property
    def mask(self) -> int:
        return (1 << self.config_width) - 1

    def step(self, config: int) -> int:
        if self.table is not None:
            return self.table[config]
        nbytes = (self.config_width + 7) // 8
        digest = hashlib.blake2b(
            config.to_bytes(nbytes, "big"),
            digest_size=nbytes,
            key=int(self.seed or 0).to_bytes(8, "big"),
        ).digest()
        return int.from_bytes(digest, "big") & self.mask

    def run(self, config: int, steps: int) -> int:
        for _ in range(steps):
            config = self.step(config)
        return config


@dataclass(frozen=True)
class OracleMachine:
    """
    The irreversible chain follower: each step replaces b by f(b), where f
    is only reachable through a self-reversible query on the oracle tape
    """

    config_width: int

    def __post_init__(self) -> None:
        if self.config_width < 1:
            raise ValueError(f"config_width must be positive, got {self.config_width}")


Machine = Union[IrrevMachine, OracleMachine]


@dataclass(frozen=True)
class HistoryRecord:
    """One Landauer step: its index and the full previous configuration"""

    index: int
    previous: int


@dataclass(frozen=True)
class VmState:
    """
    Reversible VM configuration

    Checkpoint slot 0 holds the initial configuration; slots 1..capacity
    hold pebbled nodes. `occupied` lists the slots currently holding a node,
    whatever its value.
    """

    width: int
    current: int = 0
    history: Tuple[HistoryRecord, ...] = ()
    checkpoints: Tuple[int, ...] = (0,)
    oracle_tape: OracleTape = ""
    clock: int = 0
    occupied: FrozenSet[int] = frozenset()

    @property
    def capacity(self) -> int:
        return len(self.checkpoints) - 1

    def stored_checkpoints(self) -> int:
        return len(self.occupied)

    def storage_bits(self) -> int:
        """Bits actually held: register, history, occupied slots, tape"""
        return (
            self.width * (1 + len(self.history) + self.stored_checkpoints())
            + 2 * len(self.oracle_tape)
        )


class MicroOp(str, Enum):
    LOAD = "load"  # current ^= cp[a]
    STEP = "step"  # Landauer step
    UNSTEP = "unstep"  # Lecerf step
    COPY = "copy"  # cp[a] ^= current
    TAPE_WRITE = "tape_write"  # tape: "" <-> cp[a]
    TAPE_PAIR = "tape_pair"  # tape: "" <-> cp[a]#cp[b]
    COPY_RIGHT = "copy_right"  # cp[a] ^= right half of the tape
    QUERY = "query"  # self-reversible oracle call


INVERSE_OPS = {
    MicroOp.LOAD: MicroOp.LOAD,
    MicroOp.STEP: MicroOp.UNSTEP,
    MicroOp.UNSTEP: MicroOp.STEP,
    MicroOp.COPY: MicroOp.COPY,
    MicroOp.TAPE_WRITE: MicroOp.TAPE_WRITE,
    MicroOp.TAPE_PAIR: MicroOp.TAPE_PAIR,
    MicroOp.COPY_RIGHT: MicroOp.COPY_RIGHT,
    MicroOp.QUERY: MicroOp.QUERY,
}


@dataclass(frozen=True)
class Instruction:
    op: MicroOp
    a: int = 0
    b: int = 0

    def token(self) -> str:
        if self.op is MicroOp.TAPE_PAIR:
            return f"{self.op.value}:{self.a},{self.b}"
        if self.op in (MicroOp.STEP, MicroOp.UNSTEP, MicroOp.QUERY):
            return self.op.value
        return f"{self.op.value}:{self.a}"


@dataclass(frozen=True)
class TraceEvent:
    """One executed micro-op; queries carry the tape before and after"""

    time: int
    instruction: Instruction
    tape_before: Optional[OracleTape] = None
    tape_after: Optional[OracleTape] = None

    @property
    def op(self) -> MicroOp:
        return self.instruction.op

    @property
    def is_query(self) -> bool:
        return self.instruction.op is MicroOp.QUERY


@dataclass(frozen=True)
class Trace:
    width: int
    start: VmState
    events: Tuple[TraceEvent, ...] = ()
    machine: Optional[Machine] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class Program:
    """
    Straight-line reversible program compiled from a pebble schedule

    `move_starts[i]` is the index of the first instruction of move i;
    `slot_of_target` is where the schedule's target node ends up.
    """

    machine: Machine
    instructions: Tuple[Instruction, ...]
    capacity: int
    move_starts: Tuple[int, ...] = ()
    slot_of_target: int = 0
    peak_live: int = 0

    def __len__(self) -> int:
        return len(self.instructions)
