"""
Oracle tapes, node chains, graph oracles and input ROMs
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from app.models.bits import from_bits, is_bit_string, to_bits

# Tape contents over the alphabet {0, 1, #}
OracleTape = str

SEPARATOR = "#"


def split_tape(tape: OracleTape) -> Optional[Tuple[str, Optional[str]]]:
    """
    Parse a tape as `b` or `b#c` with |b| == |c|

    Returns:
        (b, None) for a single string, (b, c) for a pair, None otherwise
    """
    if tape.count(SEPARATOR) > 1:
        return None
    if SEPARATOR not in tape:
        return (tape, None) if is_bit_string(tape) else None
    left, right = tape.split(SEPARATOR)
    if len(left) != len(right) or not is_bit_string(left + right):
        return None
    return left, right


def join_tape(left: str, right: str) -> OracleTape:
    return f"{left}{SEPARATOR}{right}"


@dataclass(frozen=True)
class Bounds:
    """Space bound S (bits) and time bound T (steps)"""

    S: int
    T: int

    def __post_init__(self) -> None:
        if self.S < 1:
            raise ValueError(f"S must be positive, got {self.S}")
        if self.T < self.S:
            raise ValueError(f"T must be at least S, got T={self.T} S={self.S}")

    @property
    def t(self) -> int:
        return self.T // self.S


@dataclass(frozen=True)
class Chain:
    """
    Node chain q_0 = 0^S, q_1..q_t

    `nodes` holds q_1..q_t as integers of width `node_width`; `extra_bits`
    are the leftover bits of x beyond t*S.
    """

    node_width: int
    nodes: Tuple[int, ...]
    extra_bits: str = ""
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.node_width < 1:
            raise ValueError(f"node_width must be positive, got {self.node_width}")
        limit = 1 << self.node_width
        if any(not 0 <= q < limit for q in self.nodes):
            raise ValueError(f"node wider than {self.node_width} bits")
        if 0 in self.nodes:
            raise ValueError("a node equals the start node 0^S")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("chain nodes are not pairwise distinct")
        if not is_bit_string(self.extra_bits):
            raise ValueError("extra_bits must be a bit string")

    @property
    def t(self) -> int:
        return len(self.nodes)

    def node(self, j: int) -> int:
        """q_j for 0 <= j <= t"""
        if j == 0:
            return 0
        return self.nodes[j - 1]

    def bits(self, j: int) -> str:
        return to_bits(self.node(j), self.node_width)

    @property
    def x(self) -> str:
        """The string the chain was cut from: q_1...q_t followed by extra bits"""
        return "".join(self.bits(j) for j in range(1, self.t + 1)) + self.extra_bits

    @classmethod
    def from_x(cls, x: str, node_width: int, t: int, seed: Optional[int] = None) -> "Chain":
        nodes = tuple(
            from_bits(x[i * node_width : (i + 1) * node_width]) for i in range(t)
        )
        return cls(node_width, nodes, x[t * node_width :], seed)


@dataclass(frozen=True)
class GraphOracle:
    """
    Self-reversible oracle for an outdegree-1 graph

    Maps b to b#f(b) and b#f(b) back to b; every other tape maps to itself.
    """

    successor: Mapping[str, str] = field(default_factory=dict)

    def query(self, tape: OracleTape) -> OracleTape:
        parsed = split_tape(tape)
        if parsed is None:
            return tape
        left, right = parsed
        image = self.successor.get(left)
        if image is None:
            return tape
        if right is None:
            return join_tape(left, image)
        return left if right == image else tape


@dataclass(frozen=True)
class InputRom:
    """2^b words of b bits, addressed big-endian from 0^b"""

    word_width: int
    words: Tuple[int, ...]

    def __post_init__(self) -> None:
        if self.word_width < 0:
            raise ValueError(f"word_width must be nonnegative, got {self.word_width}")
        if len(self.words) != 1 << self.word_width:
            raise ValueError(
                f"ROM needs exactly {1 << self.word_width} words, got {len(self.words)}"
            )
        limit = 1 << self.word_width
        if any(not 0 <= w < limit for w in self.words):
            raise ValueError(f"word wider than {self.word_width} bits")

    @property
    def size_string(self) -> str:
        return format(self.word_width, "b")

    def get_size(self, tape: OracleTape) -> OracleTape:
        if tape == "":
            return self.size_string
        if tape == self.size_string:
            return ""
        return tape

    def access_word(self, tape: OracleTape) -> OracleTape:
        parsed = split_tape(tape)
        if parsed is None:
            return tape
        address, word = parsed
        if len(address) != self.word_width:
            return tape
        value = to_bits(self.words[from_bits(address)], self.word_width)
        if word is None:
            return join_tape(address, value)
        return address if word == value else tape

    # Access-word is the query a chain-following program issues
    def query(self, tape: OracleTape) -> OracleTape:
        return self.access_word(tape)


def chain_successors(chain: Chain) -> Dict[str, str]:
    return {chain.bits(j - 1): chain.bits(j) for j in range(1, chain.t + 1)}
