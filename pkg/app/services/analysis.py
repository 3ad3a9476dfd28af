"""
Trace analysis service

Reads an execution trace as a pebble game, builds the shorter description
of the chain string x from any instant of a run, expands it again by
re-simulating the run, and searches small description systems for
incompressible strings.
"""

import bisect
import itertools
import logging
import math
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.errors import (
    BudgetTooLarge,
    CorruptHistory,
    FormatError,
    IllegalMove,
    NoDuplicate,
    NoIncompressible,
    NoInitialPebble,
    NonInvertibleEvent,
    NoZeroNode,
    ReconstructionFailure,
    RevLabError,
    RuleViolation,
    SlotOutOfRange,
    VmFault,
)
from app.models.analysis import (
    FINAL_NEXT_CASES,
    FINAL_PREV_CASES,
    NEXT_CASES,
    PREV_CASES,
    Description,
    Direction,
    Justification,
    QueryEvent,
    QueryForm,
    Triple,
)
from app.models.bits import to_bits
from app.models.oracle import Chain, GraphOracle, OracleTape, join_tape, split_tape
from app.models.pebble import Move, MoveKind, PebbleState
from app.models.vm import Program, Trace, VmState
from app.schemas.analysis import DescriptionSizes, SpaceSample
from app.services.pebble import apply_move
from app.services.revsim import dump_state, execute, iter_states, load_state, state_at, undo

logger = logging.getLogger(__name__)

# f(b) for strings shorter than a node; empty at a single chain width
SHORT_SUCCESSORS: Dict[str, str] = {}


def query_events(trace: Trace) -> List[QueryEvent]:
    """The trace's oracle queries with the tape before and after each"""
    return [
        QueryEvent(e.time, e.tape_before or "", e.tape_after or "")
        for e in trace.events
        if e.is_query
    ]


class PebbleTimeline:
    """
    Per-node query history of a run

    For node j the relevant queries are those whose query string (the tape
    at the start of the query) is q_(j-1), q_(j-1)#q_j, q_j or q_j#q_(j+1).
    An event at time e lies in the past at instant tau iff e < tau.
    """

    def __init__(self, events: Iterable[QueryEvent], chain: Chain):
        self.chain = chain
        self.t = chain.t
        self._index = {chain.bits(j): j for j in range(self.t + 1)}
        self._times: Dict[int, List[int]] = {j: [] for j in range(1, self.t + 1)}
        self._forms: Dict[int, List[QueryForm]] = {j: [] for j in range(1, self.t + 1)}

        for event in sorted(events, key=lambda e: e.time):
            for node, form in self.involvement(event.before):
                self._times[node].append(event.time)
                self._forms[node].append(form)

    def involvement(self, tape: OracleTape) -> List[Tuple[int, QueryForm]]:
        """Nodes a query string involves, with the form relative to each"""
        parsed = split_tape(tape)
        if parsed is None:
            return []
        left, right = parsed
        i = self._index.get(left)
        if i is None:
            return []

        nodes: List[Tuple[int, QueryForm]] = []
        if right is None:
            if i >= 1:
                nodes.append((i, QueryForm.SELF))
            if i + 1 <= self.t:
                nodes.append((i + 1, QueryForm.PRED))
        elif i + 1 <= self.t and self._index.get(right) == i + 1:
            nodes.append((i + 1, QueryForm.PRED_PAIR))
            if i >= 1:
                nodes.append((i, QueryForm.SELF_PAIR))
        return nodes

    def justify(self, node: int, tau: int) -> Justification:
        times = self._times[node]
        forms = self._forms[node]
        pos = bisect.bisect_left(times, tau)

        final = node == self.t
        prev_cases = FINAL_PREV_CASES if final else PREV_CASES
        next_cases = FINAL_NEXT_CASES if final else NEXT_CASES

        prev_time = prev_case = next_time = next_case = None
        if pos > 0:
            prev_time = times[pos - 1]
            prev_case = prev_cases.get(forms[pos - 1])
        if pos < len(times):
            next_time = times[pos]
            next_case = next_cases.get(forms[pos])
        return Justification(node, prev_time, prev_case, next_time, next_case)

    def justifications(self, tau: int) -> List[Justification]:
        """Justifications of every node pebbled at tau, in index order"""
        found = (self.justify(j, tau) for j in range(1, self.t + 1))
        return [j for j in found if j.pebbled]

    def pebbled_at(self, tau: int) -> FrozenSet[int]:
        return frozenset(j.node for j in self.justifications(tau))


def pebbled_at(events: Sequence[QueryEvent], chain: Chain, tau: int) -> FrozenSet[int]:
    """Node indices pebbled at instant tau"""
    return PebbleTimeline(events, chain).pebbled_at(tau)


def trace_to_moves(events: Sequence[QueryEvent], chain: Chain) -> List[Move]:
    """
    Pebble game moves a run performs

    A query is a move exactly when the pebbled set differs just before and
    just after it; queries that change nothing are skipped.

    Raises:
        RuleViolation: a node is pebbled at the start, or the derived moves
            break the pebble game rules
    """
    if chain.t == 0:
        return []
    ordered = sorted(events, key=lambda e: e.time)
    timeline = PebbleTimeline(ordered, chain)
    start = ordered[0].time if ordered else 0

    initial = timeline.pebbled_at(start)
    if initial:
        raise RuleViolation(f"nodes {sorted(initial)} are pebbled before any query")

    state = PebbleState(chain.t)
    moves: List[Move] = []
    for event in ordered:
        before = timeline.pebbled_at(event.time)
        after = timeline.pebbled_at(event.time + 1)
        for node in sorted(before ^ after):
            move = Move(node, MoveKind.PEBBLE if node in after else MoveKind.UNPEBBLE)
            try:
                state = apply_move(state, move)
            except IllegalMove as e:
                raise RuleViolation(f"query at {event.time}: {e}") from e
            moves.append(move)

    logger.debug(f"{len(ordered)} queries read as {len(moves)} pebble moves")
    return moves


def majority_direction(events: Sequence[QueryEvent], chain: Chain, tau: int) -> Direction:
    """The direction justifying more pebbled nodes at tau (forward on ties)"""
    justs = PebbleTimeline(events, chain).justifications(tau)
    forward = sum(1 for j in justs if j.next_case is not None)
    backward = sum(1 for j in justs if j.prev_case is not None)
    return Direction.FORWARD if forward >= backward else Direction.BACKWARD


def compress(
    trace: Trace, chain: Chain, tau: int, direction: Optional[Direction] = None
) -> Description:
    """
    Describe x by C_tau plus the nodes a re-simulation cannot recover

    Nodes pebbled at tau because of a query in `direction` are replaced by
    (index, clock offset of that query, case tag); every other node is
    kept verbatim in x'. Without a direction the majority one is used, so
    h >= p/2.
    """
    events = query_events(trace)
    timeline = PebbleTimeline(events, chain)
    justs = timeline.justifications(tau)
    if direction is None:
        forward = sum(1 for j in justs if j.next_case is not None)
        backward = sum(1 for j in justs if j.prev_case is not None)
        direction = Direction.FORWARD if forward >= backward else Direction.BACKWARD

    triples: List[Triple] = []
    for just in justs:
        case = just.case(direction)
        query_time = just.query_time(direction)
        if case is not None and query_time is not None:
            triples.append(Triple(just.node, query_time - tau, case))

    recovered = {triple.node for triple in triples}
    x_prime = "".join(chain.bits(j) for j in range(1, chain.t + 1) if j not in recovered)

    logger.debug(
        f"compress at tau={tau}: p={len(justs)}, h={len(triples)} {direction.value}, "
        f"|x'|={len(x_prime)}"
    )
    return Description(
        config_snapshot=state_at(trace, tau),
        direction=direction,
        x_prime=x_prime,
        triples=tuple(triples),
        extra_bits=chain.extra_bits,
    )


class _Reconstruction:
    # Node table filled in while the run is re-simulated; `answer` stands in
    # for the oracle.

    def __init__(
        self,
        width: int,
        t: int,
        known: Dict[int, str],
        triples: Sequence[Triple],
        tau: int,
        direction: Direction,
    ):
        self.width = width
        self.t = t
        self.direction = direction
        self.q: List[Optional[str]] = [None] * (t + 1)
        self._index: Dict[str, int] = {}
        self._record(0, "0" * width)
        for j, bits in known.items():
            self._record(j, bits)

        self._due: Dict[int, List[Triple]] = {}
        for triple in triples:
            self._due.setdefault(tau + triple.delta, []).append(triple)

    def _record(self, j: int, bits: str) -> None:
        self.q[j] = bits
        self._index.setdefault(bits, j)

    def _pick(self, left: str, right: Optional[str], tag: int) -> str:
        if right is None:
            return left
        if self.direction is Direction.FORWARD:
            return right if tag == 3 else left
        return right if tag == 1 else left

    def answer(self, tape: OracleTape, time: int) -> OracleTape:
        parsed = split_tape(tape)
        if parsed is None:
            return tape
        left, right = parsed
        if len(left) < self.width:
            return GraphOracle(SHORT_SUCCESSORS).query(tape)
        if len(left) > self.width:
            return tape

        for triple in self._due.get(time, ()):
            self._record(triple.node, self._pick(left, right, triple.tag))

        j = self._index.get(left)
        if j is None or j >= self.t:
            return tape
        if right is None:
            successor = self.q[j + 1]
            if successor is None:
                raise ReconstructionFailure(
                    f"query at {time} needs node {j + 1}, which is not known yet"
                )
            return join_tape(left, successor)
        return left if self.q[j + 1] == right else tape

    def missing(self) -> List[int]:
        return [j for j in range(1, self.t + 1) if self.q[j] is None]

    def output(self) -> str:
        return "".join(bits or "" for bits in self.q[1:])


def decompress(d: Description, program: Program) -> str:
    """
    Expand a description back into x

    Starting from C_tau the program is simulated in the description's
    direction with the oracle replaced by the node table: nodes are read off
    the tape at the recorded clock offsets, and single-node queries are
    answered from already known successors.

    Raises:
        ReconstructionFailure: a node stays unknown or the simulation breaks
    """
    width = d.node_width
    if len(d.x_prime) % width:
        raise ReconstructionFailure(f"|x'| = {len(d.x_prime)} is not a multiple of {width}")
    t = d.chain_length
    recovered = [triple.node for triple in d.triples]
    if len(set(recovered)) != len(recovered) or any(j > t for j in recovered):
        raise ReconstructionFailure(f"triples name nodes {recovered} outside 1..{t}")

    if d.h == 0:
        return d.x_prime + d.extra_bits

    stored = [j for j in range(1, t + 1) if j not in set(recovered)]
    known = {
        j: d.x_prime[i * width : (i + 1) * width] for i, j in enumerate(stored)
    }
    table = _Reconstruction(width, t, known, d.triples, d.tau, d.direction)

    times = [d.tau + triple.delta for triple in d.triples]
    if min(times) < 0 or max(times) >= len(program):
        raise ReconstructionFailure("a clock offset points outside the program")

    state = d.config_snapshot
    try:
        if d.direction is Direction.FORWARD:
            if min(times) < d.tau:
                raise ReconstructionFailure("forward offsets must not be negative")
            for clock in range(d.tau, max(times) + 1):
                state, _ = execute(state, program.instructions[clock], program.machine, table.answer)
        else:
            if max(times) >= d.tau:
                raise ReconstructionFailure("backward offsets must be negative")
            for clock in range(d.tau - 1, min(times) - 1, -1):
                state = undo(state, program.instructions[clock], program.machine, table.answer)
    except (VmFault, CorruptHistory, SlotOutOfRange, NonInvertibleEvent) as e:
        raise ReconstructionFailure(f"simulation diverged: {e}") from e

    missing = table.missing()
    if missing:
        raise ReconstructionFailure(f"nodes {missing} were never read off the tape")
    return table.output() + d.extra_bits


def description_sizes(d: Description, pebbled: int, run_length: int) -> DescriptionSizes:
    """
    Bits each component of a description takes

    A triple costs one index (log t), one signed offset (log T_run plus a
    sign bit) and a two-bit tag.
    """
    t = d.chain_length
    triple_bits = d.h * (
        math.ceil(math.log2(t + 1)) + math.ceil(math.log2(run_length + 1)) + 1 + 2
    )
    return DescriptionSizes(
        tau=d.tau,
        direction=d.direction.value,
        pebbled=pebbled,
        h=d.h,
        snapshot_bits=d.config_snapshot.storage_bits(),
        x_prime_bits=len(d.x_prime),
        triple_bits=triple_bits,
        extra_bits=len(d.extra_bits),
        x_bits=t * d.node_width + len(d.extra_bits),
    )


def space_ratio(trace: Trace, chain: Chain) -> List[SpaceSample]:
    """Stored configuration size against p*S at every instant of a run"""
    timeline = PebbleTimeline(query_events(trace), chain)
    samples: List[SpaceSample] = []
    for state in iter_states(trace):
        p = len(timeline.pebbled_at(state.clock))
        bits = state.storage_bits()
        samples.append(
            SpaceSample(
                tau=state.clock,
                pebbled=p,
                storage_bits=bits,
                ratio=bits / (p * chain.node_width) if p else None,
            )
        )
    return samples


# Wire format: length-prefixed fields in component order

_LENGTH = struct.Struct(">I")
_TRIPLE = struct.Struct(">IqB")


def _field(payload: bytes) -> bytes:
    return _LENGTH.pack(len(payload)) + payload


def encode_description(d: Description) -> bytes:
    triples = b"".join(_TRIPLE.pack(tr.node, tr.delta, tr.tag) for tr in d.triples)
    return b"".join(
        [
            _field(dump_state(d.config_snapshot).encode("utf-8")),
            _field(b"F" if d.direction is Direction.FORWARD else b"B"),
            _field(d.x_prime.encode("ascii")),
            _field(triples),
            _field(d.extra_bits.encode("ascii")),
        ]
    )


def decode_description(data: bytes) -> Description:
    """
    Parse the binary description format

    Raises:
        FormatError: truncated data, bad field or trailing bytes
    """
    fields: List[bytes] = []
    offset = 0
    try:
        for _ in range(5):
            (length,) = _LENGTH.unpack_from(data, offset)
            offset += _LENGTH.size
            if offset + length > len(data):
                raise FormatError("field runs past the end of the description")
            fields.append(data[offset : offset + length])
            offset += length
    except struct.error as e:
        raise FormatError(f"truncated description: {e}") from e
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after the description")

    snapshot, direction, x_prime, triples, extra = fields
    if direction not in (b"F", b"B") or len(triples) % _TRIPLE.size:
        raise FormatError("bad direction or triple field")
    try:
        return Description(
            config_snapshot=load_state(snapshot.decode("utf-8")),
            direction=Direction.FORWARD if direction == b"F" else Direction.BACKWARD,
            x_prime=_bit_field(x_prime),
            triples=tuple(Triple(*item) for item in _TRIPLE.iter_unpack(triples)),
            extra_bits=_bit_field(extra),
        )
    except (UnicodeDecodeError, ValueError) as e:
        raise FormatError(f"bad description field: {e}") from e


def _bit_field(raw: bytes) -> str:
    text = raw.decode("ascii")
    if any(ch not in "01" for ch in text):
        raise FormatError("bit field holds characters other than 0 and 1")
    return text


def bytes_to_bits(data: bytes) -> str:
    return "".join(format(byte, "08b") for byte in data)


def bits_to_bytes(bits: str) -> Optional[bytes]:
    if len(bits) % 8:
        return None
    return bytes(int(bits[i : i + 8], 2) for i in range(0, len(bits), 8))


# Small description systems


def gamma_encode(n: int) -> str:
    """Elias gamma code of a positive integer"""
    if n < 1:
        raise ValueError(f"gamma codes positive integers only, got {n}")
    body = format(n, "b")
    return "0" * (len(body) - 1) + body


def gamma_decode(bits: str) -> Optional[Tuple[int, str]]:
    """(value, remaining bits), or None when no complete code word leads"""
    zeros = 0
    while zeros < len(bits) and bits[zeros] == "0":
        zeros += 1
    end = 2 * zeros + 1
    if end > len(bits):
        return None
    return int(bits[zeros:end], 2), bits[end:]


def _nodes(x: str, width: int) -> Tuple[List[str], str]:
    count = len(x) // width
    return [x[i * width : (i + 1) * width] for i in range(count)], x[count * width :]


def describe_duplicate(x: str, S: int) -> Tuple[int, int, str]:
    """
    First pair of equal nodes j < k, with the k-th node spliced out of x

    Raises:
        NoDuplicate: all nodes of x are distinct
    """
    if S < 1 or len(x) < 2 * S:
        raise ValueError(f"need S >= 1 and |x| >= 2S, got S={S} |x|={len(x)}")
    nodes, tail = _nodes(x, S)
    first_seen: Dict[str, int] = {}
    for k, node in enumerate(nodes, start=1):
        if node in first_seen:
            j = first_seen[node]
            return j, k, "".join(nodes[: k - 1] + nodes[k:]) + tail
        first_seen[node] = k
    raise NoDuplicate(f"all {len(nodes)} nodes of width {S} are distinct")


def expand_duplicate(j: int, k: int, x_prime: str, S: int) -> Optional[str]:
    """Reinsert a copy of node j at position k (None if out of range)"""
    nodes, tail = _nodes(x_prime, S)
    if not 1 <= j < k <= len(nodes) + 1:
        return None
    nodes.insert(k - 1, nodes[j - 1])
    return "".join(nodes) + tail


def describe_zero(x: str, S: int) -> Tuple[int, str]:
    """
    First node equal to 0^S, spliced out of x

    Raises:
        NoZeroNode: no node is all zeros
    """
    if S < 1 or len(x) < S:
        raise ValueError(f"need S >= 1 and |x| >= S, got S={S} |x|={len(x)}")
    nodes, tail = _nodes(x, S)
    zero = "0" * S
    for j, node in enumerate(nodes, start=1):
        if node == zero:
            return j, "".join(nodes[: j - 1] + nodes[j:]) + tail
    raise NoZeroNode(f"none of the {len(nodes)} nodes is {zero}")


def expand_zero(j: int, x_prime: str, S: int) -> Optional[str]:
    nodes, tail = _nodes(x_prime, S)
    if not 1 <= j <= len(nodes) + 1:
        return None
    nodes.insert(j - 1, "0" * S)
    return "".join(nodes) + tail


def describe_initial_pebble(trace: Trace, chain: Chain) -> Tuple[int, int, int, str]:
    """
    (j, clock offset, tag, x with q_j spliced out) for a node pebbled in the
    trace's start configuration, chosen by the earliest justifying query

    Raises:
        NoInitialPebble: nothing is pebbled at the start
    """
    start = trace.start.clock
    timeline = PebbleTimeline(query_events(trace), chain)
    candidates = [
        just
        for just in timeline.justifications(start)
        if just.next_case is not None and just.next_time is not None
    ]
    if not candidates:
        raise NoInitialPebble(f"no node is pebbled at clock {start}")
    first = min(candidates, key=lambda just: just.next_time or 0)
    j = first.node
    x_prime = "".join(chain.bits(i) for i in range(1, chain.t + 1) if i != j) + chain.extra_bits
    return j, (first.next_time or 0) - start, first.next_case or 1, x_prime


def expand_initial_pebble(
    program: Program, start: VmState, j: int, delta: int, tag: int, x_prime: str
) -> str:
    """
    Recover q_j by simulating forward from the known start configuration

    Raises:
        ReconstructionFailure: the description does not reproduce a chain
    """
    width = start.width
    nodes, tail = _nodes(x_prime, width)
    if not 1 <= j <= len(nodes) + 1:
        raise ReconstructionFailure(f"node {j} outside 1..{len(nodes) + 1}")
    try:
        triple = Triple(j, delta, tag)
    except ValueError as e:
        raise ReconstructionFailure(str(e)) from e
    d = Description(start, Direction.FORWARD, "".join(nodes), (triple,), tail)
    return decompress(d, program)


@dataclass(frozen=True)
class TraceContext:
    """The traced program a trace-based description is expanded against"""

    program: Program
    start: VmState


class DescriptionSystem(ABC):
    """A total map from descriptions (bit strings) to bit strings"""

    name = "system"

    @abstractmethod
    def expand(self, d: str) -> str:
        ...

    def __call__(self, d: str) -> str:
        return self.expand(d)


class FunctionSystem(DescriptionSystem):
    def __init__(self, func: Callable[[str], str], name: str = "function"):
        self.func = func
        self.name = name

    def expand(self, d: str) -> str:
        return self.func(d)


class DuplicateSplice(DescriptionSystem):
    """gamma(j) gamma(k-j) x'"""

    name = "duplicate"

    def __init__(self, S: int):
        self.S = S

    @staticmethod
    def encode(j: int, k: int, x_prime: str) -> str:
        return gamma_encode(j) + gamma_encode(k - j) + x_prime

    def expand(self, d: str) -> str:
        first = gamma_decode(d)
        if first is None:
            return ""
        j, rest = first
        second = gamma_decode(rest)
        if second is None:
            return ""
        gap, x_prime = second
        return expand_duplicate(j, j + gap, x_prime, self.S) or ""


class ZeroCollision(DescriptionSystem):
    """gamma(j) x'"""

    name = "zero"

    def __init__(self, S: int):
        self.S = S

    @staticmethod
    def encode(j: int, x_prime: str) -> str:
        return gamma_encode(j) + x_prime

    def expand(self, d: str) -> str:
        first = gamma_decode(d)
        if first is None:
            return ""
        j, x_prime = first
        return expand_zero(j, x_prime, self.S) or ""


class InitialPebbleSystem(DescriptionSystem):
    """gamma(j) gamma(offset+1) tag(2 bits) x', expanded from the run's start"""

    name = "initial-pebble"

    def __init__(self, context: TraceContext):
        self.context = context

    @staticmethod
    def encode(j: int, delta: int, tag: int, x_prime: str) -> str:
        return gamma_encode(j) + gamma_encode(delta + 1) + format(tag, "02b") + x_prime

    def expand(self, d: str) -> str:
        first = gamma_decode(d)
        if first is None:
            return ""
        j, rest = first
        second = gamma_decode(rest)
        if second is None or len(second[1]) < 2:
            return ""
        delta = second[0] - 1
        tag, x_prime = int(second[1][:2], 2), second[1][2:]
        try:
            return expand_initial_pebble(
                self.context.program, self.context.start, j, delta, tag, x_prime
            )
        except ReconstructionFailure:
            return ""


class TraceSystem(DescriptionSystem):
    """The binary description format read as a bit string"""

    name = "trace"

    def __init__(self, context: TraceContext):
        self.context = context

    @staticmethod
    def encode(d: Description) -> str:
        return bytes_to_bits(encode_description(d))

    def expand(self, d: str) -> str:
        data = bits_to_bytes(d)
        if data is None:
            return ""
        try:
            return decompress(decode_description(data), self.context.program)
        except RevLabError:
            return ""


class CombinedSystem(DescriptionSystem):
    """
    Two-bit prefix dispatch: 00 duplicate, 01 zero, 10 initial-pebble,
    11 trace; the last two need a traced program to expand against
    """

    name = "combined"
    PREFIXES = {"duplicate": "00", "zero": "01", "initial-pebble": "10", "trace": "11"}

    def __init__(self, S: int, context: Optional[TraceContext] = None):
        self.variants: Dict[str, DescriptionSystem] = {
            "00": DuplicateSplice(S),
            "01": ZeroCollision(S),
        }
        if context is not None:
            self.variants["10"] = InitialPebbleSystem(context)
            self.variants["11"] = TraceSystem(context)

    def encode(self, variant: str, body: str) -> str:
        return self.PREFIXES[variant] + body

    def expand(self, d: str) -> str:
        variant = self.variants.get(d[:2])
        if variant is None:
            return ""
        return variant.expand(d[2:])


def find_incompressible(system: DescriptionSystem, length: int) -> str:
    """
    Least length-`length` string no shorter description expands to

    There are 2^l strings of length l but only 2^l - 1 descriptions shorter
    than l, so one always exists.

    Raises:
        BudgetTooLarge: length above settings.INCOMPRESSIBLE_MAX_LENGTH
    """
    if length < 0:
        raise ValueError(f"length must be nonnegative, got {length}")
    if length > settings.INCOMPRESSIBLE_MAX_LENGTH:
        raise BudgetTooLarge(
            f"length {length} exceeds cap {settings.INCOMPRESSIBLE_MAX_LENGTH}"
        )

    described = set()
    for size in range(length):
        for bits in itertools.product("01", repeat=size):
            y = system.expand("".join(bits))
            if len(y) == length:
                described.add(y)

    for value in range(1 << length):
        candidate = to_bits(value, length)
        if candidate not in described:
            logger.debug(
                f"{system.name}: {len(described)} of {1 << length} strings of length "
                f"{length} described, first incompressible {candidate!r}"
            )
            return candidate
    raise NoIncompressible(f"{system.name} describes every string of length {length}")
