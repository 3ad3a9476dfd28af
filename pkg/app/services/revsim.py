"""
Reversible VM service

Landauer embedding, Lecerf reversal, the Bennett checkpoint copy and the
full hierarchical Bennett(k, n) simulation of an irreversible machine, with
space/time metering and bidirectional replay auditing.
"""

import heapq
import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import (
    CapacityExceeded,
    CorruptHistory,
    FormatError,
    NonInvertibleEvent,
    SlotOutOfRange,
    TraceMismatch,
    VmFault,
)
from app.models.bits import from_bits, from_hex, to_bits, to_hex
from app.models.oracle import OracleTape, join_tape, split_tape
from app.models.pebble import MoveKind, Schedule
from app.models.vm import (
    INVERSE_OPS,
    TABLE_MAX_WIDTH,
    HistoryRecord,
    Instruction,
    IrrevMachine,
    Machine,
    MicroOp,
    OracleMachine,
    Program,
    Trace,
    TraceEvent,
    VmState,
)
from app.schemas.revsim import AuditReport, SimReport
from app.services.pebble import bennett_schedule

logger = logging.getLogger(__name__)

# (tape, time) -> tape
QueryHandler = Callable[[OracleTape, int], OracleTape]

History = Tuple[HistoryRecord, ...]


def table_machine(width: int, table: Sequence[int]) -> IrrevMachine:
    return IrrevMachine(width, table=tuple(int(v) for v in table))


def random_machine(width: int, seed: int) -> IrrevMachine:
    """
    Seeded pseudo-random step rule

    Widths up to TABLE_MAX_WIDTH get an explicit table drawn with numpy;
    wider configurations use a keyed hash of the configuration.
    """
    if width <= TABLE_MAX_WIDTH:
        rng = np.random.default_rng(seed)
        table = rng.integers(0, 1 << width, size=1 << width)
        return IrrevMachine(width, table=tuple(int(v) for v in table), seed=seed)
    return IrrevMachine(width, seed=seed)


def landauer_run(m: IrrevMachine, init: int, steps: int) -> Tuple[int, History]:
    """
    Run `steps` steps, saving a record of every overwritten configuration

    Returns:
        (final configuration, history with exactly `steps` records)
    """
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")
    current = init
    history: List[HistoryRecord] = []
    for index in range(steps):
        history.append(HistoryRecord(index, current))
        current = m.step(current)
    return current, tuple(history)


def _unstep(m: IrrevMachine, current: int, history: History) -> Tuple[int, History]:
    if not history:
        raise CorruptHistory("no history record left to uncompute")
    record = history[-1]
    if record.index != len(history) - 1:
        raise CorruptHistory(
            f"record index {record.index} at depth {len(history)}: history truncated or reordered"
        )
    if m.step(record.previous) != current:
        raise CorruptHistory(
            f"record {record.index} does not step to the current configuration"
        )
    return record.previous, history[:-1]


def lecerf_reverse(m: IrrevMachine, final: int, history: History) -> int:
    """
    Uncompute a Landauer run, consuming its whole history

    Raises:
        CorruptHistory: a record is inconsistent with backward application
    """
    current = final
    while history:
        current, history = _unstep(m, current, history)
    return current


def initial_state(width: int, init: int, capacity: int) -> VmState:
    return VmState(width=width, checkpoints=(init,) + (0,) * capacity)


def _check_slot(vm: VmState, slot: int, allow_origin: bool = True) -> None:
    low = 0 if allow_origin else 1
    if not low <= slot <= vm.capacity:
        raise SlotOutOfRange(f"slot {slot} outside {low}..{vm.capacity}")


def _xor_slot(vm: VmState, slot: int, value: int) -> VmState:
    # A write into a free slot fills it, the matching second write frees it
    checkpoints = list(vm.checkpoints)
    checkpoints[slot] ^= value
    occupied = vm.occupied ^ {slot} if slot else vm.occupied
    return replace(vm, checkpoints=tuple(checkpoints), occupied=occupied)


def bennett_checkpoint_copy(vm: VmState, slot: int) -> VmState:
    """
    checkpoints[slot] ^= current; its own inverse

    Raises:
        SlotOutOfRange: slot outside 1..capacity
    """
    _check_slot(vm, slot, allow_origin=False)
    return _xor_slot(vm, slot, vm.current)


def _toggle_tape(vm: VmState, text: OracleTape) -> VmState:
    if vm.oracle_tape == "":
        return replace(vm, oracle_tape=text)
    if vm.oracle_tape == text:
        return replace(vm, oracle_tape="")
    raise VmFault(f"tape holds {vm.oracle_tape!r}, cannot toggle {text!r}")


def _apply(
    vm: VmState,
    instr: Instruction,
    machine: Optional[Machine],
    handler: Optional[QueryHandler],
    time: int,
) -> VmState:
    # Applies one micro-op without touching the clock
    op = instr.op
    if op is MicroOp.LOAD:
        _check_slot(vm, instr.a)
        return replace(vm, current=vm.current ^ vm.checkpoints[instr.a])
    if op is MicroOp.COPY:
        _check_slot(vm, instr.a)
        return _xor_slot(vm, instr.a, vm.current)
    if op in (MicroOp.STEP, MicroOp.UNSTEP):
        if not isinstance(machine, IrrevMachine):
            raise VmFault(f"{op.value} needs a step-rule machine")
        if op is MicroOp.STEP:
            record = HistoryRecord(len(vm.history), vm.current)
            return replace(
                vm, current=machine.step(vm.current), history=vm.history + (record,)
            )
        current, history = _unstep(machine, vm.current, vm.history)
        return replace(vm, current=current, history=history)
    if op is MicroOp.TAPE_WRITE:
        _check_slot(vm, instr.a)
        return _toggle_tape(vm, to_bits(vm.checkpoints[instr.a], vm.width))
    if op is MicroOp.TAPE_PAIR:
        _check_slot(vm, instr.a)
        _check_slot(vm, instr.b)
        pair = join_tape(
            to_bits(vm.checkpoints[instr.a], vm.width),
            to_bits(vm.checkpoints[instr.b], vm.width),
        )
        return _toggle_tape(vm, pair)
    if op is MicroOp.COPY_RIGHT:
        _check_slot(vm, instr.a)
        parsed = split_tape(vm.oracle_tape)
        if parsed is None or parsed[1] is None or len(parsed[1]) != vm.width:
            raise VmFault(f"copy_right needs a width-{vm.width} pair, tape {vm.oracle_tape!r}")
        return _xor_slot(vm, instr.a, from_bits(parsed[1]))
    if op is MicroOp.QUERY:
        if handler is None:
            raise VmFault("query issued without an oracle")
        return replace(vm, oracle_tape=handler(vm.oracle_tape, time))
    raise NonInvertibleEvent(f"unknown micro-op {op!r}")


def execute(
    vm: VmState,
    instr: Instruction,
    machine: Optional[Machine],
    handler: Optional[QueryHandler] = None,
) -> Tuple[VmState, TraceEvent]:
    """Run one micro-op forward and record it"""
    time = vm.clock
    after = _apply(vm, instr, machine, handler, time)
    after = replace(after, clock=time + 1)
    if instr.op is MicroOp.QUERY:
        event = TraceEvent(time, instr, vm.oracle_tape, after.oracle_tape)
    else:
        event = TraceEvent(time, instr)
    return after, event


def undo(
    vm: VmState,
    instr: Instruction,
    machine: Optional[Machine],
    handler: Optional[QueryHandler] = None,
) -> VmState:
    """Run the inverse of the micro-op executed at clock - 1"""
    time = vm.clock - 1
    inverse = Instruction(INVERSE_OPS[instr.op], instr.a, instr.b)
    before = _apply(vm, inverse, machine, handler, time)
    return replace(before, clock=time)


def _move_ops(machine: Machine, kind: MoveKind, src: int, dst: int, seg_len: int) -> List[Instruction]:
    if isinstance(machine, IrrevMachine):
        # Pebbling and unpebbling are the same palindromic sequence
        return (
            [Instruction(MicroOp.LOAD, src)]
            + [Instruction(MicroOp.STEP)] * seg_len
            + [Instruction(MicroOp.COPY, dst)]
            + [Instruction(MicroOp.UNSTEP)] * seg_len
            + [Instruction(MicroOp.LOAD, src)]
        )
    ops = [
        Instruction(MicroOp.TAPE_WRITE, src),
        Instruction(MicroOp.QUERY),
        Instruction(MicroOp.COPY_RIGHT, dst),
        Instruction(MicroOp.TAPE_PAIR, src, dst),
    ]
    return ops if kind is MoveKind.PEBBLE else ops[::-1]


def compile_program(machine: Machine, schedule: Schedule, seg_len: int, capacity: int) -> Program:
    """
    Lower a pebble schedule to a straight-line reversible program

    Pebbled nodes get the lowest free checkpoint slot; node 0 (the initial
    configuration) lives in slot 0.

    Raises:
        CapacityExceeded: more live checkpoints than `capacity`
        VmFault: the schedule moves a node whose predecessor has no slot
    """
    if seg_len < 1:
        raise ValueError(f"seg_len must be at least 1, got {seg_len}")
    if isinstance(machine, OracleMachine) and seg_len != 1:
        raise ValueError("an oracle segment is exactly one query (seg_len=1)")

    slots: Dict[int, int] = {}
    free = list(range(1, capacity + 1))
    heapq.heapify(free)
    instructions: List[Instruction] = []
    move_starts: List[int] = []
    peak = 0

    for move in schedule.moves:
        if move.node == 1:
            src = 0
        elif move.node - 1 in slots:
            src = slots[move.node - 1]
        else:
            raise VmFault(f"{move}: node {move.node - 1} holds no checkpoint")

        if move.kind is MoveKind.PEBBLE:
            if move.node in slots:
                raise VmFault(f"{move}: node already checkpointed")
            if not free:
                raise CapacityExceeded(
                    f"{move}: all {capacity} checkpoint slots are in use"
                )
            dst = heapq.heappop(free)
            slots[move.node] = dst
        else:
            if move.node not in slots:
                raise VmFault(f"{move}: node holds no checkpoint")
            dst = slots.pop(move.node)
            heapq.heappush(free, dst)

        peak = max(peak, len(slots))
        move_starts.append(len(instructions))
        instructions.extend(_move_ops(machine, move.kind, src, dst, seg_len))

    return Program(
        machine=machine,
        instructions=tuple(instructions),
        capacity=capacity,
        move_starts=tuple(move_starts),
        slot_of_target=slots.get(schedule.target, 0),
        peak_live=peak,
    )


def oracle_handler(oracle) -> QueryHandler:
    """Wrap a GraphOracle or InputRom (anything with `.query`) as a handler"""
    return lambda tape, time: oracle.query(tape)


def direct_run(machine: Machine, init: int, steps: int, oracle=None) -> int:
    """Plain irreversible iteration used as the correctness reference"""
    if isinstance(machine, IrrevMachine):
        return machine.run(init, steps)
    if oracle is None:
        raise VmFault("an oracle machine needs an oracle")
    b = to_bits(init, machine.config_width)
    for _ in range(steps):
        parsed = split_tape(oracle.query(b))
        if parsed is None or parsed[1] is None:
            break
        b = parsed[1]
    return from_bits(b)


@dataclass(frozen=True)
class BennettRun:
    report: SimReport
    program: Program
    trace: Trace
    start: VmState
    end: VmState


def run_program(
    program: Program, start: VmState, handler: Optional[QueryHandler] = None
) -> Tuple[VmState, Trace, int]:
    """
    Execute a compiled program, recording every micro-op

    Returns:
        (end state, trace, peak history depth)

    Raises:
        VmFault: history left over at a pebble-move boundary
    """
    boundaries = set(program.move_starts)
    state = start
    events: List[TraceEvent] = []
    peak_depth = 0

    for index, instr in enumerate(program.instructions):
        if index in boundaries and state.history:
            raise VmFault(f"history not empty at move boundary (instruction {index})")
        state, event = execute(state, instr, program.machine, handler)
        events.append(event)
        peak_depth = max(peak_depth, len(state.history))

    if state.history:
        raise VmFault("history not empty after the last move")

    trace = Trace(start.width, start, tuple(events), program.machine)
    return state, trace, peak_depth


def run_bennett(
    machine: Machine,
    init: int,
    k: int,
    n: int,
    seg_len: int = 1,
    oracle=None,
    capacity: Optional[int] = None,
    seed: Optional[int] = None,
) -> BennettRun:
    """
    Bennett(k, n) simulation with its full trace

    Pebbling node j of a step-rule machine runs seg_len Landauer steps from
    checkpoint j-1, XOR-copies the result into the node's slot and
    Lecerf-reverses. For an oracle machine one query plays the segment.
    Unpebbling is the exact inverse sequence.
    """
    schedule = bennett_schedule(k, n)
    capacity = n * (k - 1) + 1 if capacity is None else capacity
    width = machine.config_width

    if isinstance(machine, OracleMachine):
        if oracle is None:
            raise VmFault("an oracle machine needs an oracle")
        handler: Optional[QueryHandler] = oracle_handler(oracle)
        kind = "oracle"
    else:
        handler = None
        kind = "step-rule"

    program = compile_program(machine, schedule, seg_len, capacity)
    start = initial_state(width, init, capacity)
    end, trace, peak_depth = run_program(program, start, handler)

    final = end.checkpoints[program.slot_of_target]
    direct = direct_run(machine, init, schedule.target * seg_len, oracle)
    report = SimReport(
        k=k,
        n=n,
        seg_len=seg_len,
        width=width,
        seed=seed,
        machine_kind=kind,
        final_checkpoint=final,
        direct_result=direct,
        peak_checkpoints=program.peak_live,
        peak_history_bits=peak_depth * width,
        total_microops=len(trace.events),
    )

    if report.matches_direct:
        logger.info(
            f"Bennett k={k} n={n} L={seg_len}: {len(trace.events)} micro-ops, "
            f"{program.peak_live} checkpoints, final matches direct run"
        )
    else:
        logger.warning(
            f"Bennett k={k} n={n} L={seg_len}: final {final:#x} differs from direct {direct:#x}"
        )
    return BennettRun(report, program, trace, start, end)


def simulate_bennett(
    m: Machine,
    init: int,
    k: int,
    n: int,
    seg_len: int = 1,
    oracle=None,
    capacity: Optional[int] = None,
    seed: Optional[int] = None,
) -> SimReport:
    """Bennett(k, n) simulation report (see run_bennett)"""
    return run_bennett(m, init, k, n, seg_len, oracle, capacity, seed).report


def _replay_query(vm: VmState, expected: Optional[str], result: Optional[str], event: TraceEvent) -> VmState:
    if expected is None or result is None:
        raise NonInvertibleEvent(f"query at {event.time} has no recorded tapes")
    if vm.oracle_tape != expected:
        raise TraceMismatch(
            f"query at {event.time}: tape {vm.oracle_tape!r}, trace expects {expected!r}"
        )
    return replace(vm, oracle_tape=result)


def replay_backward(trace: Trace, end_state: VmState, machine: Optional[Machine] = None) -> VmState:
    """
    Apply inverse micro-ops in reverse order, returning the start state

    Queries are undone from the recorded tapes, so no oracle is needed.

    Raises:
        TraceMismatch: clock gap or tape disagreement (missing/altered event)
        NonInvertibleEvent: an event without a defined inverse
    """
    machine = machine or trace.machine
    state = end_state
    for event in reversed(trace.events):
        if event.instruction.op not in INVERSE_OPS:
            raise NonInvertibleEvent(f"event at {event.time} has no inverse")
        if event.time != state.clock - 1:
            raise TraceMismatch(f"event at {event.time} but state clock is {state.clock}")
        if event.is_query:
            state = _replay_query(state, event.tape_after, event.tape_before, event)
            state = replace(state, clock=event.time)
        else:
            state = undo(state, event.instruction, machine)
    return state


def _replay_event(state: VmState, event: TraceEvent, machine: Optional[Machine]) -> VmState:
    if event.time != state.clock:
        raise TraceMismatch(f"event at {event.time} but state clock is {state.clock}")
    if event.is_query:
        state = _replay_query(state, event.tape_before, event.tape_after, event)
        return replace(state, clock=event.time + 1)
    state, _ = execute(state, event.instruction, machine)
    return state


def iter_states(trace: Trace, machine: Optional[Machine] = None) -> Iterator[VmState]:
    """Yield the configuration at every clock value the trace spans"""
    machine = machine or trace.machine
    state = trace.start
    yield state
    for event in trace.events:
        state = _replay_event(state, event, machine)
        yield state


def replay_forward(
    trace: Trace,
    start: Optional[VmState] = None,
    machine: Optional[Machine] = None,
    until: Optional[int] = None,
) -> VmState:
    """
    Re-execute a trace from its start state (optionally up to clock `until`)

    Raises:
        TraceMismatch: clock gap or tape disagreement
    """
    machine = machine or trace.machine
    state = trace.start if start is None else start
    for event in trace.events:
        if until is not None and event.time >= until:
            break
        state = _replay_event(state, event, machine)
    return state


def state_at(trace: Trace, tau: int) -> VmState:
    """C_tau: the configuration at clock tau"""
    first = trace.start.clock
    if not first <= tau <= first + len(trace.events):
        raise ValueError(f"tau {tau} outside {first}..{first + len(trace.events)}")
    return replay_forward(trace, until=tau)


def suffix_trace(trace: Trace, tau: int) -> Trace:
    """The part of a trace from clock tau on, starting from C_tau"""
    start = state_at(trace, tau)
    events = tuple(e for e in trace.events if e.time >= tau)
    return Trace(trace.width, start, events, trace.machine)


def audit_run(run: BennettRun) -> AuditReport:
    """Check both replay directions against the recorded start and end"""
    forward_ok = replay_forward(run.trace) == run.end
    backward_ok = replay_backward(run.trace, run.end) == run.start
    if not (forward_ok and backward_ok):
        logger.error(f"Replay audit failed: forward={forward_ok} backward={backward_ok}")
    return AuditReport(
        events=len(run.trace.events), forward_ok=forward_ok, backward_ok=backward_ok
    )


# Text formats


def _tape_token(tape: Optional[str]) -> str:
    return tape if tape else "-"


def _token_tape(token: str) -> str:
    return "" if token == "-" else token


def _parse_instruction(token: str) -> Instruction:
    name, _, operands = token.partition(":")
    try:
        op = MicroOp(name)
    except ValueError as e:
        raise NonInvertibleEvent(f"unknown micro-op {name!r}") from e
    values = [int(v) for v in operands.split(",")] if operands else []
    return Instruction(op, *values)


def dump_trace(trace: Trace) -> str:
    """
    Line format `<clock> <op-kind> [<tape-before> <tape-after>]`

    The header carries the width and the start configuration in hex; an
    empty tape is written as `-`.
    """
    start = trace.start
    lines = [
        f"width={trace.width} init={to_hex(start.checkpoints[0], trace.width)} "
        f"capacity={start.capacity} events={len(trace.events)}"
    ]
    for event in trace.events:
        line = f"{event.time} {event.instruction.token()}"
        if event.is_query:
            line += f" {_tape_token(event.tape_before)} {_tape_token(event.tape_after)}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def load_trace(text: str, machine: Optional[Machine] = None) -> Trace:
    """
    Parse the trace text format (start state from the header)

    Raises:
        FormatError: malformed header or event line
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("empty trace file")
    try:
        header = dict(token.split("=", 1) for token in lines[0].split())
        width = int(header["width"])
        start = initial_state(width, from_hex(header["init"]), int(header["capacity"]))
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad trace header: {e}") from e

    events: List[TraceEvent] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) not in (2, 4) or not parts[0].isdigit():
            raise FormatError(f"line {lineno}: bad event {line!r}")
        instruction = _parse_instruction(parts[1])
        if len(parts) == 4:
            events.append(
                TraceEvent(int(parts[0]), instruction, _token_tape(parts[2]), _token_tape(parts[3]))
            )
        else:
            events.append(TraceEvent(int(parts[0]), instruction))
    return Trace(width, start, tuple(events), machine)


def dump_state(vm: VmState) -> str:
    """Text dump of a VM configuration (the C_tau snapshot format)"""
    lines = [
        f"width={vm.width} clock={vm.clock} capacity={vm.capacity}",
        f"current {to_hex(vm.current, vm.width)}",
        f"tape {_tape_token(vm.oracle_tape)}",
        "checkpoints " + " ".join(to_hex(v, vm.width) for v in vm.checkpoints),
        "occupied " + " ".join(str(slot) for slot in sorted(vm.occupied)),
        "history " + " ".join(f"{r.index}:{to_hex(r.previous, vm.width)}" for r in vm.history),
    ]
    return "\n".join(lines) + "\n"


def load_state(text: str) -> VmState:
    lines = text.splitlines()
    try:
        header = dict(token.split("=", 1) for token in lines[0].split())
        width = int(header["width"])
        fields = {}
        for line in lines[1:]:
            key, _, rest = line.partition(" ")
            fields[key] = rest.split()
        history = tuple(
            HistoryRecord(int(index), from_hex(value))
            for index, value in (item.split(":") for item in fields.get("history", []))
        )
        tape = fields.get("tape", ["-"])
        return VmState(
            width=width,
            current=from_hex(fields["current"][0]),
            history=history,
            checkpoints=tuple(from_hex(v) for v in fields["checkpoints"]),
            oracle_tape=_token_tape(tape[0] if tape else "-"),
            clock=int(header["clock"]),
            occupied=frozenset(int(slot) for slot in fields.get("occupied", [])),
        )
    except (IndexError, KeyError, ValueError) as e:
        raise FormatError(f"bad state dump: {e}") from e
