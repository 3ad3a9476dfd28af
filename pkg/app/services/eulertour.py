"""
Euler-tour service

Linear-space reversible simulation: walk the configuration tree around the
initial configuration by the right-hand rule, one invertible tour step at a
time, pruning configurations wider than a cap.
"""

import logging
import re
from typing import Dict, List, Optional, Set

import numpy as np

from app.core.config import settings
from app.core.errors import BijectivityViolation, FormatError, StepCapExceeded
from app.models.bits import from_hex, to_hex
from app.models.eulertour import ExplicitMachine, TourState, config_size
from app.schemas.eulertour import TourAudit, TourResult

logger = logging.getLogger(__name__)

# Widest heap index used by the binary-tree family (depth up to 10)
TREE_WIDTH = 11


def state_bits(state: TourState) -> int:
    """Bits a tour state occupies: configuration plus slot counter"""
    return config_size(state.current) + state.slot.bit_length()


def predecessors(m: ExplicitMachine, c: int, width_cap: Optional[int] = None) -> List[int]:
    """All c' with transition(c') = c, ascending, optionally within a width cap"""
    preds = m.inverse.get(c, [])
    if width_cap is None:
        return list(preds)
    return [p for p in preds if config_size(p) <= width_cap]


class Tour:
    """
    Tour step function over (configuration, slot) states

    The neighbours of c are its predecessors in ascending order followed by
    its successor. Leaving by slot s+1 and entering by the slot the edge has
    at the far end makes each step invertible.
    """

    def __init__(self, machine: ExplicitMachine, width_cap: int):
        if width_cap < 1:
            raise ValueError(f"width_cap must be positive, got {width_cap}")
        self.machine = machine
        self.width_cap = width_cap
        self.start_bits = 0
        self.peak_bits = 0

    def neighbours(self, c: int) -> List[int]:
        nbrs = predecessors(self.machine, c, self.width_cap)
        successor = self.machine.successor(c)
        if successor is not None and config_size(successor) <= self.width_cap:
            nbrs.append(successor)
        return nbrs

    def _held(self, state: TourState) -> TourState:
        self.peak_bits = max(self.peak_bits, state_bits(state))
        return state

    def _entry_slot(self, source: int, target: int, via_successor: bool) -> int:
        nbrs = self.neighbours(target)
        if via_successor:
            # source is one of target's predecessors
            return nbrs.index(source)
        return len(nbrs) - 1

    def start(self) -> TourState:
        initial = self.machine.initial
        if config_size(initial) > self.width_cap:
            raise ValueError(f"initial configuration exceeds width cap {self.width_cap}")
        start = TourState(initial, max(len(self.neighbours(initial)) - 1, 0))
        self.start_bits = state_bits(start)
        return self._held(start)

    def step(self, state: TourState) -> TourState:
        nbrs = self.neighbours(state.current)
        if not nbrs:
            return state
        slot = (state.slot + 1) % len(nbrs)
        target = nbrs[slot]
        via_successor = slot == len(nbrs) - 1 and self.machine.successor(state.current) == target
        return self._held(TourState(target, self._entry_slot(state.current, target, via_successor)))

    def unstep(self, state: TourState) -> TourState:
        nbrs = self.neighbours(state.current)
        if not nbrs:
            return state
        source = nbrs[state.slot]
        # Entered through the successor edge of `source` iff we are its successor
        via_successor = state.slot < len(nbrs) - 1 or self.machine.successor(
            state.current
        ) != source
        source_nbrs = self.neighbours(source)
        if via_successor:
            exit_slot = len(source_nbrs) - 1
        else:
            exit_slot = source_nbrs.index(state.current)
        return self._held(TourState(source, (exit_slot - 1) % len(source_nbrs)))

    def storage_bits(self, output: Optional[int] = None) -> int:
        """
        Peak bits held so far: the widest running state, the start copy and
        the copied-out result when there is one
        """
        output_bits = 0 if output is None else config_size(output)
        return self.peak_bits + self.start_bits + output_bits


def euler_tour(
    m: ExplicitMachine, width_cap: int, step_cap: Optional[int] = None
) -> TourResult:
    """
    Reversible search for the halting configuration reachable from initial

    On reaching a halting configuration the result is copied out and the
    tour is run backward to its start state, so total_steps is twice the
    forward length. A tour that returns to its start state without meeting
    a halting configuration reports found=False.

    Raises:
        StepCapExceeded: the forward tour did not finish within step_cap
    """
    step_cap = settings.EULER_DEFAULT_STEP_CAP if step_cap is None else step_cap
    tour = Tour(m, width_cap)
    start = tour.start()

    if m.halts(start.current):
        return TourResult(
            found=True,
            final=start.current,
            peak_storage_bits=tour.storage_bits(start.current),
            width_cap=width_cap,
        )

    state = start
    steps = 0
    while True:
        if steps >= step_cap:
            raise StepCapExceeded(f"tour not finished after {step_cap} steps")
        state = tour.step(state)
        steps += 1
        if m.halts(state.current):
            break
        if state == start:
            logger.debug(f"Tour closed after {steps} steps without a halting configuration")
            return TourResult(
                found=False,
                forward_steps=steps,
                total_steps=steps,
                peak_storage_bits=tour.storage_bits(),
                width_cap=width_cap,
            )

    # Walk back until the running state equals the start copy
    final = state.current
    for _ in range(steps):
        state = tour.unstep(state)
        if state == start:
            break
    if state != start:
        raise BijectivityViolation(f"backward tour ended at {state}, not {start}")

    logger.debug(f"Found halting configuration {final:#x} after {steps} tour steps")
    return TourResult(
        found=True,
        final=final,
        forward_steps=steps,
        total_steps=2 * steps,
        peak_storage_bits=tour.storage_bits(final),
        width_cap=width_cap,
    )


def tour_audit(
    m: ExplicitMachine, width_cap: int, step_cap: Optional[int] = None
) -> TourAudit:
    """
    Walk one full tour cycle and check the step function is a bijection

    Every state must be entered once and left once, unstep must undo step,
    and replaying the tour backward must return to the start state.

    Raises:
        BijectivityViolation: any state with in- or out-degree other than one
        StepCapExceeded: the cycle is longer than step_cap
    """
    step_cap = settings.EULER_DEFAULT_STEP_CAP if step_cap is None else step_cap
    tour = Tour(m, width_cap)
    start = tour.start()

    states = [start]
    seen: Set[TourState] = {start}
    violations = 0
    state = start
    while True:
        if len(states) > step_cap:
            raise StepCapExceeded(f"tour cycle longer than {step_cap} steps")
        following = tour.step(state)
        if tour.unstep(following) != state:
            violations += 1
        if following == start:
            break
        if following in seen:
            violations += 1
            break
        seen.add(following)
        states.append(following)
        state = following

    # A single isolated configuration steps onto itself: a tour of length 0
    length = 0 if states == [start] and tour.step(start) == start else len(states)

    back = tour.step(states[-1]) if length else start
    for _ in range(length):
        back = tour.unstep(back)
    returned = back == start

    if violations or not returned:
        raise BijectivityViolation(
            f"{violations} states break bijectivity; back at start: {returned}"
        )
    return TourAudit(
        states=length,
        violations=0,
        returned_to_start=returned,
        peak_storage_bits=tour.storage_bits(),
    )


def direct_run(m: ExplicitMachine, width_cap: int, step_cap: Optional[int] = None) -> Optional[int]:
    """
    Irreversible reference: follow successors from initial

    Returns the halting configuration, or None when the run cycles or
    leaves the width cap.
    """
    step_cap = settings.EULER_DEFAULT_STEP_CAP if step_cap is None else step_cap
    config = m.initial
    visited = {config}
    for _ in range(step_cap):
        successor = m.successor(config)
        if successor is None:
            return config
        if config_size(successor) > width_cap or successor in visited:
            return None
        visited.add(successor)
        config = successor
    raise StepCapExceeded(f"direct run not finished after {step_cap} steps")


def binary_tree_machine(depth: int, width: int = TREE_WIDTH) -> ExplicitMachine:
    """
    Complete binary tree in heap order, every node stepping to its parent

    The root 1 halts; the run starts at the leftmost leaf 2^depth.
    """
    if not 0 <= depth < width:
        raise ValueError(f"depth must lie in 0..{width - 1}, got {depth}")
    transition = {i: i // 2 for i in range(2, 1 << (depth + 1))}
    return ExplicitMachine(width, transition, initial=1 << depth)


def random_machine(width: int, seed: int, halt_fraction: float = 0.1) -> ExplicitMachine:
    """Seeded random successor table over all width-bit configurations"""
    rng = np.random.default_rng(seed)
    size = 1 << width
    targets = rng.integers(0, size, size=size)
    halting = rng.random(size) < halt_fraction
    transition = {c: int(targets[c]) for c in range(size) if not halting[c]}
    initial = int(rng.integers(0, size))
    return ExplicitMachine(width, transition, initial)


_LINE = re.compile(r"^\s*([0-9a-fA-F]+)\s*->\s*([0-9a-fA-F]+)\s*$")


def dump_machine(m: ExplicitMachine) -> str:
    """Header `width=<bits> initial=<hex>`, then `<hex> -> <hex>` lines"""
    lines = [f"width={m.width} initial={to_hex(m.initial, m.width)}"]
    lines += [
        f"{to_hex(source, m.width)} -> {to_hex(m.transition[source], m.width)}"
        for source in sorted(m.transition)
    ]
    return "\n".join(lines) + "\n"


def load_machine(text: str) -> ExplicitMachine:
    """
    Parse a machine table file; absent configurations halt

    Raises:
        FormatError: bad header, bad line or a configuration listed twice
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("empty machine file")
    try:
        header = dict(token.split("=", 1) for token in lines[0].split())
        width = int(header["width"])
        initial = from_hex(header.get("initial", "0"))
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad machine header: {e}") from e

    transition: Dict[int, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        match = _LINE.match(line)
        if not match:
            raise FormatError(f"line {lineno}: expected '<hex> -> <hex>', got {line!r}")
        source, target = from_hex(match.group(1)), from_hex(match.group(2))
        if source in transition:
            raise FormatError(f"line {lineno}: configuration {match.group(1)} listed twice")
        transition[source] = target
    try:
        return ExplicitMachine(width, transition, initial)
    except ValueError as e:
        raise FormatError(str(e)) from e
