"""
Reversible pebble game service

Rules, Bennett's recursive strategy, replay metrics and the exhaustive
minimal-pebble search over chains.
"""

import logging
from collections import deque
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from app.core.config import settings
from app.core.errors import (
    BudgetTooLarge,
    FormatError,
    IllegalMove,
    NotReachable,
    ScheduleOverflow,
)
from app.models.pebble import Move, MoveKind, PebbleState, Schedule
from app.schemas.pebble import Metrics, SearchResult

logger = logging.getLogger(__name__)

# Largest chain index a schedule may target
MAX_CHAIN_LENGTH = 2**31 - 1


def apply_move(state: PebbleState, move: Move) -> PebbleState:
    """
    Toggle one node, enforcing the pebble game rules

    Node 1 is always toggleable; any other node only while its predecessor
    is pebbled. The move kind must match the node's current status.

    Raises:
        IllegalMove: predecessor unpebbled, node out of range, or wrong kind
    """
    node = move.node
    if not 1 <= node <= state.chain_length:
        raise IllegalMove(f"node {node} outside chain 1..{state.chain_length}")
    if node != 1 and (node - 1) not in state.pebbled:
        raise IllegalMove(f"{move}: predecessor {node - 1} is not pebbled")

    if move.kind is MoveKind.PEBBLE:
        if node in state.pebbled:
            raise IllegalMove(f"{move}: node {node} is already pebbled")
        pebbled = state.pebbled | {node}
    else:
        if node not in state.pebbled:
            raise IllegalMove(f"{move}: node {node} is not pebbled")
        pebbled = state.pebbled - {node}

    return PebbleState(state.chain_length, frozenset(pebbled))


def reverse_moves(moves: Sequence[Move]) -> List[Move]:
    """The exact undo sequence: reversed order, kinds flipped"""
    return [move.inverse() for move in reversed(moves)]


def _advance(k: int, level: int, base: int) -> List[Move]:
    # Pebbles node base + k^level starting from a pebble on `base`,
    # leaving every other pebble as it was.
    if level == 0:
        return [Move(base + 1, MoveKind.PEBBLE)]

    span = k ** (level - 1)
    moves: List[Move] = []
    parts: List[List[Move]] = []
    for i in range(k):
        part = _advance(k, level - 1, base + i * span)
        moves.extend(part)
        parts.append(part)

    # Undo all but the production of the final checkpoint
    for part in reversed(parts[:-1]):
        moves.extend(reverse_moves(part))
    return moves


def bennett_schedule(k: int, n: int) -> Schedule:
    """
    Bennett's hierarchical strategy reaching node k^n

    The schedule has (2k-1)^n moves and never holds more than n(k-1)+1
    pebbles. It ends with exactly {k^n} pebbled.

    Raises:
        ValueError: k < 2 or n < 0
        ScheduleOverflow: k^n exceeds MAX_CHAIN_LENGTH
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if k**n > MAX_CHAIN_LENGTH:
        raise ScheduleOverflow(f"k^n = {k}^{n} exceeds chain limit {MAX_CHAIN_LENGTH}")

    moves = _advance(k, n, 0)
    logger.debug(f"Bennett schedule k={k} n={n}: {len(moves)} moves to node {k**n}")
    return Schedule(k=k, n=n, moves=tuple(moves))


def replay(
    moves: Iterable[Move], chain_length: int, state: Optional[PebbleState] = None
) -> PebbleState:
    """Apply moves in order starting from `state` (default empty)"""
    current = state or PebbleState(chain_length)
    for move in moves:
        current = apply_move(current, move)
    return current


def schedule_metrics(schedule: Schedule) -> Metrics:
    """
    Replay a schedule from the empty state and measure it

    Each move costs two segment-time units (forward and backward phase of
    a segment simulation); the target counts as reached at the end of the
    forward phase of its pebbling move, so first_reach_time = 2m - 1.

    Raises:
        IllegalMove: the schedule is not legal
    """
    target = schedule.target
    chain_length = max([target] + [m.node for m in schedule.moves])
    state = PebbleState(chain_length)

    max_pebbles = 0
    first_reach: Optional[int] = None
    for index, move in enumerate(schedule.moves, start=1):
        state = apply_move(state, move)
        max_pebbles = max(max_pebbles, len(state))
        if first_reach is None and move.node == target and move.kind is MoveKind.PEBBLE:
            first_reach = index

    return Metrics(
        total_moves=len(schedule.moves),
        max_pebbles=max_pebbles,
        first_reach_move=first_reach,
        first_reach_time=None if first_reach is None else 2 * first_reach - 1,
    )


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _bfs(t: int, budget: int) -> Tuple[Optional[int], Dict[int, Tuple[int, int]]]:
    # States are bitmasks, bit j-1 for node j. Returns the first state that
    # holds node t and the parent map (state -> (previous state, node)).
    target_bit = 1 << (t - 1)
    parents: Dict[int, Tuple[int, int]] = {0: (-1, 0)}
    queue = deque([0])

    while queue:
        mask = queue.popleft()
        if mask & target_bit:
            return mask, parents
        # Lowest node index first for deterministic witnesses
        for node in range(1, t + 1):
            if node != 1 and not mask & (1 << (node - 2)):
                continue
            nxt = mask ^ (1 << (node - 1))
            if nxt in parents or _popcount(nxt) > budget:
                continue
            parents[nxt] = (mask, node)
            queue.append(nxt)

    return None, parents


def _witness(goal: int, parents: Dict[int, Tuple[int, int]]) -> List[Move]:
    moves: List[Move] = []
    mask = goal
    while mask != 0:
        previous, node = parents[mask]
        kind = MoveKind.PEBBLE if mask & (1 << (node - 1)) else MoveKind.UNPEBBLE
        moves.append(Move(node, kind))
        mask = previous
    moves.reverse()
    return moves


def search_strategy(t: int, pebble_budget_limit: Optional[int] = None) -> SearchResult:
    """
    Exhaustive minimal-pebble search with one optimal witness

    Breadth-first search over pebble sets, iterative deepening on the
    pebble budget.

    Raises:
        ValueError: t < 1
        BudgetTooLarge: t above settings.PEBBLE_SEARCH_MAX_NODES
        NotReachable: no strategy within pebble_budget_limit
            (default settings.PEBBLE_SEARCH_MAX_BUDGET)
    """
    if t < 1:
        raise ValueError(f"chain length must be positive, got {t}")
    if t > settings.PEBBLE_SEARCH_MAX_NODES:
        raise BudgetTooLarge(
            f"chain length {t} exceeds search cap {settings.PEBBLE_SEARCH_MAX_NODES}"
            f" (2^{t} states per budget)"
        )

    limit = settings.PEBBLE_SEARCH_MAX_BUDGET if pebble_budget_limit is None else pebble_budget_limit
    explored = 0
    for budget in range(1, limit + 1):
        goal, parents = _bfs(t, budget)
        explored += len(parents)
        if goal is not None:
            witness = _witness(goal, parents)
            logger.info(
                f"Chain of {t} nodes needs {budget} pebbles "
                f"({explored} states, witness of {len(witness)} moves)"
            )
            return SearchResult(
                chain_length=t,
                min_pebbles=budget,
                states_explored=explored,
                witness=[str(m) for m in witness],
            )

    raise NotReachable(f"node {t} not reachable with at most {limit} pebbles")


def min_pebbles(t: int, pebble_budget_limit: Optional[int] = None) -> int:
    """Smallest peak pebble count of any strategy that pebbles node t"""
    return search_strategy(t, pebble_budget_limit).min_pebbles


def dump_moves(moves: Iterable[Move]) -> str:
    """One move per line, `P <idx>` / `U <idx>`, newline-terminated"""
    return "".join(f"{move}\n" for move in moves)


def parse_moves(text: str) -> List[Move]:
    """
    Parse the `P <idx>` / `U <idx>` format

    Raises:
        FormatError: malformed line
    """
    moves: List[Move] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("P", "U") or not parts[1].isdigit():
            raise FormatError(f"line {lineno}: expected 'P <idx>' or 'U <idx>', got {line!r}")
        moves.append(Move(int(parts[1]), MoveKind(parts[0])))
    return moves
