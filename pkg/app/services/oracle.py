"""
Oracle service

Self-reversible graph oracles, the seeded chain construction, the SEPARATOR
decider and the read-only input ROM with its pointer-chasing result bit.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from app.core.errors import FormatError, Infeasible, NotSelfReversible
from app.models.bits import from_hex, to_hex
from app.models.oracle import (
    Bounds,
    Chain,
    GraphOracle,
    InputRom,
    OracleTape,
    chain_successors,
    join_tape,
    split_tape,
)
from app.schemas.oracle import SeparatorResult

logger = logging.getLogger(__name__)


def oracle_call(o: GraphOracle, tape: OracleTape) -> OracleTape:
    """
    One graph-oracle query

    b -> b#f(b), b#f(b) -> b, anything else maps to itself.
    """
    return o.query(tape)


def draw_word(rng: np.random.Generator, width: int) -> int:
    """Uniform width-bit integer from a numpy generator"""
    nbytes = (width + 7) // 8
    raw = int.from_bytes(rng.bytes(nbytes), "big")
    return raw >> (8 * nbytes - width)


def draw_bits(rng: np.random.Generator, count: int) -> str:
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=count))


def chain_oracle(chain: Chain) -> GraphOracle:
    """The graph oracle with f(q_(j-1)) = q_j, undefined elsewhere"""
    return GraphOracle(chain_successors(chain))


def build_chain_oracle(
    S: int, t: int, seed: int, extra_bits: int = 0
) -> Tuple[GraphOracle, Chain]:
    """
    Seeded chain q_1..q_t of distinct non-zero width-S nodes

    Pseudo-random nodes stand in for an incompressible x; duplicates and the
    all-zero start node are rejected and redrawn.

    Args:
        S: node width in bits
        t: chain length
        seed: numpy generator seed, recorded on the chain
        extra_bits: leftover bits of x beyond t*S

    Raises:
        Infeasible: t + 1 > 2^S
    """
    if S < 1:
        raise ValueError(f"S must be positive, got {S}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t + 1 > 1 << S:
        raise Infeasible(f"{t + 1} distinct nodes requested but only {1 << S} exist")

    rng = np.random.default_rng(seed)
    seen = {0}
    nodes: List[int] = []
    rejected = 0
    while len(nodes) < t:
        q = draw_word(rng, S)
        if q in seen:
            rejected += 1
            continue
        seen.add(q)
        nodes.append(q)

    if rejected:
        logger.debug(f"Chain S={S} t={t} seed={seed}: resampled {rejected} collisions")

    chain = Chain(S, tuple(nodes), draw_bits(rng, extra_bits), seed)
    return chain_oracle(chain), chain


def build_chain_for_bounds(bounds: Bounds, seed: int) -> Tuple[GraphOracle, Chain]:
    """Chain of t = floor(T/S) nodes with the T - t*S leftover bits of x"""
    return build_chain_oracle(
        bounds.S, bounds.t, seed, extra_bits=bounds.T - bounds.t * bounds.S
    )


def separator_decide(o: GraphOracle, bounds: Bounds) -> SeparatorResult:
    """
    Algorithm SEPARATOR

    Starts from b = 0^S and follows the chain for up to floor(T/S) queries.
    After reading c off b#c a second query restores the tape to b before b is
    overwritten with c. Accepts iff the final b starts with 1.
    """
    b = "0" * bounds.S
    calls = 0
    for _ in range(bounds.t):
        tape = oracle_call(o, b)
        calls += 1
        parsed = split_tape(tape)
        if parsed is None or parsed[1] is None:
            # Quit loop early
            break
        restored = oracle_call(o, tape)
        calls += 1
        if restored != b:
            raise NotSelfReversible(f"oracle is not self-reversible on {b!r}")
        b = parsed[1]

    accepted = b.startswith("1")
    logger.debug(f"SEPARATOR: {'accept' if accepted else 'reject'} after {calls} calls")
    return SeparatorResult(accepted=accepted, oracle_calls=calls, final_node=b)


def rom_get_size(rom: InputRom, tape: OracleTape) -> OracleTape:
    """Empty tape <-> b in binary; any other tape is a no-op"""
    return rom.get_size(tape)


def rom_access_word(rom: InputRom, tape: OracleTape) -> OracleTape:
    """Address a <-> pair (a, I[a]); any other tape is a no-op"""
    return rom.access_word(tape)


def rom_result_bit(rom: InputRom, iterations: int) -> int:
    """
    First bit of I[I[...I[0^b]...]] (`iterations` lookups)

    Plain irreversible pointer chasing: one word of working space.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be nonnegative, got {iterations}")
    address = 0
    for _ in range(iterations):
        address = rom.words[address]
    if rom.word_width == 0:
        return 0
    return (address >> (rom.word_width - 1)) & 1


def rom_from_chain(chain: Chain) -> InputRom:
    """Input ROM with I[q_(j-1)] = q_j and every other word 0^b"""
    words = [0] * (1 << chain.node_width)
    for j in range(1, chain.t + 1):
        words[chain.node(j - 1)] = chain.node(j)
    return InputRom(chain.node_width, tuple(words))


def random_rom(word_width: int, seed: int) -> InputRom:
    rng = np.random.default_rng(seed)
    words = tuple(draw_word(rng, word_width) for _ in range(1 << word_width))
    return InputRom(word_width, words)


def dump_chain(chain: Chain) -> str:
    """Header `S=<bits> t=<len> seed=<u64>`, then one hex node per line"""
    header = f"S={chain.node_width} t={chain.t} seed={chain.seed or 0}"
    if chain.extra_bits:
        header += f" extra={chain.extra_bits}"
    lines = [header] + [to_hex(q, chain.node_width) for q in chain.nodes]
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> dict:
    fields = {}
    for token in line.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise FormatError(f"header token {token!r} is not key=value")
        fields[key] = value
    return fields


def load_chain(text: str) -> Chain:
    """
    Parse the chain file format

    Raises:
        FormatError: malformed header or node lines
    """
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("empty chain file")
    header = _parse_header(lines[0])
    try:
        S = int(header["S"])
        t = int(header["t"])
        seed: Optional[int] = int(header.get("seed", "0"))
        nodes = tuple(from_hex(line) for line in lines[1:])
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad chain file: {e}") from e
    if len(nodes) != t:
        raise FormatError(f"header says t={t} but {len(nodes)} nodes follow")
    try:
        return Chain(S, nodes, header.get("extra", ""), seed)
    except ValueError as e:
        raise FormatError(str(e)) from e


def dump_rom(rom: InputRom) -> str:
    """Header `b=<bits>`, then 2^b hex words in address order"""
    lines = [f"b={rom.word_width}"] + [to_hex(w, rom.word_width) for w in rom.words]
    return "\n".join(lines) + "\n"


def load_rom(text: str) -> InputRom:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("empty ROM file")
    header = _parse_header(lines[0])
    try:
        b = int(header["b"])
        words = tuple(from_hex(line) for line in lines[1:])
        return InputRom(b, words)
    except (KeyError, ValueError) as e:
        raise FormatError(f"bad ROM file: {e}") from e


def all_tapes(max_length: int) -> List[OracleTape]:
    """Every tape over {0, 1, #} of length at most max_length"""
    tapes: List[OracleTape] = [""]
    frontier = [""]
    for _ in range(max_length):
        frontier = [tape + ch for tape in frontier for ch in "01#"]
        tapes.extend(frontier)
    return tapes


def random_tapes(rng: np.random.Generator, count: int, min_length: int, max_length: int) -> List[OracleTape]:
    """Random tapes over {0, 1, #}, mostly well-formed single strings and pairs"""
    tapes: List[OracleTape] = []
    for _ in range(count):
        length = int(rng.integers(min_length, max_length + 1))
        shape = int(rng.integers(0, 3))
        if shape == 0:
            tapes.append(draw_bits(rng, length))
        elif shape == 1:
            half = length // 2
            tapes.append(draw_bits(rng, half) + "#" + draw_bits(rng, half))
        else:
            tapes.append("".join("01#"[int(i)] for i in rng.integers(0, 3, size=length)))
    return tapes


def chain_tapes(chain: Chain) -> List[OracleTape]:
    """The query strings a chain-following run produces"""
    tapes: List[OracleTape] = []
    for j in range(1, chain.t + 1):
        tapes.append(chain.bits(j - 1))
        tapes.append(join_tape(chain.bits(j - 1), chain.bits(j)))
    return tapes


def self_reversibility_failures(query, tapes: List[OracleTape]) -> int:
    """Tapes x with query(query(x)) != x"""
    failures = 0
    for tape in tapes:
        if query(query(tape)) != tape:
            failures += 1
            logger.warning(f"Oracle is not self-reversible on {tape!r}")
    return failures
