"""
Graph oracles, the chain construction, SEPARATOR and the input ROM
"""

import numpy as np
import pytest

from app.core.errors import FormatError, Infeasible, NotSelfReversible
from app.models.oracle import Bounds, Chain, GraphOracle, InputRom, split_tape
from app.services.oracle import (
    all_tapes,
    build_chain_for_bounds,
    build_chain_oracle,
    chain_oracle,
    chain_tapes,
    dump_chain,
    dump_rom,
    load_chain,
    load_rom,
    oracle_call,
    random_rom,
    random_tapes,
    rom_access_word,
    rom_from_chain,
    rom_get_size,
    rom_result_bit,
    self_reversibility_failures,
    separator_decide,
)


@pytest.fixture
def small_oracle():
    # q0 = 00 -> 01 -> 10
    return chain_oracle(Chain(2, (0b01, 0b10)))


def test_split_tape():
    assert split_tape("0110") == ("0110", None)
    assert split_tape("01#10") == ("01", "10")
    assert split_tape("01#1") is None
    assert split_tape("0#1#0") is None
    assert split_tape("") == ("", None)


def test_graph_oracle_queries(small_oracle):
    assert oracle_call(small_oracle, "00") == "00#01"
    assert oracle_call(small_oracle, "00#01") == "00"
    assert oracle_call(small_oracle, "01") == "01#10"
    # wrong successor, undefined node, malformed tape: no-ops
    assert oracle_call(small_oracle, "00#10") == "00#10"
    assert oracle_call(small_oracle, "10") == "10"
    assert oracle_call(small_oracle, "0#") == "0#"


def test_graph_oracle_on_all_short_tapes(small_oracle):
    assert self_reversibility_failures(small_oracle.query, all_tapes(7)) == 0


def test_all_tapes_count():
    assert len(all_tapes(3)) == 1 + 3 + 9 + 27


def test_seeded_oracles_are_self_reversible():
    short = all_tapes(8)
    for seed in range(20):
        graph, chain = build_chain_oracle(3, 6, seed)
        rom = random_rom(3, seed)
        rng = np.random.default_rng(seed)
        tapes = short + chain_tapes(chain) + random_tapes(rng, 500, 9, 40)
        assert self_reversibility_failures(graph.query, tapes) == 0
        assert self_reversibility_failures(rom.query, tapes) == 0
        assert self_reversibility_failures(lambda x: rom_get_size(rom, x), tapes) == 0


def test_non_involution_is_reported():
    flip = {"0": "1", "1": "1"}
    assert self_reversibility_failures(lambda x: flip.get(x, x), ["0", "1", "#"]) == 1


def test_chain_nodes_distinct_and_nonzero():
    _, chain = build_chain_oracle(4, 15, seed=3)
    assert len(set(chain.nodes)) == 15
    assert 0 not in chain.nodes
    assert chain.t == 15


def test_chain_is_reproducible():
    assert build_chain_oracle(8, 20, seed=5)[1] == build_chain_oracle(8, 20, seed=5)[1]


def test_chain_infeasible():
    with pytest.raises(Infeasible):
        build_chain_oracle(2, 4, seed=0)


def test_chain_validation():
    with pytest.raises(ValueError):
        Chain(3, (1, 1))
    with pytest.raises(ValueError):
        Chain(3, (0, 1))


def test_chain_for_bounds_keeps_leftover_bits():
    bounds = Bounds(S=5, T=23)
    _, chain = build_chain_for_bounds(bounds, seed=1)
    assert chain.t == 4
    assert len(chain.extra_bits) == 3
    assert len(chain.x) == 23
    assert Chain.from_x(chain.x, 5, 4, seed=1) == chain


def test_separator_matches_ground_truth():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        S = int(rng.integers(2, 13))
        t = int(rng.integers(1, min(64, (1 << S) - 1) + 1))
        bounds = Bounds(S, t * S + int(rng.integers(0, S)))
        graph, chain = build_chain_for_bounds(bounds, seed)
        result = separator_decide(graph, bounds)
        assert result.accepted == chain.bits(t).startswith("1")
        assert result.oracle_calls == 2 * t
        assert result.final_node == chain.bits(t)
        assert rom_result_bit(rom_from_chain(chain), t) == int(result.accepted)


def test_separator_wide_nodes():
    bounds = Bounds(S=16, T=16 * 64)
    graph, chain = build_chain_for_bounds(bounds, seed=9)
    assert separator_decide(graph, bounds).accepted == chain.bits(64).startswith("1")


def test_separator_stops_at_chain_end():
    graph = chain_oracle(Chain(3, (0b101,)))
    result = separator_decide(graph, Bounds(S=3, T=12))
    assert result.accepted
    assert result.final_node == "101"
    assert result.oracle_calls == 3


class OneWayOracle(GraphOracle):
    # Answers b with b#1..1 but never restores the tape
    def query(self, tape):
        return tape if "#" in tape else f"{tape}#{'1' * len(tape)}"


def test_separator_rejects_one_way_oracle():
    with pytest.raises(NotSelfReversible):
        separator_decide(OneWayOracle(), Bounds(S=4, T=16))


def test_rom_get_size():
    rom = InputRom(2, (2, 3, 0, 1))
    assert rom_get_size(rom, "") == "10"
    assert rom_get_size(rom, "10") == ""
    assert rom_get_size(rom, "1") == "1"


def test_rom_access_word():
    rom = InputRom(2, (2, 3, 0, 1))
    assert rom_access_word(rom, "00") == "00#10"
    assert rom_access_word(rom, "00#10") == "00"
    assert rom_access_word(rom, "00#11") == "00#11"
    assert rom_access_word(rom, "000") == "000"


def test_rom_result_bit():
    rom = InputRom(2, (2, 3, 0, 1))
    # 0 -> 2 -> 0 -> 2
    assert rom_result_bit(rom, 0) == 0
    assert rom_result_bit(rom, 1) == 1
    assert rom_result_bit(rom, 3) == 1


def test_rom_size_check():
    with pytest.raises(ValueError):
        InputRom(2, (0, 1, 2))


def test_chain_file_round_trip():
    _, chain = build_chain_oracle(12, 5, seed=7, extra_bits=4)
    text = dump_chain(chain)
    assert text.splitlines()[0] == f"S=12 t=5 seed=7 extra={chain.extra_bits}"
    assert all(len(line) == 3 for line in text.splitlines()[1:])
    assert load_chain(text) == chain


def test_chain_file_errors():
    with pytest.raises(FormatError):
        load_chain("S=4 t=2 seed=0\n3\n")
    with pytest.raises(FormatError):
        load_chain("S=4 t=2 seed=0\n3\n3\n")
    with pytest.raises(FormatError):
        load_chain("")


def test_rom_file_round_trip():
    rom = random_rom(4, seed=2)
    assert load_rom(dump_rom(rom)) == rom


def test_empty_successor_map_is_identity():
    oracle = GraphOracle()
    assert oracle.query("0101") == "0101"
    assert oracle.query("01#01") == "01#01"
