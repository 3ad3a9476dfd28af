"""
Reversible VM: Landauer/Lecerf, checkpoint copies, Bennett runs and replay
"""

from dataclasses import replace

import numpy as np
import pytest

from app.core.errors import CapacityExceeded, CorruptHistory, FormatError, SlotOutOfRange, TraceMismatch
from app.models.vm import HistoryRecord, OracleMachine
from app.services.oracle import build_chain_oracle, rom_from_chain
from app.services.revsim import (
    audit_run,
    bennett_checkpoint_copy,
    compile_program,
    direct_run,
    dump_state,
    dump_trace,
    initial_state,
    landauer_run,
    lecerf_reverse,
    load_state,
    load_trace,
    random_machine,
    replay_backward,
    replay_forward,
    run_bennett,
    simulate_bennett,
    state_at,
    table_machine,
)
from app.services.pebble import bennett_schedule


def increment(width: int):
    return table_machine(width, [(x + 1) % (1 << width) for x in range(1 << width)])


def test_landauer_then_lecerf_restores_input():
    m = increment(4)
    final, history = landauer_run(m, 3, 5)
    assert final == 8
    assert len(history) == 5
    assert lecerf_reverse(m, final, history) == 3


def test_landauer_keeps_erased_configurations():
    # Everything collapses onto 0: only the history can tell where we came from
    m = table_machine(3, [0] * 8)
    final, history = landauer_run(m, 6, 2)
    assert final == 0
    assert lecerf_reverse(m, final, history) == 6


def test_lecerf_detects_corrupt_history():
    m = increment(4)
    final, history = landauer_run(m, 3, 4)
    tampered = history[:-1] + (HistoryRecord(3, 9),)
    with pytest.raises(CorruptHistory):
        lecerf_reverse(m, final, tampered)
    with pytest.raises(CorruptHistory):
        lecerf_reverse(m, final, history[1:])


def test_checkpoint_copy_is_involution():
    vm = replace(initial_state(4, 1, 2), current=0b1011)
    once = bennett_checkpoint_copy(vm, 2)
    assert once.checkpoints == (1, 0, 0b1011)
    assert bennett_checkpoint_copy(once, 2) == vm


def test_checkpoint_copy_slot_range():
    vm = initial_state(4, 1, 2)
    with pytest.raises(SlotOutOfRange):
        bennett_checkpoint_copy(vm, 3)
    with pytest.raises(SlotOutOfRange):
        bennett_checkpoint_copy(vm, 0)


def test_peak_checkpoints_three_two():
    report = simulate_bennett(random_machine(6, 7), 5, 3, 2, seg_len=1, seed=7)
    assert report.peak_checkpoints == 5
    assert report.matches_direct


def test_capacity_too_small():
    with pytest.raises(CapacityExceeded):
        compile_program(increment(4), bennett_schedule(2, 3), 1, capacity=3)


def test_seeded_runs_audit_and_match_direct():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 4))
        n = int(rng.integers(0, 4))
        seg_len = int(rng.integers(1, 4))
        width = int(rng.integers(3, 9))
        machine = random_machine(width, seed)
        init = int(rng.integers(0, 1 << width))

        run = run_bennett(machine, init, k, n, seg_len, seed=seed)
        assert run.report.final_checkpoint == machine.run(init, k**n * seg_len)
        assert run.report.matches_direct
        assert audit_run(run).ok
        assert replay_backward(run.trace, run.end) == run.start


def test_wide_machine_uses_hash_rule():
    machine = random_machine(24, 3)
    assert machine.table is None
    run = run_bennett(machine, 12345, 2, 2, seg_len=2, seed=3)
    assert run.report.matches_direct
    assert audit_run(run).ok


def test_end_state_holds_only_target():
    run = run_bennett(increment(5), 2, 2, 3)
    assert run.end.history == ()
    assert run.end.current == 0
    assert run.end.checkpoints[run.program.slot_of_target] == 10
    assert run.end.stored_checkpoints() == 1


def test_zero_valued_checkpoint_is_still_stored():
    vm = replace(initial_state(4, 1, 2), current=0)
    filled = bennett_checkpoint_copy(vm, 1)
    assert filled.checkpoints == (1, 0, 0)
    assert filled.stored_checkpoints() == 1
    assert filled.storage_bits() == vm.storage_bits() + 4
    assert bennett_checkpoint_copy(filled, 1).stored_checkpoints() == 0
    assert load_state(dump_state(filled)) == filled


def test_run_onto_zero_keeps_target_slot_occupied():
    run = run_bennett(table_machine(3, [0] * 8), 5, 2, 2)
    assert run.report.matches_direct
    assert run.end.checkpoints[run.program.slot_of_target] == 0
    assert run.end.stored_checkpoints() == 1


@pytest.mark.parametrize("use_rom", [False, True])
def test_oracle_machine_run(use_rom):
    graph, chain = build_chain_oracle(5, 9, seed=4)
    tape_oracle = rom_from_chain(chain) if use_rom else graph
    run = run_bennett(OracleMachine(5), 0, 3, 2, oracle=tape_oracle)
    assert run.report.final_checkpoint == chain.node(9)
    assert run.report.matches_direct
    assert audit_run(run).ok
    assert run.end.oracle_tape == ""


def test_oracle_machine_needs_single_query_segments():
    with pytest.raises(ValueError):
        compile_program(OracleMachine(4), bennett_schedule(2, 1), 2, capacity=2)


def test_deleted_event_breaks_backward_replay():
    run = run_bennett(random_machine(5, 1), 3, 2, 2, seg_len=2)
    events = run.trace.events
    broken = replace(run.trace, events=events[:10] + events[11:])
    with pytest.raises(TraceMismatch):
        replay_backward(broken, run.end)


def test_altered_query_tape_breaks_replay(bennett_2_2):
    run, _ = bennett_2_2
    events = list(run.trace.events)
    index = next(i for i, e in enumerate(events) if e.is_query)
    events[index] = replace(events[index], tape_before=events[index].tape_before + "0")
    broken = replace(run.trace, events=tuple(events))
    with pytest.raises(TraceMismatch):
        replay_forward(broken)


def test_state_at_boundaries():
    run = run_bennett(increment(4), 1, 2, 1)
    assert state_at(run.trace, 0) == run.start
    assert state_at(run.trace, len(run.trace)) == run.end
    with pytest.raises(ValueError):
        state_at(run.trace, len(run.trace) + 1)


def test_trace_text_round_trip(bennett_2_2):
    run, _ = bennett_2_2
    text = dump_trace(run.trace)
    assert text.splitlines()[0] == f"width=6 init=00 capacity=3 events={len(run.trace)}"
    loaded = load_trace(text, run.program.machine)
    assert loaded.start == run.start
    assert loaded.events == run.trace.events
    assert replay_forward(loaded) == run.end


def test_state_text_round_trip():
    run = run_bennett(random_machine(6, 9), 17, 3, 2, seg_len=3)
    # Mid-segment: history and several checkpoints are live
    state = state_at(run.trace, 40)
    assert state.history
    assert load_state(dump_state(state)) == state


def test_bad_trace_header():
    with pytest.raises(FormatError):
        load_trace("width=4\n0 load:0\n")


def test_direct_run_oracle_stops_off_chain():
    graph, chain = build_chain_oracle(4, 3, seed=2)
    assert direct_run(OracleMachine(4), 0, 10, graph) == chain.node(3)
