"""
Reversible Euler-tour search over explicit transition tables
"""

import pytest

from app.core.errors import FormatError, StepCapExceeded
from app.models.eulertour import ExplicitMachine, TourState
from app.services.eulertour import (
    TREE_WIDTH,
    Tour,
    binary_tree_machine,
    direct_run,
    dump_machine,
    euler_tour,
    load_machine,
    predecessors,
    random_machine,
    tour_audit,
)


def linear_chain() -> ExplicitMachine:
    # 1 -> 2 -> 3 -> 4 -> 5, 5 halts
    return ExplicitMachine(4, {i: i + 1 for i in range(1, 5)}, initial=1)


def test_predecessors():
    m = ExplicitMachine(3, {1: 0, 2: 0, 3: 1, 5: 1}, initial=3)
    assert predecessors(m, 0) == [1, 2]
    assert predecessors(m, 1) == [3, 5]
    assert predecessors(m, 0, width_cap=1) == [1]
    assert predecessors(m, 4) == []


def test_machine_validation():
    with pytest.raises(ValueError):
        ExplicitMachine(2, {1: 4})
    with pytest.raises(ValueError):
        ExplicitMachine(2, {}, initial=4)


def test_linear_chain():
    m = linear_chain()
    result = euler_tour(m, width_cap=4)
    assert result.found
    assert result.final == 5
    assert result.forward_steps == 4
    assert result.total_steps == 8
    assert direct_run(m, 4) == 5


def test_width_cap_prunes_the_halting_configuration():
    m = linear_chain()
    result = euler_tour(m, width_cap=2)
    assert not result.found
    assert result.forward_steps == 4
    assert direct_run(m, 2) is None


def test_initial_configuration_halts():
    result = euler_tour(ExplicitMachine(3, {1: 2}, initial=5), width_cap=3)
    assert result.found
    assert result.final == 5
    assert result.total_steps == 0


def test_initial_over_cap():
    with pytest.raises(ValueError):
        euler_tour(ExplicitMachine(4, {}, initial=9), width_cap=2)


def test_step_and_unstep_are_inverse():
    tour = Tour(binary_tree_machine(3), TREE_WIDTH)
    state = tour.start()
    for _ in range(40):
        following = tour.step(state)
        assert tour.unstep(following) == state
        state = following


def test_random_tables_agree_with_direct_run():
    for seed in range(100):
        width = 3 + seed % 8
        m = random_machine(width, seed, halt_fraction=0.1)
        result = euler_tour(m, width)
        direct = direct_run(m, width)
        if direct is None:
            assert not result.found
        else:
            assert result.found
            assert result.final == direct
            assert result.total_steps == 2 * result.forward_steps


def test_cyclic_table_is_not_found():
    m = random_machine(5, 1, halt_fraction=0.0)
    assert not euler_tour(m, 5).found
    assert direct_run(m, 5) is None


@pytest.mark.parametrize("depth", range(0, 8))
def test_tree_tour_length(depth):
    result = euler_tour(binary_tree_machine(depth), TREE_WIDTH)
    assert result.found
    assert result.final == 1
    assert result.forward_steps == 2 ** (depth + 1) - depth - 2


def test_tree_family_storage_tracks_width_not_length():
    results = {d: euler_tour(binary_tree_machine(d), TREE_WIDTH) for d in range(2, 11)}
    storage = [results[d].peak_storage_bits for d in range(2, 11)]
    # widest state held, start copy and the copied-out root
    assert storage[0] == 7
    assert storage[1:] == [2 * d + 4 for d in range(3, 11)]
    assert all(bits <= 2 * (TREE_WIDTH + 2) for bits in storage)
    assert storage[-1] < 4 * storage[0]
    for d in range(2, 10):
        assert results[d + 1].forward_steps >= 1.8 * results[d].forward_steps


def test_storage_of_linear_chain():
    # widest state (4 or 5, slot 0) is 3 bits, start (1, 0) is 1 bit, result 5 is 3 bits
    assert euler_tour(linear_chain(), 4).peak_storage_bits == 7


def test_step_cap():
    with pytest.raises(StepCapExceeded):
        euler_tour(binary_tree_machine(5), TREE_WIDTH, step_cap=3)


def test_tree_audit():
    audit = tour_audit(binary_tree_machine(3), TREE_WIDTH)
    # Every edge of the 15-node tree is walked once in each direction
    assert audit.states == 28
    assert audit.ok


def test_isolated_configuration_audit():
    audit = tour_audit(ExplicitMachine(3, {}, initial=5), 3)
    assert audit.states == 0
    assert audit.ok


def test_random_table_audits():
    for seed in range(10):
        m = random_machine(6, seed, halt_fraction=0.2)
        assert tour_audit(m, 6).ok


def test_tour_state_shape():
    state = Tour(linear_chain(), 4).start()
    assert state == TourState(1, 0)


def test_machine_file_round_trip():
    m = random_machine(5, 3)
    loaded = load_machine(dump_machine(m))
    assert loaded.width == m.width
    assert loaded.initial == m.initial
    assert dict(loaded.transition) == dict(m.transition)


def test_machine_file_errors():
    with pytest.raises(FormatError):
        load_machine("width=3 initial=1\n1 -> 2\n1 -> 3\n")
    with pytest.raises(FormatError):
        load_machine("width=3 initial=1\n1 => 2\n")
    with pytest.raises(FormatError):
        load_machine("")
