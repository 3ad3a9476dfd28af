"""
Explicit transition tables and Euler-tour states
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, NamedTuple, Optional


@dataclass(frozen=True, eq=False)
class ExplicitMachine:
    """
    Irreversible machine given by a successor table

    Configurations are integers of at most `width` bits. A configuration
    with no entry in `transition` halts.
    """

    width: int
    transition: Mapping[int, int] = field(default_factory=dict)
    initial: int = 0

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be positive, got {self.width}")
        limit = 1 << self.width
        for source, target in self.transition.items():
            if not (0 <= source < limit and 0 <= target < limit):
                raise ValueError(f"transition {source} -> {target} wider than {self.width} bits")
        if not 0 <= self.initial < limit:
            raise ValueError(f"initial configuration wider than {self.width} bits")

    def successor(self, config: int) -> Optional[int]:
        return self.transition.get(config)

    def halts(self, config: int) -> bool:
        return config not in self.transition

    @cached_property
    def inverse(self) -> Dict[int, List[int]]:
        """Predecessor lists, ascending"""
        table: Dict[int, List[int]] = {}
        for source in sorted(self.transition):
            table.setdefault(self.transition[source], []).append(source)
        return table


def config_size(config: int) -> int:
    """Bits a configuration occupies"""
    return config.bit_length()


class TourState(NamedTuple):
    """Current configuration and the neighbour slot it was entered by"""

    current: int
    slot: int
