from typing import List, Optional

from pydantic import BaseModel, Field


class Metrics(BaseModel):
    """
    Replay metrics of a pebble schedule
    """

    total_moves: int = 0
    max_pebbles: int = 0
    first_reach_move: Optional[int] = Field(
        default=None, description="1-based move that first pebbles the target"
    )
    first_reach_time: Optional[int] = Field(
        default=None, description="Segment-time units, 2*m - 1"
    )


class SearchResult(BaseModel):
    """
    Outcome of the exhaustive minimal-pebble search
    """

    chain_length: int
    min_pebbles: int
    states_explored: int = 0
    witness: List[str] = Field(
        default_factory=list, description="One optimal move list, 'P j' / 'U j'"
    )
