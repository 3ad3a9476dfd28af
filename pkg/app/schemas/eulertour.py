from typing import Optional

from pydantic import BaseModel, Field


class TourResult(BaseModel):
    """
    Outcome of a reversible Euler tour
    """

    found: bool
    final: Optional[int] = Field(default=None, description="Halting configuration when found")
    forward_steps: int = 0
    total_steps: int = Field(default=0, description="Tour steps including the return to start")
    peak_storage_bits: int = 0
    width_cap: int


class TourAudit(BaseModel):
    """
    Bijectivity check of a complete tour cycle
    """

    states: int
    violations: int = 0
    returned_to_start: bool = True
    peak_storage_bits: int = 0

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.returned_to_start
