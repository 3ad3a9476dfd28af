from typing import Optional

from pydantic import BaseModel, Field


class SimReport(BaseModel):
    """
    Summary of one hierarchical Bennett simulation
    """

    k: int
    n: int
    seg_len: int
    width: int
    seed: Optional[int] = None
    machine_kind: str = Field(default="step-rule", description="step-rule | oracle")

    final_checkpoint: int
    direct_result: Optional[int] = None
    peak_checkpoints: int = 0
    peak_history_bits: int = 0
    total_microops: int = 0

    @property
    def matches_direct(self) -> bool:
        return self.direct_result is not None and self.direct_result == self.final_checkpoint


class AuditReport(BaseModel):
    """
    Bidirectional replay audit of a recorded run
    """

    events: int
    forward_ok: bool
    backward_ok: bool

    @property
    def ok(self) -> bool:
        return self.forward_ok and self.backward_ok
