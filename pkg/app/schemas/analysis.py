from typing import Optional

from pydantic import BaseModel, Field


class DescriptionSizes(BaseModel):
    """
    Bit accounting of a compressed description, one field per component
    """

    tau: int
    direction: str
    pebbled: int = Field(description="p, nodes pebbled at tau")
    h: int = Field(description="Nodes recovered by simulation")
    snapshot_bits: int
    direction_bits: int = 1
    x_prime_bits: int
    triple_bits: int
    extra_bits: int
    x_bits: int = Field(description="|x| = t*S + extra bits")

    @property
    def total_bits(self) -> int:
        return (
            self.snapshot_bits
            + self.direction_bits
            + self.x_prime_bits
            + self.triple_bits
            + self.extra_bits
        )

    @property
    def saving(self) -> int:
        return self.x_bits - self.total_bits


class SpaceSample(BaseModel):
    """
    Stored configuration size against pebbled nodes at one instant
    """

    tau: int
    pebbled: int
    storage_bits: int
    ratio: Optional[float] = Field(
        default=None, description="storage_bits / (p*S); absent when p = 0"
    )
