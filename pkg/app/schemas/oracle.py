from pydantic import BaseModel, Field


class SeparatorResult(BaseModel):
    """
    Outcome of the SEPARATOR decider
    """

    accepted: bool
    oracle_calls: int = 0
    final_node: str = Field(default="", description="Bit string b when the loop ended")
