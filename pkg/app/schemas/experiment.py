from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.config import settings

# (command, action) pairs the runner knows
EXPERIMENTS = {
    "pebble": ("bennett", "search"),
    "sim": ("bennett", "audit"),
    "oracle": ("build", "separator", "rom"),
    "analyze": ("pebbles", "compress", "decompress", "incompressible"),
    "euler": ("run", "audit", "family"),
    "report": ("sweep", "space"),
}

# Verdicts that make the CLI exit with status 1
NEGATIVE_VERDICTS = {"REJECT", "NOT_FOUND", "MISMATCH", "FAIL"}


def _int_list(value: Any) -> Any:
    if isinstance(value, str):
        return [int(item) for item in value.replace(" ", "").split(",") if item]
    if isinstance(value, int):
        return [value]
    return value


class ExperimentConfig(BaseModel):
    """
    Parameters of one experiment run

    Field names mirror the long command-line flags (dashes become
    underscores), which is also the key set of the key=value config file.
    """

    command: str
    action: str

    # Pebble game / Bennett
    k: int = Field(default=2, ge=2)
    n: int = Field(default=2, ge=0)
    t: int = Field(default=8, ge=1)
    budget: Optional[int] = Field(default=None, ge=1)
    seg_len: int = Field(default=1, ge=1)
    machine: str = Field(default="step-rule", description="step-rule | oracle | rom")

    # Widths and bounds
    width: int = Field(default=8, ge=1, description="Configuration / node width S")
    time_bound: Optional[int] = Field(default=None, ge=1, description="T; defaults to t*S")
    width_cap: Optional[int] = Field(default=None, ge=1)
    step_cap: Optional[int] = Field(default=None, ge=1)
    depth: Optional[int] = Field(default=None, ge=0)
    halt_fraction: float = Field(default=0.1, ge=0.0, le=1.0)

    # Analysis
    tau: List[int] = Field(default_factory=list)
    samples: int = Field(default=5, ge=1)
    direction: Optional[str] = None
    length: int = Field(default=8, ge=0)
    system: str = Field(default="duplicate", description="duplicate | zero | identity | combined")
    report_sizes: bool = False
    description: Optional[str] = Field(default=None, description="Description file to expand instead of compressing")

    # Sweeps
    k_values: List[int] = Field(default_factory=lambda: [2, 3, 4])
    n_values: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    t_values: List[int] = Field(default_factory=lambda: [2, 4, 8, 16])
    depths: List[int] = Field(default_factory=lambda: list(range(2, 11)))

    # Trials
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED)
    repetitions: int = Field(default=1, ge=1)
    output: Optional[str] = None
    save: Optional[str] = Field(default=None, description="Path prefix for schedule, trace, chain, ROM, description or machine files")

    @field_validator("tau", "k_values", "n_values", "t_values", "depths", mode="before")
    def split_lists(cls, v: Any) -> Any:
        return _int_list(v)

    @field_validator("direction")
    def check_direction(cls, v: Optional[str]) -> Optional[str]:
        if v is None or v in ("forward", "backward"):
            return v
        raise ValueError("must be 'forward' or 'backward'")

    @field_validator("machine")
    def check_machine(cls, v: str) -> str:
        if v not in ("step-rule", "oracle", "rom"):
            raise ValueError("must be 'step-rule', 'oracle' or 'rom'")
        return v

    @field_validator("system")
    def check_system(cls, v: str) -> str:
        if v not in ("duplicate", "zero", "identity", "combined"):
            raise ValueError("must be 'duplicate', 'zero', 'identity' or 'combined'")
        return v

    @model_validator(mode="after")
    def check_experiment(self) -> "ExperimentConfig":
        actions = EXPERIMENTS.get(self.command)
        if actions is None:
            raise ValueError(f"unknown command {self.command!r}")
        if self.action not in actions:
            raise ValueError(f"{self.command} has no action {self.action!r}")
        return self

    @property
    def experiment_id(self) -> str:
        return f"{self.command}-{self.action}"

    @property
    def seeds(self) -> List[int]:
        return [self.seed + i for i in range(self.repetitions)]


class ReportRow(BaseModel):
    """
    One trial's result: parameters, measured metrics and verdict
    """

    experiment: str
    trial: int = 0
    seed: Optional[int] = None
    params: Dict[str, Any] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    verdict: Optional[str] = None

    def flat(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {"experiment": self.experiment, "trial": self.trial, "seed": self.seed}
        row.update(self.params)
        row.update(self.metrics)
        row["verdict"] = self.verdict
        return row

    @property
    def negative(self) -> bool:
        return self.verdict in NEGATIVE_VERDICTS
