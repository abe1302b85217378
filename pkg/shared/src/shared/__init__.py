from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Angle = float | str


class ContourBlock(BaseModel):
    preset: str | None = None
    map: str | None = None
    derivative: str | None = None
    reference_angle: float = 0.0
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.map is None):
            raise ValueError("contour needs exactly one of 'preset' or 'map'")
        if self.derivative is not None and self.map is None:
            raise ValueError("'derivative' is only allowed together with 'map'")
        return self


class PieceBlock(BaseModel):
    lo: Angle = Field(alias="from")
    hi: Angle = Field(alias="to")
    expr: str
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class RhsBlock(BaseModel):
    pieces: list[PieceBlock] | None = None
    samples: str | None = None
    jumps: list[Angle] = Field(default_factory=list)
    jump_values: list[tuple[float, float] | float] | None = None
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _one_source(self):
        if (self.pieces is None) == (self.samples is None):
            raise ValueError("rhs needs exactly one of 'pieces' or 'samples'")
        if self.samples is not None and len(self.jump_values or []) != len(self.jumps):
            raise ValueError("sampled rhs needs one entry in 'jump_values' per jump")
        if self.pieces is not None and self.jump_values is not None:
            raise ValueError("'jump_values' only applies to sampled rhs")
        return self


class ExactBlock(BaseModel):
    pieces: list[PieceBlock]
    jumps: list[Angle] = Field(default_factory=list)
    model_config = ConfigDict(extra="forbid")


class DiscretizationBlock(BaseModel):
    m: int = Field(default=4, ge=2, le=4)
    n_B: int = Field(default=160, ge=4)
    quad_N: int = Field(default=200, ge=2)
    oracle_N: int = 4000
    eps2: float = Field(default=0.01, gt=0.0)
    collocation_rule: Literal["offset", "nodes"] = "offset"
    basis: Literal["spline", "lagrange"] = "spline"
    model_config = ConfigDict(extra="forbid")


class OutputBlock(BaseModel):
    grid_size: int = Field(default=2000, ge=2)
    alpha: float = Field(default=1.0, gt=0.0, le=1.0)
    P: int = Field(default=64, ge=8)
    model_config = ConfigDict(extra="forbid")


class ConvergenceBlock(BaseModel):
    n_B: list[int] = Field(default_factory=lambda: [40, 80, 160, 320])
    model_config = ConfigDict(extra="forbid")

    @field_validator("n_B")
    @classmethod
    def _ascending(cls, value: list[int]) -> list[int]:
        if not value or any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("convergence n_B list must be non-empty and strictly ascending")
        return value


class RunConfig(BaseModel):
    name: str = "run"
    contour: ContourBlock
    kernel: str
    lam: float | tuple[float, float] = Field(alias="lambda")
    rhs: RhsBlock | None = None
    exact_solution: ExactBlock | None = None
    manufactured: bool = False
    discretization: DiscretizationBlock = Field(default_factory=DiscretizationBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)
    convergence: ConvergenceBlock = Field(default_factory=ConvergenceBlock)
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _rhs_source(self):
        if self.manufactured:
            if self.exact_solution is None:
                raise ValueError("a manufactured run needs 'exact_solution'")
            if self.rhs is not None:
                raise ValueError("a manufactured run derives 'rhs' from 'exact_solution'; drop 'rhs'")
        elif self.rhs is None:
            raise ValueError("'rhs' is required unless 'manufactured' is true")
        return self

    @property
    def lam_complex(self) -> complex:
        if isinstance(self.lam, tuple):
            return complex(*self.lam)
        return complex(self.lam)


class RunManifest(BaseModel):
    command: str
    config_name: str
    n_B: int
    m: int
    quad_N: int
    oracle_N: int
    eps2: float
    collocation_rule: str
    basis: str = "spline"
    grid_size: int
    alpha: float
    lam: tuple[float, float] = Field(serialization_alias="lambda")
    kernel: str
    contour: str
    residual_inf: float
    rhs_inf: float
    condition_estimate_1norm: float
    rcond: float
    residual_within_tolerance: bool
    max_grid_error: float | None = None
    max_grid_error_with_wrap: float | None = None
    ph_norm_error_estimate: float | None = None
    wrap_mismatch: float | None = None
    beta_coeffs: list[tuple[float, float]] = Field(default_factory=list)
    elapsed_seconds: float
    stages: list[dict[str, Any]] = Field(default_factory=list)
    model_config = ConfigDict(extra="forbid")

    def to_json(self) -> str:
        """Return a JSON string payload."""
        return self.model_dump_json(indent=2, by_alias=True)

    def to_dict(self) -> dict:
        """Return a JSON-safe dict payload."""
        return self.model_dump(mode="json", by_alias=True)


class ConvergenceRow(BaseModel):
    n_B: int
    max_grid_error: float
    max_grid_error_with_wrap: float
    ph_norm_error_estimate: float
    residual_inf: float
    residual_within_tolerance: bool
    condition_estimate_1norm: float
    rcond: float
    elapsed_seconds: float
    model_config = ConfigDict(extra="forbid")
