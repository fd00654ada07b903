"""Request/response schemas for the HTTP service."""

from __future__ import annotations

from typing import Any, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..channel import channel_from_dict
from ..estimate import config_from_dict


class ChannelModel(BaseModel):
    """Wire form of a Pauli-family channel: {dim, lambda, directions?}."""

    model_config = ConfigDict(populate_by_name=True)

    dim: int = Field(ge=2)
    lam: List[float] = Field(alias="lambda")
    directions: Optional[Any] = None

    def to_channel(self):
        return channel_from_dict(self.model_dump(by_alias=True, exclude_none=True))


class ConfigModel(BaseModel):
    """One tomography configuration; Bloch shorthand or explicit matrices."""

    input_bloch: Optional[List[float]] = None
    input_matrix: Optional[Any] = None
    povm_bloch: Optional[List[float]] = None
    povm_matrices: Optional[Any] = None
    shots: int = Field(default=1, ge=1)

    def to_config(self):
        return config_from_dict(self.model_dump(exclude_none=True))


class SimulateRequest(BaseModel):
    channel: ChannelModel
    configs: List[ConfigModel]
    seed: int = 0


class SimulateResponse(BaseModel):
    configs: List[dict]
    counts: List[List[int]]


class EstimateRequest(BaseModel):
    """Estimation from counts (or exact frequencies) under a chosen estimator."""

    configs: List[ConfigModel]
    counts: Optional[List[List[int]]] = None
    freqs: Optional[List[List[float]]] = None
    method: Literal["affine", "choi"] = "affine"
    directions: Optional[Any] = None


class EstimateResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: Optional[List[float]] = Field(default=None, alias="lambda")
    choi: Any
    residual: float
    iterations: int


class DirectionsRequest(BaseModel):
    channel: ChannelModel
    n_shots: int = Field(default=5000, ge=1)
    cascade_depth: int = Field(default=1, ge=1)
    tau_scale: float = 2.0
    max_steps: int = Field(default=50, ge=1)
    seed: int = 0
    exact: bool = False


class DirectionsResponse(BaseModel):
    directions: List[List[float]]
    lambda_first_pass: List[float]
    steps: List[int]
    restarts: int
    iterates: List[List[List[float]]]


class DesignRequest(BaseModel):
    channel: ChannelModel
    restarts: int = Field(default=4, ge=0)
    line_searches: int = Field(default=200, ge=1)
    seed: int = 0


class DesignResponse(BaseModel):
    configs: List[dict]
    objective: float
    fisher_matrix: List[List[float]]
    order: Optional[List[int]] = None
    mub_aligned: Optional[List[List[float]]] = None
    mub_attains_max: Optional[bool] = None


class CaseStudyRequest(BaseModel):
    channel: ChannelModel
    strategy: str
    shot_grid: List[int]
    trials: int = Field(default=5, ge=1)
    seed: int = 0
    exact: bool = False


class MetricsRowModel(BaseModel):
    n_shots: int
    trial_count: int
    lambda_mean: List[float]
    lambda_var: List[float]
    hs_error: float
    complete: bool


class CaseStudyResponse(BaseModel):
    rows: List[MetricsRowModel]
    closed_form_rows: List[MetricsRowModel]


class RobustnessRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: List[float] = Field(alias="lambda")
    axis: List[float]
    alpha_grid: List[float]
    n_shots: int = Field(ge=1)
    trials: int = Field(default=5, ge=1)
    seed: int = 0


class RobustnessRowModel(BaseModel):
    alpha: float
    trial_count: int
    lambda_mean: List[float]
    lambda_var: List[float]
    hs_error: float


class RobustnessResponse(BaseModel):
    rows: List[RobustnessRowModel]
