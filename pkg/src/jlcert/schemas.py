"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

DEFAULT_EPSILON = 0.25
DEFAULT_DELTA = 1.0 / 36.0


class InstanceSpec(BaseModel):
    family: str
    m: int = Field(ge=1)
    d: int = Field(ge=1)
    sparsity: int | None = None
    q: float | None = None
    steps: int | None = None
    seed: int = Field(default=0, ge=0)


class SampleResponse(BaseModel):
    instance: dict
    planned_gates: int


class SpectraRequest(BaseModel):
    instance: InstanceSpec | None = None
    matrix: list[list[float]] | None = None
    scale: float | None = None
    epsilon: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA
    exact_delta: bool = False


class SpectraResponse(BaseModel):
    m: int
    d: int
    scale: float
    eigenvalues: list[float]
    trace: float
    frob_sq: float
    lambda_1: float
    threshold: float
    large_count: int
    t_param: float
    l_star: int
    det_log_lb: float | None
    ops_lb: float
    reference_det_log: float
    epsilon: float
    delta: float
    coeff_bound: float
    exact_delta: float | None = None


class DistortionRequest(BaseModel):
    instance: InstanceSpec
    epsilon: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA
    samples: int = Field(default=1000, ge=1)
    distribution: str = "gaussian"
    k: int | None = None
    seed: int = Field(default=0, ge=0)


class DistortionResponse(BaseModel):
    family: str
    m: int
    d: int
    failure_count: int
    failure_rate: float
    sample_count: int
    half_width: float
    epsilon: float
    distribution: str
    seed: int


class CertifyRequest(BaseModel):
    instance: InstanceSpec
    epsilon: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA


class CertifyResponse(BaseModel):
    family: str
    m: int
    d: int
    scale: float
    seed: int
    op_count: int
    ops_lb: float
    det_log_lb: float | None
    l_star: int
    large_count: int
    trace: float
    coeff_ok: bool
    passed: bool


class BenchRequest(BaseModel):
    instance: InstanceSpec
    repetitions: int = Field(default=5, ge=3)


class BenchResponse(BaseModel):
    family: str
    m: int
    d: int
    median_seconds: float
    ops: int


class RunRequest(BaseModel):
    config: dict


class RunResponse(BaseModel):
    rows: list[dict]
    meta: dict


class HealthResponse(BaseModel):
    status: str
    version: str
