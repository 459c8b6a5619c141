"""HTTP service exposing the sampling/certification pipeline.

Pure compute: no endpoint touches the filesystem.  The run endpoint returns
rows and metadata for the caller to persist, so local and remote use write
identical bytes through the same serializers.
"""

from __future__ import annotations

import json

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from ._version import __version__
from .circuit import realize_matrix
from .distortion import DistortionParams, estimate_failure_rate
from .harness import (
    CertificationError,
    bench_embed,
    certify_instance,
    config_from_json,
    meta_json_text,
    row_to_dict,
    run_experiment,
)
from .schemas import (
    BenchRequest,
    BenchResponse,
    CertifyRequest,
    CertifyResponse,
    DistortionRequest,
    DistortionResponse,
    HealthResponse,
    InstanceSpec,
    RunRequest,
    RunResponse,
    SampleResponse,
    SpectraRequest,
    SpectraResponse,
)
from .spectral import exact_delta_small, spectral_report
from .transforms import (
    TransformInstance,
    compile_circuit,
    instance_to_json,
    planned_gate_count,
    sample,
)

DISTRIBUTION_ALIASES = {"basis": "basis_vectors"}


def _sample_from_spec(spec: InstanceSpec) -> TransformInstance:
    return sample(
        spec.family,
        spec.m,
        spec.d,
        sparsity=spec.sparsity,
        q=spec.q,
        steps=spec.steps,
        seed=spec.seed,
    )


def _spectra_response(report, exact: float | None) -> SpectraResponse:
    det = report.det_log_lb
    return SpectraResponse(
        m=report.m,
        d=report.d,
        scale=report.scale,
        eigenvalues=list(report.eigenvalues),
        trace=report.trace,
        frob_sq=report.frob_sq,
        lambda_1=report.lambda_1,
        threshold=report.threshold,
        large_count=report.large_count,
        t_param=report.t_param,
        l_star=report.l_star,
        det_log_lb=det if det > float("-inf") else None,
        ops_lb=report.ops_lb,
        reference_det_log=report.reference_det_log,
        epsilon=report.epsilon,
        delta=report.delta,
        coeff_bound=report.coeff_bound,
        exact_delta=exact,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="jlcert", version=__version__)

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/sample", response_model=SampleResponse)
    def sample_endpoint(req: InstanceSpec) -> SampleResponse:
        inst = _sample_from_spec(req)
        return SampleResponse(
            instance=instance_to_json(inst), planned_gates=planned_gate_count(inst)
        )

    @app.post("/spectra", response_model=SpectraResponse)
    def spectra(req: SpectraRequest) -> SpectraResponse:
        if (req.instance is None) == (req.matrix is None):
            raise ValueError("provide exactly one of instance or matrix")
        if req.instance is not None:
            if req.scale is not None:
                raise ValueError("scale only applies to matrix input")
            inst = _sample_from_spec(req.instance)
            mat = realize_matrix(compile_circuit(inst))
            entries, scale = mat.entries, mat.scale
        else:
            entries = np.asarray(req.matrix, dtype=float)
            if entries.ndim != 2 or entries.size == 0:
                raise ValueError("matrix must be a non-empty 2-d array")
            scale = 1.0 if req.scale is None else req.scale
        report = spectral_report(
            entries, scale=scale, epsilon=req.epsilon, delta=req.delta
        )
        exact = float(exact_delta_small(entries)) if req.exact_delta else None
        return _spectra_response(report, exact)

    @app.post("/distortion", response_model=DistortionResponse)
    def distortion(req: DistortionRequest) -> DistortionResponse:
        inst = _sample_from_spec(req.instance)
        dist = DISTRIBUTION_ALIASES.get(req.distribution, req.distribution)
        rep = estimate_failure_rate(
            inst,
            DistortionParams(
                epsilon=req.epsilon,
                delta=req.delta,
                sample_count=req.samples,
                input_distribution=dist,
                seed=req.seed,
                k=req.k,
            ),
        )
        return DistortionResponse(
            family=inst.family,
            m=inst.m,
            d=inst.d,
            failure_count=rep.failure_count,
            failure_rate=rep.failure_rate,
            sample_count=rep.sample_count,
            half_width=rep.half_width,
            epsilon=req.epsilon,
            distribution=dist,
            seed=req.seed,
        )

    @app.post("/certify", response_model=CertifyResponse)
    def certify(req: CertifyRequest) -> CertifyResponse:
        inst = _sample_from_spec(req.instance)
        report, gates, coeff_ok = certify_instance(inst, req.epsilon, req.delta)
        det = report.det_log_lb
        return CertifyResponse(
            family=inst.family,
            m=inst.m,
            d=inst.d,
            scale=inst.scale,
            seed=inst.seed,
            op_count=gates,
            ops_lb=report.ops_lb,
            det_log_lb=det if det > float("-inf") else None,
            l_star=report.l_star,
            large_count=report.large_count,
            trace=report.trace,
            coeff_ok=coeff_ok,
            passed=coeff_ok and gates >= report.ops_lb,
        )

    @app.post("/bench", response_model=BenchResponse)
    def bench(req: BenchRequest) -> BenchResponse:
        inst = _sample_from_spec(req.instance)
        seconds, ops = bench_embed(inst, req.repetitions)
        return BenchResponse(
            family=inst.family, m=inst.m, d=inst.d, median_seconds=seconds, ops=ops
        )

    @app.post("/run", response_model=RunResponse)
    def run(req: RunRequest) -> RunResponse:
        config = config_from_json({**req.config, "output_dir": None})
        try:
            rows = run_experiment(config)
        except CertificationError as e:
            raise HTTPException(status_code=409, detail=str(e)) from e
        return RunResponse(
            rows=[row_to_dict(r) for r in rows],
            meta=json.loads(meta_json_text(config)),
        )

    return app


app = create_app()
