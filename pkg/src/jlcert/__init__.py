"""Bounded-coefficient circuit model for scaled random embeddings, with
numeric certification of the determinant/spectrum operation bounds."""

from ._version import __version__
from .circuit import (
    Gate,
    LinearCircuit,
    RealizedMatrix,
    check_coeff_bound,
    circuit_from_text,
    circuit_to_text,
    evaluate,
    morgenstern_bound,
    op_count,
    realize_matrix,
)
from .distortion import (
    DistortionParams,
    DistortionReport,
    check_pairwise,
    chi_square_tail_check,
    estimate_failure_rate,
)
from .harness import (
    CertificationError,
    ExperimentConfig,
    ExperimentRow,
    bench_embed,
    certify_instance,
    over_A_failure_sweep,
    run_experiment,
)
from .spectral import (
    SpectralReport,
    UniversalConstants,
    best_det_bound_log,
    column_norm_census,
    count_large_eigenvalues,
    det_lower_bound_log,
    exact_delta_small,
    frobenius_ratio,
    gram_eigenvalues,
    quadratic_form_residual,
    spectral_report,
    trace_check,
)
from .transforms import (
    FAMILIES,
    TransformInstance,
    compile_circuit,
    embed,
    fwht,
    fwht_circuit,
    instance_from_json,
    instance_to_json,
    kac_default_steps,
    planned_gate_count,
    sample,
)

__all__ = [
    "__version__",
    "Gate",
    "LinearCircuit",
    "RealizedMatrix",
    "evaluate",
    "op_count",
    "realize_matrix",
    "check_coeff_bound",
    "morgenstern_bound",
    "circuit_to_text",
    "circuit_from_text",
    "FAMILIES",
    "TransformInstance",
    "sample",
    "embed",
    "compile_circuit",
    "planned_gate_count",
    "fwht",
    "fwht_circuit",
    "kac_default_steps",
    "instance_to_json",
    "instance_from_json",
    "DistortionParams",
    "DistortionReport",
    "estimate_failure_rate",
    "check_pairwise",
    "chi_square_tail_check",
    "SpectralReport",
    "UniversalConstants",
    "gram_eigenvalues",
    "spectral_report",
    "trace_check",
    "frobenius_ratio",
    "count_large_eigenvalues",
    "det_lower_bound_log",
    "best_det_bound_log",
    "exact_delta_small",
    "column_norm_census",
    "quadratic_form_residual",
    "CertificationError",
    "ExperimentConfig",
    "ExperimentRow",
    "run_experiment",
    "certify_instance",
    "over_A_failure_sweep",
    "bench_embed",
]
