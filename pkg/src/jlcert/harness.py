"""Seeded experiment runner tying sampling, compilation, spectra and
distortion together, with deterministic persisted outputs.

Every trial follows the same chain: sample an instance, compile its circuit,
verify the unit coefficient bound, realize the matrix, summarize the
spectrum, estimate the empirical failure rate, and time one embed.  A row
where the compiled gate count falls below the certified operation lower
bound is a bug by construction and aborts the run.

All randomness flows from the config's base seed through stable per-trial
hashes, so reruns are byte-identical apart from wall-clock timings (the last
CSV column).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .circuit import check_coeff_bound, op_count, realize_matrix
from .distortion import DistortionParams, estimate_failure_rate, squared_ratio_ok
from .spectral import SpectralReport, UniversalConstants, spectral_report
from .transforms import (
    FAMILIES,
    TransformInstance,
    compile_circuit,
    embed,
    kac_default_steps,
    planned_gate_count,
    sample,
)

__all__ = [
    "CertificationError",
    "ExperimentConfig",
    "ExperimentRow",
    "CSV_SCHEMA",
    "default_family_params",
    "derive_seed",
    "run_experiment",
    "certify_instance",
    "over_A_failure_sweep",
    "bench_embed",
    "write_outputs",
    "rows_csv_text",
    "rows_json_text",
    "meta_json_text",
    "config_to_json",
    "config_from_json",
    "row_to_dict",
    "row_from_dict",
]

CSV_SCHEMA = (
    "family,m,d,scale,trial,seed,op_count,ops_lb,det_log_lb,"
    "trace,frob_sq,large_count,failure_rate,embed_seconds"
)

LOG_CONVENTION = (
    "natural log throughout: t_param = m*eps^2/ln(1/delta), determinant "
    "bounds are ln-scale, operation bounds divide by ln(2r)"
)


class CertificationError(Exception):
    """A compiled circuit undercut its own certified operation bound."""


@dataclass(frozen=True)
class ExperimentConfig:
    families: tuple[str, ...]
    cells: tuple[tuple[int, int], ...]
    epsilon: float
    delta: float
    trials: int
    base_seed: int
    output_dir: str | None = None
    distortion_samples: int = 400
    distortion_distribution: str = "gaussian"
    constants: UniversalConstants = field(default_factory=UniversalConstants)
    family_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.families:
            raise ValueError("config needs at least one family")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValueError(f"unknown family {fam!r}")
        if not self.cells:
            raise ValueError("config needs at least one (m, d) cell")
        for m, d in self.cells:
            if not 1 <= m <= d:
                raise ValueError(f"cell needs 1 <= m <= d, got ({m}, {d})")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class ExperimentRow:
    family: str
    m: int
    d: int
    scale: float
    trial: int
    seed: int
    op_count: int
    ops_lb: float
    det_log_lb: float
    trace: float
    frob_sq: float
    large_count: int
    failure_rate: float
    embed_seconds: float


def derive_seed(base_seed: int, key: str) -> int:
    """Stable 63-bit trial seed: base plus a hash of the key string."""
    digest = hashlib.sha256(key.encode()).digest()
    return (base_seed + int.from_bytes(digest[:8], "big")) % 2**63


def default_family_params(
    family: str, m: int, d: int, epsilon: float, delta: float
) -> dict:
    """Per-family sampling parameters when the config does not pin them."""
    if family == "SparseKN":
        return {"sparsity": max(1, min(m, round(epsilon * m)))}
    if family == "FastJL":
        return {"q": min(1.0, math.log2(d) ** 2 / d)}
    if family == "Kac":
        return {"steps": kac_default_steps(d, m, delta)}
    return {}


def _cell_params(config: ExperimentConfig, family: str, m: int, d: int) -> dict:
    params = default_family_params(family, m, d, config.epsilon, config.delta)
    params.update(config.family_params.get(family, {}))
    return params


def certify_instance(
    instance: TransformInstance,
    epsilon: float,
    delta: float,
    *,
    c: float = 1.0,
) -> tuple[SpectralReport, int, bool]:
    """Full chain on one instance: compile, verify the unit coefficient
    bound, and compare gate count against the spectral operation bound.

    Returns (report, gate_count, coeff_ok); the chain holds exactly when
    coeff_ok and gate_count >= report.ops_lb.  A correct compilation can
    never violate it, so run_experiment treats a violation as fatal.
    """
    circuit = compile_circuit(instance)
    coeff_ok = check_coeff_bound(circuit, 1.0)
    gates = op_count(circuit)
    report = spectral_report(
        realize_matrix(circuit), epsilon=epsilon, delta=delta, coeff_bound=1.0, c=c
    )
    return report, gates, coeff_ok


def _run_trial(
    config: ExperimentConfig, family: str, m: int, d: int, trial: int
) -> ExperimentRow:
    seed = derive_seed(config.base_seed, f"{family}:{m}:{d}:{trial}")
    params = _cell_params(config, family, m, d)
    instance = sample(family, m, d, seed=seed, **params)
    report, gates, coeff_ok = certify_instance(instance, config.epsilon, config.delta)
    if not coeff_ok or gates < report.ops_lb:
        raise CertificationError(
            f"{family} m={m} d={d} seed={seed}: gate count {gates} undercuts "
            f"certified bound {report.ops_lb:.3f} (coeff_ok={coeff_ok})"
        )
    dist = estimate_failure_rate(
        instance,
        DistortionParams(
            epsilon=config.epsilon,
            delta=config.delta,
            sample_count=config.distortion_samples,
            input_distribution=config.distortion_distribution,
            seed=derive_seed(config.base_seed, f"{family}:{m}:{d}:{trial}:distortion"),
        ),
    )
    seconds, _ = bench_embed(instance, 3)
    return ExperimentRow(
        family=family,
        m=m,
        d=d,
        scale=instance.scale,
        trial=trial,
        seed=seed,
        op_count=gates,
        ops_lb=report.ops_lb,
        det_log_lb=report.det_log_lb,
        trace=report.trace,
        frob_sq=report.frob_sq,
        large_count=report.large_count,
        failure_rate=dist.failure_rate,
        embed_seconds=seconds,
    )


def run_experiment(config: ExperimentConfig) -> list[ExperimentRow]:
    """All cells and trials, rows sorted by (family, m, d, trial); writes
    rows.csv / rows.json / meta.json when the config names an output
    directory."""
    rows = [
        _run_trial(config, family, m, d, trial)
        for family in config.families
        for m, d in config.cells
        for trial in range(config.trials)
    ]
    rows.sort(key=lambda r: (r.family, r.m, r.d, r.trial))
    if config.output_dir is not None:
        write_outputs(rows, config, config.output_dir)
    return rows


def over_A_failure_sweep(
    family: str,
    m: int,
    d: int,
    epsilon: float,
    x,
    instance_count: int,
    seed: int,
    *,
    sparsity: int | None = None,
    q: float | None = None,
    steps: int | None = None,
) -> float:
    """Failure rate over re-sampled instances at one fixed input.

    This is the literal quantifier order of the scaled-embedding property:
    the input stays fixed while the matrix is redrawn.
    """
    if instance_count < 1:
        raise ValueError(f"instance_count must be >= 1, got {instance_count}")
    x = np.asarray(x, dtype=float)
    in_sq = float(x @ x)
    if in_sq == 0.0:
        raise ValueError("the fixed input must be nonzero")
    failures = 0
    for i in range(instance_count):
        inst = sample(
            family, m, d,
            sparsity=sparsity, q=q, steps=steps,
            seed=derive_seed(seed, f"sweep:{i}"),
        )
        y = embed(inst, x)
        if not squared_ratio_ok(float(y @ y), in_sq, epsilon):
            failures += 1
    return failures / instance_count


def bench_embed(
    instance: TransformInstance, repetitions: int
) -> tuple[float, int]:
    """Median embed wall-time over repetitions on one fixed random input,
    with the circuit gate count for ops-vs-time comparison."""
    if repetitions < 3:
        raise ValueError(f"need at least 3 repetitions, got {repetitions}")
    x = np.random.default_rng(instance.seed).standard_normal(instance.d)
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        embed(instance, x)
        times.append(time.perf_counter() - start)
    return statistics.median(times), planned_gate_count(instance)


def _jsonable_float(x: float):
    return x if math.isfinite(x) else None


def _finite_or_neg_inf(x) -> float:
    return float("-inf") if x is None else float(x)


def row_to_dict(row: ExperimentRow) -> dict:
    return {
        "family": row.family,
        "m": row.m,
        "d": row.d,
        "scale": row.scale,
        "trial": row.trial,
        "seed": row.seed,
        "op_count": row.op_count,
        "ops_lb": row.ops_lb,
        "det_log_lb": _jsonable_float(row.det_log_lb),
        "trace": row.trace,
        "frob_sq": row.frob_sq,
        "large_count": row.large_count,
        "failure_rate": row.failure_rate,
        "embed_seconds": row.embed_seconds,
    }


def row_from_dict(obj: dict) -> ExperimentRow:
    return ExperimentRow(
        family=obj["family"],
        m=int(obj["m"]),
        d=int(obj["d"]),
        scale=float(obj["scale"]),
        trial=int(obj["trial"]),
        seed=int(obj["seed"]),
        op_count=int(obj["op_count"]),
        ops_lb=float(obj["ops_lb"]),
        det_log_lb=_finite_or_neg_inf(obj["det_log_lb"]),
        trace=float(obj["trace"]),
        frob_sq=float(obj["frob_sq"]),
        large_count=int(obj["large_count"]),
        failure_rate=float(obj["failure_rate"]),
        embed_seconds=float(obj["embed_seconds"]),
    )


def _csv_cell(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def rows_csv_text(rows: list[ExperimentRow]) -> str:
    buf = io.StringIO()
    buf.write("# jlcert rows schema v1\n")
    writer = csv.writer(buf, lineterminator="\n")
    names = CSV_SCHEMA.split(",")
    writer.writerow(names)
    for row in rows:
        d = row_to_dict(row)
        d["det_log_lb"] = row.det_log_lb  # CSV keeps -inf spelled out
        writer.writerow([_csv_cell(d[name]) for name in names])
    return buf.getvalue()


def rows_json_text(rows: list[ExperimentRow]) -> str:
    doc = {"schema": "jlcert-rows-v1", "rows": [row_to_dict(r) for r in rows]}
    return json.dumps(doc, indent=2) + "\n"


def config_to_json(config: ExperimentConfig) -> dict:
    return {
        "families": list(config.families),
        "cells": [[m, d] for m, d in config.cells],
        "epsilon": config.epsilon,
        "delta": config.delta,
        "trials": config.trials,
        "base_seed": config.base_seed,
        "output_dir": config.output_dir,
        "distortion_samples": config.distortion_samples,
        "distortion_distribution": config.distortion_distribution,
        "constants": {"c1": config.constants.c1, "C1": config.constants.C1},
        "family_params": config.family_params,
    }


def config_from_json(obj: dict) -> ExperimentConfig:
    required = ("families", "cells", "epsilon", "delta", "trials", "base_seed")
    missing = [name for name in required if name not in obj]
    if missing:
        raise ValueError(f"config missing required fields: {', '.join(missing)}")
    constants = obj.get("constants", {})
    return ExperimentConfig(
        families=tuple(obj["families"]),
        cells=tuple((int(m), int(d)) for m, d in obj["cells"]),
        epsilon=float(obj["epsilon"]),
        delta=float(obj["delta"]),
        trials=int(obj["trials"]),
        base_seed=int(obj["base_seed"]),
        output_dir=obj.get("output_dir"),
        distortion_samples=int(obj.get("distortion_samples", 400)),
        distortion_distribution=obj.get("distortion_distribution", "gaussian"),
        constants=UniversalConstants(
            c1=float(constants.get("c1", 1.0)), C1=float(constants.get("C1", 1.0))
        ),
        family_params=dict(obj.get("family_params", {})),
    )


def meta_json_text(config: ExperimentConfig) -> str:
    echo = config_to_json(config)
    echo["output_dir"] = None  # run location must not affect the metadata bytes
    doc = {
        "schema": "jlcert-meta-v1",
        "version": __version__,
        "csv_schema": CSV_SCHEMA,
        "log_convention": LOG_CONVENTION,
        "config": echo,
    }
    return json.dumps(doc, indent=2) + "\n"


def write_outputs(
    rows: list[ExperimentRow], config: ExperimentConfig, out_dir
) -> list[Path]:
    """Persist rows.csv, rows.json and meta.json under out_dir."""
    out = Path(out_dir)
    written = []
    texts = {
        "rows.csv": rows_csv_text(rows),
        "rows.json": rows_json_text(rows),
        "meta.json": meta_json_text(config),
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in texts.items():
            path = out / name
            path.write_text(text)
            written.append(path)
    except OSError as e:
        raise OSError(f"failed writing experiment outputs under {out}: {e}") from e
    return written
