"""Empirical norm-preservation tests for sampled embeddings.

The success event is the squared-norm condition
|embed(x)|^2 in (1 +- eps) |x|^2, checked per sampled input on a fixed
instance.  Squared norms are the quantity the spectral chain manipulates;
switching to unsquared norms only rescales eps by a constant factor.

A small absolute slack (1e-9 on the norm ratio) keeps exact isometries at
failure rate zero for every eps down to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .transforms import TransformInstance, embed

__all__ = [
    "DISTRIBUTIONS",
    "DistortionParams",
    "DistortionReport",
    "estimate_failure_rate",
    "check_pairwise",
    "chi_square_tail_check",
    "binomial_half_width",
    "squared_ratio_ok",
]

DISTRIBUTIONS = ("gaussian", "basis_vectors", "sparse_k")

RATIO_SLACK = 1e-9


@dataclass(frozen=True)
class DistortionParams:
    """Sampling plan for a failure-rate estimate.

    ``k`` only matters for the sparse_k distribution: support size of the
    sparse inputs, default round(sqrt(d)).
    """

    epsilon: float
    delta: float
    sample_count: int
    input_distribution: str = "gaussian"
    seed: int = 0
    k: int | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be positive, got {self.sample_count}")
        if self.input_distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"unknown distribution {self.input_distribution!r}; "
                f"expected one of {DISTRIBUTIONS}"
            )
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class DistortionReport:
    failure_count: int
    failure_rate: float
    sample_count: int
    half_width: float
    params: DistortionParams


def squared_ratio_ok(out_sq: float, in_sq: float, epsilon: float) -> bool:
    """Squared-norm preservation test on one sample; in_sq must be positive."""
    ratio = out_sq / in_sq
    return abs(ratio - 1.0) <= epsilon + RATIO_SLACK


def binomial_half_width(count: int, n: int) -> float:
    """Half-width of the exact (Clopper-Pearson) 95% interval for count/n."""
    if n < 1:
        raise ValueError("need at least one sample")
    lo = 0.0 if count == 0 else float(stats.beta.ppf(0.025, count, n - count + 1))
    hi = 1.0 if count == n else float(stats.beta.ppf(0.975, count + 1, n - count))
    return (hi - lo) / 2.0


def _draw(rng: np.random.Generator, dist: str, d: int, k: int | None) -> np.ndarray:
    """One input vector; zero vectors are redrawn so the ratio test is defined."""
    while True:
        if dist == "gaussian":
            x = rng.standard_normal(d)
        elif dist == "basis_vectors":
            x = np.zeros(d)
            x[rng.integers(0, d)] = 1.0
        else:  # sparse_k
            kk = k if k is not None else max(1, round(math.sqrt(d)))
            support = rng.choice(d, size=min(kk, d), replace=False)
            x = np.zeros(d)
            x[support] = rng.standard_normal(len(support))
            norm = np.linalg.norm(x)
            if norm > 0.0:
                x /= norm
        if float(x @ x) > 0.0:
            return x


def estimate_failure_rate(
    instance: TransformInstance, params: DistortionParams
) -> DistortionReport:
    """Fraction of sampled inputs whose squared norm leaves the (1 +- eps) band."""
    rng = np.random.default_rng(params.seed)
    failures = 0
    for _ in range(params.sample_count):
        x = _draw(rng, params.input_distribution, instance.d, params.k)
        y = embed(instance, x)
        if not squared_ratio_ok(float(y @ y), float(x @ x), params.epsilon):
            failures += 1
    return DistortionReport(
        failure_count=failures,
        failure_rate=failures / params.sample_count,
        sample_count=params.sample_count,
        half_width=binomial_half_width(failures, params.sample_count),
        params=params,
    )


def check_pairwise(
    dataset, instance: TransformInstance, epsilon: float
) -> tuple[int, int]:
    """Count preserved pairwise squared distances.

    By linearity the difference test runs on z = x - y directly.  Duplicate
    points (z = 0) are excluded from both counts; the dataset is expected to
    be distinct.
    """
    points = [np.asarray(p, dtype=float) for p in dataset]
    for p in points:
        if p.shape != (instance.d,):
            raise ValueError(f"point has shape {p.shape}, expected ({instance.d},)")
    preserved = 0
    total = 0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            z = points[i] - points[j]
            in_sq = float(z @ z)
            if in_sq == 0.0:
                continue
            total += 1
            y = embed(instance, z)
            if squared_ratio_ok(float(y @ y), in_sq, epsilon):
                preserved += 1
    return preserved, total


def chi_square_tail_check(
    d: int, alpha: float, sample_count: int, seed: int
) -> tuple[float, float]:
    """Empirical tail of | |g|^2 - d | >= alpha*d against the bound 2e^{-d a^2/8}.

    g is a standard Gaussian vector in R^d; returns (empirical_tail, bound).
    """
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if sample_count < 1:
        raise ValueError(f"sample_count must be positive, got {sample_count}")
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = max(1, min(sample_count, 10**7 // max(d, 1)))
    done = 0
    while done < sample_count:
        n = min(chunk, sample_count - done)
        g = rng.standard_normal((n, d))
        sq = np.sum(g * g, axis=1)
        hits += int(np.count_nonzero(np.abs(sq - d) >= alpha * d))
        done += n
    bound = 2.0 * math.exp(-d * alpha**2 / 8.0)
    return hits / sample_count, bound
