"""Gram-spectrum diagnostics and determinant lower bounds.

For an m x d matrix B (m <= d) with scale s, the chain implemented here is:
the eigenvalues of B^T B (computed from the smaller B B^T), the count of
eigenvalues at least d*s/(3m), a lower bound on the maximal submatrix
determinant from any leading block of the spectrum, and the resulting
operation lower bound for any bounded-coefficient circuit computing B.

Determinant quantities live in natural-log space throughout; the raw bound
reaches s**(m/2)-type magnitudes and overflows floats immediately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import gammaln

from .circuit import RealizedMatrix

__all__ = [
    "UniversalConstants",
    "SpectralReport",
    "gram_eigenvalues",
    "spectral_report",
    "trace_check",
    "frobenius_ratio",
    "count_large_eigenvalues",
    "det_lower_bound_log",
    "best_det_bound_log",
    "reference_det_bound_log",
    "exact_delta_small",
    "column_norm_census",
    "quadratic_form_residual",
    "t_parameter",
]

EXACT_DELTA_CAP = 8

NEG_EIG_REL_TOL = 1e-9


@dataclass(frozen=True)
class UniversalConstants:
    """Unpinned universal constants; every dependent check is a reported
    ratio, never a hard pass/fail."""

    c1: float = 1.0
    C1: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.c1 <= 1.0:
            raise ValueError(f"c1 must lie in (0, 1], got {self.c1}")
        if self.C1 < 1.0:
            raise ValueError(f"C1 must be >= 1, got {self.C1}")


@dataclass(frozen=True)
class SpectralReport:
    """Spectrum summary of one realized matrix.

    ``eigenvalues`` are the m eigenvalues of B^T B sorted non-increasing;
    ``threshold`` is d*s/(3m); ``large_count`` counts eigenvalues at or above
    it; ``det_log_lb`` is the best determinant log-bound over block sizes and
    ``ops_lb`` the operation bound it implies at the given coefficient bound.
    ``reference_det_log`` is the closed-form comparison value
    (l/2)*ln(c^2 s/(3 (e t)^2)) at l = ceil(c*m/t), for side-by-side reading.
    """

    m: int
    d: int
    scale: float
    eigenvalues: tuple[float, ...]
    trace: float
    frob_sq: float
    lambda_1: float
    threshold: float
    large_count: int
    t_param: float
    l_star: int
    det_log_lb: float
    ops_lb: float
    reference_det_log: float
    epsilon: float
    delta: float
    coeff_bound: float


def t_parameter(m: int, epsilon: float, delta: float) -> float:
    """Sparsity proxy t with m = t * epsilon**-2 * ln(1/delta)."""
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    return m * epsilon**2 / math.log(1.0 / delta)


def _entry_matrix(B) -> np.ndarray:
    if isinstance(B, RealizedMatrix):
        return B.entries
    return np.asarray(B, dtype=float)


def gram_eigenvalues(B) -> np.ndarray:
    """Eigenvalues of B^T B, sorted descending, via the m x m matrix B B^T.

    The two share their nonzero spectrum; the small side is cheaper for
    m <= d.  Round-off negatives within -1e-9 * lambda_1 are clamped to 0;
    anything more negative means a broken eigensolve and raises.
    """
    mat = _entry_matrix(B)
    if mat.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {mat.shape}")
    m, d = mat.shape
    if m > d:
        raise ValueError(f"need m <= d, got {m} x {d}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    eigs = np.linalg.eigvalsh(mat @ mat.T)[::-1].copy()
    lam1 = max(float(eigs[0]), 0.0)
    floor = -NEG_EIG_REL_TOL * lam1
    if eigs[-1] < floor:
        raise ArithmeticError(
            f"eigenvalue {eigs[-1]} below round-off floor {floor}"
        )
    np.clip(eigs, 0.0, None, out=eigs)
    return eigs


def _ln_binom(n: int, k) -> np.ndarray | float:
    return gammaln(n + 1) - gammaln(np.asarray(k) + 1) - gammaln(n - np.asarray(k) + 1)


def det_lower_bound_log(eigenvalues, l: int, d: int, m: int) -> float:
    """ln of the guaranteed |det| of some l x l submatrix:
    (sum_{i<=l} ln lambda_i - ln C(d,l) - ln C(m,l)) / 2.

    Requires 1 <= l <= m and lambda_l > 0.
    """
    eigs = np.asarray(eigenvalues, dtype=float)
    if not 1 <= l <= m:
        raise ValueError(f"need 1 <= l <= m, got l={l}, m={m}")
    if l > eigs.size or eigs[l - 1] <= 0.0:
        raise ValueError(f"eigenvalue {l} is not positive")
    return float(
        0.5 * (np.sum(np.log(eigs[:l])) - _ln_binom(d, l) - _ln_binom(m, l))
    )


def best_det_bound_log(eigenvalues, d: int, m: int) -> tuple[int, float]:
    """Maximize det_lower_bound_log over the block size; returns (l_star, log_bound)."""
    eigs = np.asarray(eigenvalues, dtype=float)
    npos = int(np.count_nonzero(eigs[: min(m, eigs.size)] > 0.0))
    if npos == 0:
        raise ValueError("all eigenvalues are zero; no determinant bound exists")
    ls = np.arange(1, npos + 1)
    cum = np.cumsum(np.log(eigs[:npos]))
    bounds = 0.5 * (cum - _ln_binom(d, ls) - _ln_binom(m, ls))
    k = int(np.argmax(bounds))
    return int(ls[k]), float(bounds[k])


def reference_det_bound_log(
    scale: float, m: int, t_param: float, c: float = 1.0
) -> float:
    """Closed-form comparison bound (l/2)*ln(c^2 s/(3 (e t)^2)), l = ceil(c m/t).

    Diagnostic only: c is an unpinned constant supplied by the caller.
    """
    if t_param <= 0 or c <= 0 or scale <= 0:
        raise ValueError("scale, t_param and c must be positive")
    l = math.ceil(c * m / t_param)
    return (l / 2.0) * math.log(c**2 * scale / (3.0 * (math.e * t_param) ** 2))


def count_large_eigenvalues(report: SpectralReport) -> int:
    """Number of eigenvalues at or above the d*s/(3m) threshold."""
    return int(sum(1 for lam in report.eigenvalues if lam >= report.threshold))


def trace_check(
    report: SpectralReport, s: float, epsilon: float, delta: float
) -> tuple[float, float, bool]:
    """Trace against its concentration bound.

    Returns (trace, (1-eps)(1-4*delta)*d*s, trace >= 2ds/3).  The boolean uses
    the weaker 2/3 constant, which the stated bound implies whenever
    epsilon <= 1/4 and delta <= 1/36 (enforced here).
    """
    if epsilon > 0.25 or delta > 1.0 / 36.0:
        raise ValueError(
            f"chain needs epsilon <= 1/4 and delta <= 1/36, got {epsilon}, {delta}"
        )
    rhs = (1.0 - epsilon) * (1.0 - 4.0 * delta) * report.d * s
    return report.trace, rhs, report.trace >= 2.0 * report.d * s / 3.0


def frobenius_ratio(
    report: SpectralReport, s: float, t_param: float, constants: UniversalConstants
) -> float:
    """frob_sq relative to its predicted ceiling 400*C1*t*(ds)^2/m.

    A diagnostic ratio, not pass/fail: C1 is unpinned.
    """
    if t_param <= 0:
        raise ValueError(f"t_param must be positive, got {t_param}")
    ceiling = 400.0 * constants.C1 * t_param * (report.d * s) ** 2 / report.m
    return report.frob_sq / ceiling


def exact_delta_small(B) -> float:
    """Exact max |det| over every square submatrix, by enumeration.

    Only for m, d <= 8: the subset count is already 12870 at 8 x 8.
    """
    mat = _entry_matrix(B)
    m, d = mat.shape
    if m > EXACT_DELTA_CAP or d > EXACT_DELTA_CAP:
        raise ValueError(f"exact enumeration capped at {EXACT_DELTA_CAP}, got {m} x {d}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix has non-finite entries")
    best = 0.0
    for l in range(1, min(m, d) + 1):
        col_sets = list(combinations(range(d), l))
        for rows in combinations(range(m), l):
            sub = mat[np.array(rows), :]
            # one batched determinant call per row subset
            stack = sub[:, np.array(col_sets)].transpose(1, 0, 2)
            best = max(best, float(np.max(np.abs(np.linalg.det(stack)))))
    return best


def column_norm_census(B, s: float, epsilon: float) -> int:
    """Number of columns whose scaled squared norm lands in [1-eps, 1+eps]."""
    mat = _entry_matrix(B)
    if s <= 0:
        raise ValueError(f"scale must be positive, got {s}")
    sq = np.sum(mat * mat, axis=0) / s
    return int(np.count_nonzero((sq >= 1.0 - epsilon) & (sq <= 1.0 + epsilon)))


def quadratic_form_residual(B, g) -> float:
    """g^T (B^T B) g minus its eigenbasis expansion sum_i lambda_i (U g)_i^2.

    Zero up to round-off for any inputs; a nonzero value at working precision
    flags an eigendecomposition problem.
    """
    mat = _entry_matrix(B)
    g = np.asarray(g, dtype=float)
    if g.shape != (mat.shape[1],):
        raise ValueError(f"g has shape {g.shape}, expected ({mat.shape[1]},)")
    gram = mat.T @ mat
    w, v = np.linalg.eigh(gram)
    coords = v.T @ g
    return float(g @ (gram @ g) - np.sum(w * coords * coords))


def spectral_report(
    B,
    *,
    scale: float | None = None,
    epsilon: float,
    delta: float,
    coeff_bound: float = 1.0,
    c: float = 1.0,
) -> SpectralReport:
    """Full spectrum summary of a realized matrix.

    ``scale`` defaults to the matrix's own; the trace is cross-checked against
    the squared Frobenius norm of the entries to relative 1e-9, which guards
    the eigensolve itself.
    """
    mat = _entry_matrix(B)
    if scale is None:
        scale = B.scale if isinstance(B, RealizedMatrix) else 1.0
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if coeff_bound <= 0.5:
        raise ValueError(f"coefficient bound must exceed 1/2, got {coeff_bound}")
    m, d = mat.shape
    eigs = gram_eigenvalues(mat)
    trace = float(np.sum(eigs))
    frob = float(np.sum(mat * mat))
    if frob > 0.0 and abs(trace - frob) > 1e-9 * frob:
        raise ArithmeticError(
            f"eigenvalue sum {trace} disagrees with squared Frobenius norm {frob}"
        )
    frob_sq = float(np.sum(eigs * eigs))
    threshold = d * scale / (3.0 * m)
    t_param = t_parameter(m, epsilon, delta)
    if eigs[0] > 0.0:
        l_star, det_log_lb = best_det_bound_log(eigs, d, m)
        ops_lb = max(0.0, det_log_lb / math.log(2.0 * coeff_bound))
    else:
        l_star, det_log_lb, ops_lb = 0, float("-inf"), 0.0
    return SpectralReport(
        m=m,
        d=d,
        scale=float(scale),
        eigenvalues=tuple(float(x) for x in eigs),
        trace=trace,
        frob_sq=frob_sq,
        lambda_1=float(eigs[0]),
        threshold=threshold,
        large_count=int(np.count_nonzero(eigs >= threshold)),
        t_param=t_param,
        l_star=l_star,
        det_log_lb=det_log_lb,
        ops_lb=ops_lb,
        reference_det_log=reference_det_bound_log(scale, m, t_param, c),
        epsilon=float(epsilon),
        delta=float(delta),
        coeff_bound=float(coeff_bound),
    )
