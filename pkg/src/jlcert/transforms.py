"""Random embedding families compiled to bounded-coefficient circuits.

Five families are provided: dense random-sign projection, sparse column-wise
random signs, the diagonal/Hadamard/sparse-projection pipeline, a Toeplitz
matrix of random signs behind a sign diagonal, and a random-rotation walk on
coordinate pairs.  Sampling is fully determined by a 64-bit seed; ``embed``
applies the family's fast algorithm directly, while ``compile_circuit``
emits an equivalent :class:`~jlcert.circuit.LinearCircuit` whose gate
coefficients all lie in [-1, 1].

Every family declares a scale s so that embed(x) = s**-0.5 * (A @ x) for the
realized matrix A of its compiled circuit: s = m for the dense and Toeplitz
families, s = column sparsity for the sparse family, s = q*m*d for the
Hadamard pipeline (unnormalized butterflies and a density-q sign projection),
and s = m/d for the rotation walk.  The scales make E[||embed(x)||^2] equal
||x||^2 exactly over each family's randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse as sp

from .circuit import Gate, LinearCircuit

__all__ = [
    "FAMILIES",
    "TransformInstance",
    "sample",
    "embed",
    "compile_circuit",
    "planned_gate_count",
    "fwht",
    "fwht_circuit",
    "apply_kac_rotations",
    "kac_default_steps",
    "instance_to_json",
    "instance_from_json",
]

FAMILIES = ("DenseRademacher", "SparseKN", "FastJL", "ToeplitzD", "Kac")


@dataclass(frozen=True, eq=False)
class TransformInstance:
    """One sampled embedding, fully materialized and reproducible from its seed.

    ``data`` holds the family-specific realization (read-only arrays); it is
    never serialized, since resampling with the same seed rebuilds it
    bit-exactly.
    """

    family: str
    m: int
    d: int
    scale: float
    seed: int
    sparsity: int | None = None
    q: float | None = None
    steps: int | None = None
    data: dict = field(default_factory=dict, repr=False)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _signs(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0


def _lock(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.setflags(write=False)


def kac_default_steps(d: int, m: int, delta_target: float) -> int:
    """Default rotation count ceil(d ln d + m ln(1/delta_target))."""
    if not 0 < delta_target < 1:
        raise ValueError(f"delta_target must lie in (0, 1), got {delta_target}")
    return max(1, math.ceil(d * math.log(d) + m * math.log(1.0 / delta_target)))


def sample(
    family: str,
    m: int,
    d: int,
    *,
    sparsity: int | None = None,
    q: float | None = None,
    steps: int | None = None,
    seed: int,
) -> TransformInstance:
    """Draw one instance of the given family.

    Requires 1 <= m <= d.  FastJL and ToeplitzD additionally require d to be
    a power of two (inputs must be zero-padded by the caller otherwise);
    SparseKN needs 1 <= sparsity <= m, FastJL needs q in (0, 1], Kac needs
    steps >= 0.  Identical arguments always produce identical instances.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if not (1 <= m <= d):
        raise ValueError(f"need 1 <= m <= d, got m={m}, d={d}")
    if not (0 <= seed < 2**64):
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(seed)

    if family == "DenseRademacher":
        matrix = _signs(rng, (m, d))
        _lock(matrix)
        return TransformInstance(family, m, d, float(m), seed, data={"matrix": matrix})

    if family == "SparseKN":
        if sparsity is None or not (1 <= sparsity <= m):
            raise ValueError(f"SparseKN needs 1 <= sparsity <= m, got {sparsity}")
        rows = np.empty((d, sparsity), dtype=np.int64)
        signs = np.empty((d, sparsity))
        for j in range(d):
            rows[j] = rng.permutation(m)[:sparsity]
            signs[j] = _signs(rng, sparsity)
        _lock(rows, signs)
        return TransformInstance(
            family, m, d, float(sparsity), seed, sparsity=sparsity,
            data={"rows": rows, "signs": signs},
        )

    if family == "FastJL":
        if not _is_pow2(d):
            raise ValueError(f"FastJL requires d to be a power of two, got {d}")
        if q is None or not (0.0 < q <= 1.0):
            raise ValueError(f"FastJL needs q in (0, 1], got {q}")
        diag = _signs(rng, d)
        mask = rng.random((m, d)) < q
        proj = sp.csr_matrix(np.where(mask, _signs(rng, (m, d)), 0.0))
        _lock(diag)
        # scale q*m*d: the density-q sign projection contributes q*m and the
        # unnormalized Hadamard contributes d to the expected squared norm
        return TransformInstance(
            family, m, d, q * m * d, seed, q=q, data={"diag": diag, "proj": proj}
        )

    if family == "ToeplitzD":
        if not _is_pow2(d):
            raise ValueError(f"ToeplitzD requires d to be a power of two, got {d}")
        diagonals = _signs(rng, 2 * d - 1)
        diag = _signs(rng, d)
        _lock(diagonals, diag)
        return TransformInstance(
            family, m, d, float(m), seed,
            data={"diagonals": diagonals, "diag": diag},
        )

    # Kac
    if steps is None or steps < 0:
        raise ValueError(f"Kac needs steps >= 0, got {steps}")
    if steps > 0 and d < 2:
        raise ValueError("Kac rotations need d >= 2")
    first = rng.integers(0, d, size=steps)
    second = rng.integers(0, d - 1, size=steps) if d > 1 else np.zeros(steps, np.int64)
    second = second + (second >= first)  # distinct pair without rejection
    pairs = np.stack([first, second], axis=1).astype(np.int64)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=steps)
    _lock(pairs, angles)
    return TransformInstance(
        family, m, d, m / d, seed, steps=steps, data={"pairs": pairs, "angles": angles}
    )


def fwht(x) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform H @ x via in-order butterflies.

    The length must be a power of two; applying the transform twice
    multiplies the input by its length.
    """
    a = np.array(x, dtype=float)
    n = a.size
    if not _is_pow2(n):
        raise ValueError(f"length must be a power of two, got {n}")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :] + a[:, 1, :]
        bot = a[:, 0, :] - a[:, 1, :]
        a = np.stack((top, bot), axis=1)
        h *= 2
    return a.reshape(n)


def _toeplitz_dense(inst: TransformInstance) -> np.ndarray:
    # T[i, j] = diagonals[i - j + d - 1], constant along each diagonal
    idx = np.arange(inst.m)[:, None] - np.arange(inst.d)[None, :] + inst.d - 1
    return inst.data["diagonals"][idx]


def apply_kac_rotations(inst: TransformInstance, x) -> np.ndarray:
    """Apply only the rotation steps (no truncation, no scaling)."""
    v = np.array(x, dtype=float)
    if v.shape != (inst.d,):
        raise ValueError(f"input has shape {v.shape}, expected ({inst.d},)")
    pairs = inst.data["pairs"]
    cos = np.cos(inst.data["angles"])
    sin = np.sin(inst.data["angles"])
    for k in range(pairs.shape[0]):
        i, j = pairs[k]
        vi, vj = v[i], v[j]
        v[i] = cos[k] * vi + sin[k] * vj
        v[j] = -sin[k] * vi + cos[k] * vj
    return v


def embed(inst: TransformInstance, x) -> np.ndarray:
    """Apply the sampled embedding to x using the family's fast algorithm.

    Returns scale**-0.5 * (A @ x), a vector of length m.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.d,):
        raise ValueError(f"input has shape {x.shape}, expected ({inst.d},)")
    root = inst.scale**-0.5

    if inst.family == "DenseRademacher":
        return root * (inst.data["matrix"] @ x)
    if inst.family == "SparseKN":
        out = np.zeros(inst.m)
        np.add.at(
            out,
            inst.data["rows"].ravel(),
            (inst.data["signs"] * x[:, None]).ravel(),
        )
        return root * out
    if inst.family == "FastJL":
        return root * (inst.data["proj"] @ fwht(inst.data["diag"] * x))
    if inst.family == "ToeplitzD":
        return root * (_toeplitz_dense(inst) @ (inst.data["diag"] * x))
    # Kac: rotate, keep the first m coordinates
    return root * apply_kac_rotations(inst, x)[: inst.m]


class _Builder:
    """Accumulates gates; value indices are 0 (constant), 1..d (inputs), then gates."""

    def __init__(self, d: int):
        self.d = d
        self.gates: list[Gate] = []
        self._zero: int | None = None

    def gate(self, lam: float, mu: float, left: int, right: int) -> int:
        self.gates.append(Gate(lam, mu, left, right))
        return self.d + len(self.gates)

    def zero(self) -> int:
        # One shared all-zero value serves every empty output row.
        if self._zero is None:
            self._zero = self.gate(0.0, 0.0, 1, 1)
        return self._zero


def _emit_rows_paired(b: _Builder, rows: list[list[tuple[int, float]]]) -> list[int]:
    """Accumulate each row's terms, folding the first two into one gate.

    A row with n >= 2 terms costs n - 1 gates, a single term costs one copy
    gate, and all empty rows share one zero gate.
    """
    taps = []
    for terms in rows:
        if not terms:
            taps.append(b.zero())
            continue
        if len(terms) == 1:
            j, c = terms[0]
            taps.append(b.gate(c, 0.0, j, j))
            continue
        (j0, c0), (j1, c1) = terms[0], terms[1]
        acc = b.gate(c0, c1, j0, j1)
        for j, c in terms[2:]:
            acc = b.gate(1.0, c, acc, j)
        taps.append(acc)
    return taps


def _emit_rows_scatter(b: _Builder, rows: list[list[tuple[int, float]]]) -> list[int]:
    """One gate per term: a copy gate on first touch, accumulations after."""
    taps = []
    for terms in rows:
        if not terms:
            taps.append(b.zero())
            continue
        j0, c0 = terms[0]
        acc = b.gate(c0, 0.0, j0, j0)
        for j, c in terms[1:]:
            acc = b.gate(1.0, c, acc, j)
        taps.append(acc)
    return taps


def _emit_diag(b: _Builder, diag: np.ndarray) -> list[int]:
    return [b.gate(float(diag[j]), 0.0, 1 + j, 1 + j) for j in range(len(diag))]


def _emit_fwht(b: _Builder, cur: list[int]) -> list[int]:
    d = len(cur)
    h = 1
    while h < d:
        for blk in range(0, d, 2 * h):
            for j in range(blk, blk + h):
                u, v = cur[j], cur[j + h]
                cur[j] = b.gate(1.0, 1.0, u, v)
                cur[j + h] = b.gate(1.0, -1.0, u, v)
        h *= 2
    return cur


def fwht_circuit(d: int, scale: float | None = None) -> LinearCircuit:
    """Butterfly circuit computing the unnormalized Hadamard transform.

    Uses d*log2(d) gates with coefficients +-1; the default scale d makes the
    scaled output an isometry.
    """
    if not _is_pow2(d):
        raise ValueError(f"d must be a power of two, got {d}")
    b = _Builder(d)
    taps = _emit_fwht(b, list(range(1, d + 1)))
    return LinearCircuit(
        input_dim=d,
        gates=tuple(b.gates),
        taps=tuple(taps),
        coeff_bound=1.0,
        scale=float(d) if scale is None else scale,
    )


def _dense_rows(matrix: np.ndarray, sources: list[int]) -> list[list[tuple[int, float]]]:
    m, d = matrix.shape
    return [[(sources[j], float(matrix[i, j])) for j in range(d)] for i in range(m)]


def compile_circuit(inst: TransformInstance) -> LinearCircuit:
    """Emit a circuit with coefficient bound 1 matching :func:`embed`.

    Gate budgets: m(d-1) for the dense family (one copy gate per row when
    d = 1), at most sparsity*d for SparseKN, d + d*log2(d) + nnz gates for
    FastJL (plus one shared zero gate if the sparse projection has an empty
    row), d + m(d-1) for ToeplitzD and 2*steps for Kac.
    """
    b = _Builder(inst.d)
    inputs = list(range(1, inst.d + 1))

    if inst.family == "DenseRademacher":
        taps = _emit_rows_paired(b, _dense_rows(inst.data["matrix"], inputs))
    elif inst.family == "SparseKN":
        rows: list[list[tuple[int, float]]] = [[] for _ in range(inst.m)]
        r, s = inst.data["rows"], inst.data["signs"]
        for j in range(inst.d):
            for k in range(inst.sparsity):
                rows[r[j, k]].append((1 + j, float(s[j, k])))
        taps = _emit_rows_paired(b, rows)
    elif inst.family == "FastJL":
        hada = _emit_fwht(b, _emit_diag(b, inst.data["diag"]))
        proj = inst.data["proj"]
        rows = [
            [(hada[j], float(v)) for j, v in zip(
                proj.indices[proj.indptr[i] : proj.indptr[i + 1]],
                proj.data[proj.indptr[i] : proj.indptr[i + 1]],
            )]
            for i in range(inst.m)
        ]
        taps = _emit_rows_scatter(b, rows)
    elif inst.family == "ToeplitzD":
        dvals = _emit_diag(b, inst.data["diag"])
        taps = _emit_rows_paired(b, _dense_rows(_toeplitz_dense(inst), dvals))
    else:  # Kac
        cur = inputs
        pairs = inst.data["pairs"]
        cos = np.cos(inst.data["angles"])
        sin = np.sin(inst.data["angles"])
        for k in range(pairs.shape[0]):
            i, j = pairs[k]
            u, v = cur[i], cur[j]
            cur[i] = b.gate(float(cos[k]), float(sin[k]), u, v)
            cur[j] = b.gate(float(-sin[k]), float(cos[k]), u, v)
        taps = cur[: inst.m]

    return LinearCircuit(
        input_dim=inst.d,
        gates=tuple(b.gates),
        taps=tuple(taps),
        coeff_bound=1.0,
        scale=inst.scale,
    )


def _paired_count(row_nnz: np.ndarray) -> int:
    n = int(np.sum(np.maximum(row_nnz - 1, 0)) + np.count_nonzero(row_nnz == 1))
    return n + (1 if np.any(row_nnz == 0) else 0)


def _scatter_count(row_nnz: np.ndarray) -> int:
    return int(np.sum(row_nnz)) + (1 if np.any(row_nnz == 0) else 0)


def planned_gate_count(inst: TransformInstance) -> int:
    """Gate count :func:`compile_circuit` would use, without building it."""
    m, d = inst.m, inst.d
    if inst.family == "DenseRademacher":
        return m * (d - 1) if d > 1 else m
    if inst.family == "SparseKN":
        nnz = np.bincount(inst.data["rows"].ravel(), minlength=m)
        return _paired_count(nnz)
    if inst.family == "FastJL":
        proj = inst.data["proj"]
        nnz = np.diff(proj.indptr)
        return d + d * int(math.log2(d)) + _scatter_count(nnz)
    if inst.family == "ToeplitzD":
        return d + (m * (d - 1) if d > 1 else m)
    return 2 * int(inst.steps)


def instance_to_json(inst: TransformInstance) -> dict:
    """Seed-level serialization; realization arrays are re-derived on load."""
    out: dict = {
        "family": inst.family,
        "m": inst.m,
        "d": inst.d,
        "scale": inst.scale,
        "seed": inst.seed,
    }
    if inst.sparsity is not None:
        out["sparsity"] = inst.sparsity
    if inst.q is not None:
        out["q"] = inst.q
    if inst.steps is not None:
        out["steps"] = inst.steps
    return out


def instance_from_json(obj: dict) -> TransformInstance:
    inst = sample(
        obj["family"],
        int(obj["m"]),
        int(obj["d"]),
        sparsity=obj.get("sparsity"),
        q=obj.get("q"),
        steps=obj.get("steps"),
        seed=int(obj["seed"]),
    )
    if "scale" in obj and not math.isclose(inst.scale, float(obj["scale"])):
        raise ValueError(
            f"serialized scale {obj['scale']} disagrees with derived {inst.scale}"
        )
    return inst
