"""Straight-line linear programs with bounded coefficients.

A circuit starts from the value list (1, x_1, ..., x_d), with the constant 1
at index 0, and appends one value per gate.  Gate g computes

    v[d + 1 + g] = lam * v[left] + mu * v[right]

from two strictly earlier values.  A list of tap indices selects the m output
values, and the published output is the tap vector divided by sqrt(scale).
The gate count is the circuit's operation count; together with the maximum
submatrix determinant of the realized matrix it yields an unconditional
operation lower bound (see :func:`morgenstern_bound`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
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
]


@dataclass(frozen=True)
class Gate:
    """One linear combination step: lam * v[left] + mu * v[right]."""

    lam: float
    mu: float
    left: int
    right: int


@dataclass(frozen=True)
class LinearCircuit:
    """Immutable straight-line program over (1, x_1, ..., x_d).

    ``coeff_bound`` is the declared bound r on gate coefficients (checkable
    via :func:`check_coeff_bound`, not assumed), and ``scale`` is the factor
    s whose inverse square root is applied at the tap boundary.
    """

    input_dim: int
    gates: tuple[Gate, ...]
    taps: tuple[int, ...]
    coeff_bound: float
    scale: float

    def __post_init__(self):
        d = self.input_dim
        if d < 1:
            raise ValueError(f"input_dim must be positive, got {d}")
        if self.coeff_bound <= 0.5:
            raise ValueError(f"coeff_bound must exceed 1/2, got {self.coeff_bound}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be a positive finite real, got {self.scale}")
        for g, gate in enumerate(self.gates):
            own = d + 1 + g
            if not (0 <= gate.left < own and 0 <= gate.right < own):
                raise ValueError(
                    f"gate {g} reads index ({gate.left}, {gate.right}) "
                    f"outside [0, {own})"
                )
            if not (math.isfinite(gate.lam) and math.isfinite(gate.mu)):
                raise ValueError(f"gate {g} has non-finite coefficients")
        last = d + len(self.gates)
        for k in self.taps:
            # Tap 0 would emit the constant, making the output affine.
            if not (1 <= k <= last):
                raise ValueError(f"tap index {k} outside [1, {last}]")


@dataclass(frozen=True, eq=False)
class RealizedMatrix:
    """Dense matrix B computed by a circuit, with its scale s carried along.

    The circuit's scaled evaluation equals s**-0.5 * (B @ x).
    """

    rows: int
    cols: int
    entries: np.ndarray
    scale: float

    def __post_init__(self):
        if self.entries.shape != (self.rows, self.cols):
            raise ValueError(
                f"entries shape {self.entries.shape} does not match "
                f"({self.rows}, {self.cols})"
            )


def _value_table(circuit: LinearCircuit, columns: np.ndarray) -> np.ndarray:
    """Run the gate list over a (d, k) block of inputs; returns (1+d+t, k)."""
    d = circuit.input_dim
    values = np.empty((1 + d + len(circuit.gates), columns.shape[1]))
    values[0] = 1.0
    values[1 : d + 1] = columns
    base = d + 1
    for g, gate in enumerate(circuit.gates):
        values[base + g] = gate.lam * values[gate.left] + gate.mu * values[gate.right]
    return values


def evaluate(circuit: LinearCircuit, x) -> np.ndarray:
    """Execute the circuit on x and return the scaled tap vector.

    Output is scale**-0.5 times the tap values; raises ValueError on a length
    mismatch or non-finite entries in x.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (circuit.input_dim,):
        raise ValueError(
            f"input has shape {x.shape}, expected ({circuit.input_dim},)"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    values = _value_table(circuit, x[:, None])
    return circuit.scale**-0.5 * values[list(circuit.taps), 0]


def op_count(circuit: LinearCircuit) -> int:
    """Number of gates (the step count of the program)."""
    return len(circuit.gates)


def realize_matrix(circuit: LinearCircuit) -> RealizedMatrix:
    """Matrix B with circuit(x) = scale**-0.5 * B @ x, built column by column.

    B carries no scaling itself; it is obtained by running the unscaled
    circuit on every standard basis vector at once.  A circuit whose taps
    carry a contribution from the constant input has no matrix and is
    rejected: the offset is read off by also evaluating at x = 0.
    """
    d = circuit.input_dim
    columns = np.hstack([np.eye(d), np.zeros((d, 1))])
    values = _value_table(circuit, columns)
    offsets = values[list(circuit.taps), d]
    if np.any(offsets != 0.0):
        raise ValueError("circuit output is affine (constant leaks into a tap)")
    entries = values[list(circuit.taps), :d].copy()
    entries.setflags(write=False)
    return RealizedMatrix(
        rows=len(circuit.taps), cols=d, entries=entries, scale=circuit.scale
    )


def check_coeff_bound(circuit: LinearCircuit, r: float) -> bool:
    """True iff every gate coefficient has absolute value at most r (r > 1/2)."""
    if r <= 0.5:
        raise ValueError(f"coefficient bound must exceed 1/2, got {r}")
    return all(abs(g.lam) <= r and abs(g.mu) <= r for g in circuit.gates)


def morgenstern_bound(delta_b: float, r: float) -> float:
    """Operation lower bound log(delta_b) / log(2r) for coefficient bound r.

    delta_b is a (lower bound on the) maximum absolute determinant over the
    square submatrices of the computed matrix; values below 1 clamp to 0.
    """
    if not delta_b > 0:
        raise ValueError(f"delta_b must be positive, got {delta_b}")
    if r <= 0.5:
        raise ValueError(f"coefficient bound must exceed 1/2, got {r}")
    return max(0.0, math.log(delta_b) / math.log(2.0 * r))


def _fmt(v: float) -> str:
    return format(v, ".17g")


def circuit_to_text(circuit: LinearCircuit) -> str:
    """Line-oriented serialization: header ``d m r s``, one gate per line
    ``lam mu left right``, then one line of tap indices."""
    lines = [
        f"{circuit.input_dim} {len(circuit.taps)} "
        f"{_fmt(circuit.coeff_bound)} {_fmt(circuit.scale)}"
    ]
    for g in circuit.gates:
        lines.append(f"{_fmt(g.lam)} {_fmt(g.mu)} {g.left} {g.right}")
    lines.append(" ".join(str(k) for k in circuit.taps))
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> LinearCircuit:
    """Parse the format written by :func:`circuit_to_text`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("truncated circuit text")
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"malformed header: {lines[0]!r}")
    d, m = int(head[0]), int(head[1])
    r, s = float(head[2]), float(head[3])
    gate_lines = lines[1:-1]
    gates = []
    for ln in gate_lines:
        parts = ln.split()
        if len(parts) != 4:
            raise ValueError(f"malformed gate line: {ln!r}")
        gates.append(Gate(float(parts[0]), float(parts[1]), int(parts[2]), int(parts[3])))
    taps = tuple(int(tok) for tok in lines[-1].split())
    if len(taps) != m:
        raise ValueError(f"header announces {m} taps, found {len(taps)}")
    return LinearCircuit(
        input_dim=d, gates=tuple(gates), taps=taps, coeff_bound=r, scale=s
    )
