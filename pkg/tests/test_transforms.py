import math

import numpy as np
import pytest

from jlcert.circuit import check_coeff_bound, evaluate, op_count, realize_matrix
from jlcert.transforms import (
    FAMILIES,
    apply_kac_rotations,
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

CASES = [
    ("DenseRademacher", {}),
    ("SparseKN", {"sparsity": 3}),
    ("FastJL", {"q": 0.4}),
    ("ToeplitzD", {}),
    ("Kac", {"steps": 50}),
]


def sample_case(family, kwargs, m=8, d=16, seed=5):
    return sample(family, m, d, seed=seed, **kwargs)


def test_family_list_is_fixed():
    assert FAMILIES == ("DenseRademacher", "SparseKN", "FastJL", "ToeplitzD", "Kac")


@pytest.mark.parametrize("family,kwargs", CASES)
def test_sampling_is_deterministic(family, kwargs):
    a = sample_case(family, kwargs)
    b = sample_case(family, kwargs)
    c = sample_case(family, kwargs, seed=6)
    x = np.random.default_rng(0).standard_normal(16)
    np.testing.assert_array_equal(embed(a, x), embed(b, x))
    assert not np.array_equal(embed(a, x), embed(c, x))


@pytest.mark.parametrize("family,kwargs", CASES)
def test_instance_json_round_trip(family, kwargs):
    inst = sample_case(family, kwargs)
    back = instance_from_json(instance_to_json(inst))
    x = np.random.default_rng(1).standard_normal(16)
    np.testing.assert_array_equal(embed(inst, x), embed(back, x))
    assert back.scale == inst.scale


def test_instance_json_scale_mismatch_rejected():
    doc = instance_to_json(sample("DenseRademacher", 4, 8, seed=1))
    doc["scale"] = 3.0
    with pytest.raises(ValueError):
        instance_from_json(doc)


def test_sampling_validation():
    with pytest.raises(ValueError):
        sample("NoSuchFamily", 4, 8, seed=0)
    with pytest.raises(ValueError):
        sample("DenseRademacher", 9, 8, seed=0)  # m > d
    with pytest.raises(ValueError):
        sample("DenseRademacher", 0, 8, seed=0)
    with pytest.raises(ValueError):
        sample("DenseRademacher", 4, 8, seed=-1)
    with pytest.raises(ValueError):
        sample("SparseKN", 4, 8, sparsity=5, seed=0)  # sparsity > m
    with pytest.raises(ValueError):
        sample("SparseKN", 4, 8, seed=0)  # sparsity required
    with pytest.raises(ValueError):
        sample("FastJL", 4, 12, q=0.5, seed=0)  # d not a power of two
    with pytest.raises(ValueError):
        sample("FastJL", 4, 8, q=0.0, seed=0)
    with pytest.raises(ValueError):
        sample("ToeplitzD", 4, 10, seed=0)
    with pytest.raises(ValueError):
        sample("Kac", 4, 8, steps=-1, seed=0)
    with pytest.raises(ValueError):
        sample("Kac", 1, 1, steps=3, seed=0)  # rotations need d >= 2


def test_scale_conventions():
    assert sample("DenseRademacher", 4, 8, seed=0).scale == 4.0
    assert sample("SparseKN", 6, 8, sparsity=2, seed=0).scale == 2.0
    # density-q sign projection after unnormalized butterflies: s = q*m*d
    assert sample("FastJL", 4, 8, q=0.5, seed=0).scale == 16.0
    assert sample("ToeplitzD", 4, 8, seed=0).scale == 4.0
    assert sample("Kac", 4, 8, steps=3, seed=0).scale == 0.5


def test_fwht_matches_hadamard_matrix():
    for d in (1, 2, 4, 8, 16):
        H = np.array([[1.0]])
        while H.shape[0] < d:
            H = np.block([[H, H], [H, -H]])
        rng = np.random.default_rng(d)
        x = rng.standard_normal(d)
        np.testing.assert_allclose(fwht(x), H @ x, rtol=1e-12, atol=1e-12)
        # involution up to the factor d
        np.testing.assert_allclose(fwht(fwht(x)), d * x, rtol=1e-12, atol=1e-12)
    with pytest.raises(ValueError):
        fwht(np.ones(6))


def test_fwht_circuit_structure():
    for d in (2, 4, 8):
        circ = fwht_circuit(d)
        assert op_count(circ) == d * int(math.log2(d))
        assert check_coeff_bound(circ, 1.0)
        B = realize_matrix(circ)
        x = np.random.default_rng(d).standard_normal(d)
        np.testing.assert_allclose(B.entries @ x, fwht(x), rtol=1e-12)
        assert circ.scale == d
    with pytest.raises(ValueError):
        fwht_circuit(6)


@pytest.mark.parametrize("family,kwargs", CASES)
def test_compile_matches_embed(family, kwargs):
    inst = sample_case(family, kwargs)
    circ = compile_circuit(inst)
    assert check_coeff_bound(circ, 1.0)
    assert circ.scale == inst.scale
    rng = np.random.default_rng(77)
    for _ in range(5):
        x = rng.standard_normal(16)
        want = embed(inst, x)
        got = evaluate(circ, x)
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("family,kwargs", CASES)
def test_planned_gate_count_matches_compiled(family, kwargs):
    inst = sample_case(family, kwargs)
    assert planned_gate_count(inst) == op_count(compile_circuit(inst))


def test_gate_count_budgets():
    m, d = 8, 16
    assert op_count(compile_circuit(sample("DenseRademacher", m, d, seed=1))) == m * (d - 1)
    assert op_count(compile_circuit(sample("ToeplitzD", m, d, seed=1))) == d + m * (d - 1)
    for seed in range(5):
        sp = sample("SparseKN", m, d, sparsity=3, seed=seed)
        assert op_count(compile_circuit(sp)) <= 3 * d
    kc = sample("Kac", m, d, steps=37, seed=1)
    assert op_count(compile_circuit(kc)) == 74
    fj = sample("FastJL", m, d, q=0.4, seed=1)
    nnz = fj.data["proj"].nnz
    empty = int(np.any(np.diff(fj.data["proj"].indptr) == 0))
    assert op_count(compile_circuit(fj)) == d + d * 4 + nnz + empty


def test_dense_degenerate_d1_uses_copy_gates():
    inst = sample("DenseRademacher", 1, 1, seed=0)
    circ = compile_circuit(inst)
    assert op_count(circ) == 1 == planned_gate_count(inst)
    np.testing.assert_allclose(
        evaluate(circ, [2.0]), embed(inst, np.array([2.0]))
    )


def test_sparse_kn_empty_rows_share_one_zero_gate():
    # sparsity 1 at m = d = 8: one dart per column, some rows stay empty
    inst = sample("SparseKN", 8, 8, sparsity=1, seed=3)
    touched = np.unique(inst.data["rows"].ravel())
    assert len(touched) < 8
    circ = compile_circuit(inst)
    assert planned_gate_count(inst) == op_count(circ) <= 1 * 8
    B = realize_matrix(circ)
    empty = np.flatnonzero(np.all(B.entries == 0.0, axis=1))
    assert len(empty) == 8 - len(touched)


def test_sparse_kn_column_structure():
    inst = sample("SparseKN", 8, 16, sparsity=3, seed=9)
    B = realize_matrix(compile_circuit(inst)).entries
    for j in range(16):
        col = B[:, j]
        assert np.count_nonzero(col) == 3  # distinct rows, so no cancellation
        assert set(np.abs(col[col != 0.0])) == {1.0}
        assert float(col @ col) == 3.0


def test_fastjl_empty_projection_rows():
    inst = sample("FastJL", 8, 16, q=0.01, seed=5)
    assert np.any(np.diff(inst.data["proj"].indptr) == 0)
    circ = compile_circuit(inst)
    assert op_count(circ) == planned_gate_count(inst)
    x = np.random.default_rng(2).standard_normal(16)
    np.testing.assert_allclose(evaluate(circ, x), embed(inst, x), rtol=1e-10, atol=1e-12)


def test_toeplitz_matrix_has_constant_diagonals():
    inst = sample("ToeplitzD", 6, 8, seed=4)
    B = realize_matrix(compile_circuit(inst)).entries
    D = inst.data["diag"]
    T = B / D[None, :]  # undo the sign diagonal
    for i in range(1, 6):
        for j in range(1, 8):
            assert T[i, j] == T[i - 1, j - 1]
    assert set(np.abs(T.ravel())) == {1.0}


def test_kac_rotations_preserve_norm():
    inst = sample("Kac", 4, 8, steps=100, seed=8)
    x = np.random.default_rng(1).standard_normal(8)
    rotated = apply_kac_rotations(inst, x)
    assert np.linalg.norm(rotated) == pytest.approx(np.linalg.norm(x), rel=1e-12)
    assert rotated.shape == (8,)


def test_kac_zero_steps_is_scaled_truncation():
    inst = sample("Kac", 2, 4, steps=0, seed=1)
    x = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(embed(inst, x), math.sqrt(2.0) * x[:2])
    circ = compile_circuit(inst)
    assert op_count(circ) == 0
    B = realize_matrix(circ)
    np.testing.assert_array_equal(B.entries, np.eye(4)[:2])


def test_kac_pairs_are_distinct():
    inst = sample("Kac", 4, 8, steps=500, seed=12)
    pairs = inst.data["pairs"]
    assert np.all(pairs[:, 0] != pairs[:, 1])
    assert pairs.min() >= 0 and pairs.max() < 8


def test_kac_default_steps():
    val = kac_default_steps(64, 16, 1.0 / 36.0)
    assert val == math.ceil(64 * math.log(64) + 16 * math.log(36.0))
    assert kac_default_steps(2, 1, 0.5) >= 1
    with pytest.raises(ValueError):
        kac_default_steps(8, 4, 0.0)


def test_embed_input_validation():
    inst = sample("DenseRademacher", 4, 8, seed=0)
    with pytest.raises(ValueError):
        embed(inst, np.ones(7))


def test_large_dense_planner_avoids_compilation():
    # planner must answer instantly even where compiling would be absurd
    inst = sample("DenseRademacher", 256, 16384, seed=0)
    assert planned_gate_count(inst) == 256 * 16383


def test_embed_is_unbiased_over_instances():
    # the scale must make E[||embed(x)||^2] = ||x||^2 over each family's
    # randomness; a wrong normalizer shows up as a shifted mean ratio
    cases = [
        ("DenseRademacher", {}),
        ("SparseKN", {"sparsity": 3}),
        ("FastJL", {"q": 0.4}),
        ("ToeplitzD", {}),
        ("Kac", {"steps": 40}),
    ]
    m, d = 8, 16
    x = np.random.default_rng(77).standard_normal(d)
    x_sq = float(x @ x)
    for fam, kw in cases:
        total = 0.0
        for i in range(1500):
            y = embed(sample(fam, m, d, seed=500_000 + i, **kw), x)
            total += float(y @ y)
        mean_ratio = total / (1500 * x_sq)
        assert abs(mean_ratio - 1.0) < 0.05, (fam, mean_ratio)
