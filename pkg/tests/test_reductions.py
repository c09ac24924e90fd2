"""Instance generators and the five constructions, checked against closed
forms and the exact oracles."""

import json
import math

import numpy as np
import pytest

from sqcomm import (
    BadDimension,
    DisjointnessInstance,
    FunctionPair,
    GapHammingInstance,
    InfeasiblePromise,
    PromiseViolation,
    ZeroMatrix,
    assemble_stacked,
    build_clustering,
    build_hamiltonian,
    build_pca,
    build_recsys,
    build_regression_dense,
    build_regression_sparse,
    decide_clustering,
    decide_disjointness,
    decide_pca,
    decide_recsys,
    dense_solution_law,
    dsp_distribution,
    gen_disjointness,
    gen_function_pair,
    gen_gap_hamming,
    hamiltonian_evolved_law,
    hamiltonian_identity_error,
    pinv_solve,
    top_singular,
)
from sqcomm.reductions import (
    _band_targets,
    all_sign_vectors,
    hamiltonian_identity_errors_batch,
)


def _frozen_intersecting():
    sets = np.array([
        [1, 1, 1, 1, 0, 0, 0, 0],
        [0, 0, 0, 1, 1, 1, 1, 0],
    ])
    return DisjointnessInstance(k=2, n=8, sets=sets, intersection=(1, 3))


def _frozen_disjoint():
    sets = np.array([
        [1, 1, 1, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 1, 1, 1],
    ])
    return DisjointnessInstance(k=2, n=8, sets=sets, intersection=None)


# --- disjointness instances ---


def test_disjointness_verify_rejects():
    good = _frozen_intersecting()
    good.verify()
    with pytest.raises(PromiseViolation, match="weights"):
        DisjointnessInstance(2, 8, np.ones((2, 8), dtype=int), (1, 0)).verify()
    two_hits = np.array([
        [1, 1, 0, 0, 1, 1, 0, 0],
        [1, 1, 0, 0, 0, 0, 1, 1],
    ])
    with pytest.raises(PromiseViolation, match="intersecting pairs"):
        DisjointnessInstance(2, 8, two_hits, (1, 0)).verify()
    with pytest.raises(PromiseViolation, match="recorded truth"):
        DisjointnessInstance(2, 8, good.sets, None).verify()
    with pytest.raises(PromiseViolation, match="shape"):
        DisjointnessInstance(3, 8, good.sets, (1, 3)).verify()


def test_gen_disjointness_honors_request():
    rng = np.random.default_rng(1)
    for k in (2, 4, 8):
        for want in (False, True):
            for _ in range(10):
                inst = gen_disjointness(k, 32, want, rng)
                inst.verify()
                assert (inst.intersection is not None) == want
    with pytest.raises(ValueError):
        gen_disjointness(1, 32, True, rng)
    with pytest.raises(ValueError):
        gen_disjointness(2, 4, True, rng)


def test_disjointness_json_round_trip():
    for inst in (_frozen_intersecting(), _frozen_disjoint()):
        back = DisjointnessInstance.from_json(inst.to_json())
        assert (back.k, back.n, back.intersection) == (inst.k, inst.n, inst.intersection)
        assert np.array_equal(back.sets, inst.sets)
    # the payload packs each row, so it stays readable and small
    obj = json.loads(_frozen_intersecting().to_json())
    assert obj["type"] == "disjointness" and len(obj["sets"]) == 2


# --- sparse regression ---


def test_sparse_regression_frozen_example():
    build = build_regression_sparse(_frozen_intersecting())
    # head solves to beta_b/beta_a = 1; the planted overlap gives n <t1|t2> / (alpha1 alpha2) = 8/4
    np.testing.assert_allclose(build.x_star, [1.0, 2.0], atol=1e-12)
    A, b = assemble_stacked(build.session)
    assert A.shape == (16, 2) and b.shape == (16,)
    np.testing.assert_allclose(pinv_solve(A, b), build.x_star, atol=1e-10)
    law = build.x_star**2 / (build.x_star**2).sum()
    np.testing.assert_allclose(law, [0.2, 0.8], atol=1e-12)

    plain = build_regression_sparse(_frozen_disjoint())
    np.testing.assert_allclose(plain.x_star, [1.0, 0.0], atol=1e-12)


def test_sparse_regression_closed_form_random():
    rng = np.random.default_rng(2)
    for _ in range(20):
        k = int(rng.integers(2, 9))
        inst = gen_disjointness(k, 16, bool(rng.integers(2)), rng)
        build = build_regression_sparse(inst, beta_a=1.5, beta_b=0.5)
        A, b = assemble_stacked(build.session)
        np.testing.assert_allclose(pinv_solve(A, b), build.x_star, atol=1e-9)
        assert build.x_star[0] == pytest.approx(0.5 / 1.5, abs=1e-12)
        # exactly one tail coordinate is nonzero iff the instance intersects
        assert np.count_nonzero(build.x_star[1:] > 1e-12) == (
            1 if inst.intersection else 0
        )


def test_sparse_regression_validation():
    with pytest.raises(ValueError):
        build_regression_sparse(_frozen_intersecting(), beta_a=0.0)
    with pytest.raises(ValueError):
        build_regression_sparse(_frozen_intersecting(), beta_b=-1.0)


def test_decide_disjointness():
    rng = np.random.default_rng(3)
    hit = build_regression_sparse(_frozen_intersecting())
    miss = build_regression_sparse(_frozen_disjoint())
    # disjoint solutions are supported on index 0 only: never a false positive
    assert not any(decide_disjointness(miss, 10, rng) for _ in range(50))
    assert sum(decide_disjointness(hit, 25, rng) for _ in range(50)) == 50


# --- dense regression ---


def test_dense_regression_frozen_law():
    pair = FunctionPair(n=1, f=np.array([1.0, -1.0]), g=np.array([1.0, 1.0]))
    build = build_regression_dense(pair)
    np.testing.assert_allclose(build.target_law, [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(dense_solution_law(build), [0.0, 1.0], atol=1e-12)


def test_dense_regression_matches_transform_law():
    rng = np.random.default_rng(4)
    for n in (1, 2, 3, 4):
        for _ in range(10):
            pair = gen_function_pair(n, rng)
            build = build_regression_dense(pair)
            want = dsp_distribution(pair.f, pair.g)
            np.testing.assert_allclose(build.target_law, want, atol=1e-12)
            np.testing.assert_allclose(dense_solution_law(build), want, atol=1e-10)


def test_dense_regression_layout_and_caps():
    pair = gen_function_pair(3, np.random.default_rng(5))
    build = build_regression_dense(pair)
    assert build.session.k == 2
    assert [bl.owner for bl in build.session.a_blocks] == [0]
    assert [bl.owner for bl in build.session.b_blocks] == [1]
    assert np.linalg.norm(build.rhs) == pytest.approx(1.0, abs=1e-12)
    # matrix rows are unit-norm sign patterns: Frobenius norm sqrt(2^n)
    assert np.linalg.norm(build.matrix) == pytest.approx(math.sqrt(8.0), abs=1e-12)
    big = FunctionPair(n=11, f=np.ones(2048), g=np.ones(2048))
    with pytest.raises(BadDimension):
        build_regression_dense(big)


def test_function_pair_validation_and_json():
    with pytest.raises(PromiseViolation):
        FunctionPair(n=2, f=np.ones(3), g=np.ones(4)).verify()
    with pytest.raises(PromiseViolation):
        FunctionPair(n=1, f=np.array([1.0, 0.5]), g=np.ones(2)).verify()
    pair = gen_function_pair(3, np.random.default_rng(6))
    back = FunctionPair.from_json(pair.to_json())
    assert back.n == 3
    assert np.array_equal(back.f, pair.f) and np.array_equal(back.g, pair.g)


# --- gap-Hamming instances ---


def test_band_targets_frozen():
    # sqrt(64) = 8 and inner products share the parity of d, so even values only
    np.testing.assert_array_equal(_band_targets(64, 1.0, 2.0), [8, 10, 12, 14, 16])
    assert _band_targets(64, 1.9, 1.99).size == 0


def test_gen_gap_hamming_properties():
    rng = np.random.default_rng(7)
    for k in (1, 3, 5):
        for d in (16, 64):
            for sign in (1, -1):
                inst = gen_gap_hamming(k, d, sign, rng)
                inst.verify()
                total = np.asarray(inst.players).sum(axis=0)
                assert np.all(np.abs(total) == 1)
                assert 1.0 * math.sqrt(d) <= sign * inst.gap <= 2.0 * math.sqrt(d)


def test_gen_gap_hamming_validation():
    rng = np.random.default_rng(8)
    with pytest.raises(ValueError):
        gen_gap_hamming(2, 64, 1, rng)
    with pytest.raises(ValueError):
        gen_gap_hamming(3, 64, 0, rng)
    with pytest.raises(ValueError):
        gen_gap_hamming(3, 64, 1, rng, c1=2.0, c2=2.0)
    with pytest.raises(ValueError):
        gen_gap_hamming(3, 64, 1, rng, c1=0.5, c2=2.0)
    with pytest.raises(InfeasiblePromise):
        gen_gap_hamming(3, 64, 1, rng, c1=1.9, c2=1.99)


def test_gap_hamming_verify_rejects():
    rng = np.random.default_rng(9)
    good = gen_gap_hamming(3, 16, 1, rng)
    with pytest.raises(PromiseViolation, match="odd"):
        GapHammingInstance(2, 16, good.players[:2], good.probe, 1, 1.0, 2.0).verify()
    with pytest.raises(PromiseViolation, match="sum to a sign vector"):
        GapHammingInstance(3, 16, np.ones((3, 16)), good.probe, 1, 1.0, 2.0).verify()
    probe = np.asarray(good.players[0])  # gap d is far above the band
    with pytest.raises(PromiseViolation, match="gap"):
        GapHammingInstance(1, 16, good.players[:1], probe, 1, 1.0, 2.0).verify()
    with pytest.raises(PromiseViolation, match="sign"):
        GapHammingInstance(3, 16, good.players, good.probe, 0, 1.0, 2.0).verify()


def test_gap_hamming_json_round_trip():
    inst = gen_gap_hamming(5, 16, -1, np.random.default_rng(10))
    back = GapHammingInstance.from_json(inst.to_json())
    assert (back.k, back.d, back.sign, back.c1, back.c2) == (5, 16, -1, 1.0, 2.0)
    assert np.array_equal(back.players, inst.players)
    assert np.array_equal(back.probe, inst.probe)


# --- clustering ---


def test_clustering_frozen_example():
    inst = GapHammingInstance(
        k=1, d=4,
        players=np.array([[1.0, 1.0, -1.0, 1.0]]),
        probe=np.array([1.0, 1.0, 1.0, 1.0]),
        sign=1, c1=1.0, c2=2.0,
    )
    build = build_clustering(inst)
    assert build.alpha == pytest.approx(4.0**-0.25, abs=1e-15)
    assert build.distance_sq == pytest.approx(2.0, abs=1e-12)
    assert build.bta_sq == pytest.approx(2.0, abs=1e-12)
    assert build.threshold == pytest.approx(4.0, abs=1e-12)
    assert build.margin == pytest.approx(2.0, abs=1e-12)
    assert build.fro_sq == pytest.approx(2.0, abs=1e-12)
    assert build.b_sq == pytest.approx(4.0, abs=1e-12)
    assert decide_clustering(build) == 1
    # probe block is listed first and held by the extra player
    assert build.session.k == 2
    assert [bl.owner for bl in build.session.a_blocks] == [1, 0]


def test_clustering_identities_random():
    rng = np.random.default_rng(11)
    for k in (1, 3, 5):
        for d in (16, 64):
            for sign in (1, -1):
                inst = gen_gap_hamming(k, d, sign, rng)
                build = build_clustering(inst)
                assert build.bta_sq == pytest.approx(build.distance_sq, abs=1e-10)
                assert build.fro_sq == pytest.approx(2.0, abs=1e-12)
                assert build.b_sq == pytest.approx(
                    2.0 * build.alpha**2 * d, abs=1e-12)
                assert decide_clustering(build) == sign
                # the band promise shows up as a margin around the threshold
                assert sign * (build.threshold - build.bta_sq) >= build.margin - 1e-9


def test_clustering_zero_alpha_rejected():
    inst = gen_gap_hamming(3, 16, 1, np.random.default_rng(12))
    with pytest.raises(ZeroMatrix):
        build_clustering(inst, alpha=0.0)


# --- principal component and projection decisions ---


def test_pca_frozen_intersecting():
    build = build_pca([1, 0, 1], [0, 0, 1])
    assert build.truth == 2
    ts = top_singular(build.matrix)
    assert ts.sigma == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert not ts.degenerate
    assert decide_pca(build) == (True, 2)
    assert decide_pca(build, np.random.default_rng(0), mode="sample") == (True, 2)


def test_pca_frozen_disjoint():
    build = build_pca([1, 0], [0, 1])
    assert build.truth is None
    ts = top_singular(build.matrix)
    assert ts.sigma == pytest.approx(1.0, abs=1e-12)
    assert ts.degenerate
    hit, _ = decide_pca(build)
    assert not hit
    hit, _ = decide_pca(build, np.random.default_rng(1), mode="sample")
    assert not hit
    with pytest.raises(ValueError):
        decide_pca(build, mode="argmax")


def test_pca_bit_pair_validation():
    with pytest.raises(PromiseViolation):
        build_pca([1, 1], [1, 1])
    with pytest.raises(PromiseViolation):
        build_pca([1, 0], [1, 0, 0])
    with pytest.raises(PromiseViolation):
        build_pca([2, 0], [1, 0])
    with pytest.raises(ZeroMatrix):
        build_pca([0, 0], [0, 0])


def test_pca_random_instances():
    rng = np.random.default_rng(13)
    for want in (False, True):
        for _ in range(20):
            inst = gen_disjointness(2, 16, want, rng)
            build = build_pca(inst.sets[0], inst.sets[1])
            hit, idx = decide_pca(build, rng, mode="sample")
            assert hit == want
            if want:
                assert idx == build.truth == inst.intersection[1]


def test_recsys_rank_certifies():
    build = build_recsys([1, 0, 1], [0, 0, 1])
    assert build.rank == 1 and build.truth == 2
    assert decide_recsys(build, np.random.default_rng(0)) == (True, 2)

    empty = build_recsys([1, 0], [0, 1])
    assert empty.rank == 0 and not empty.truncated.any()
    assert decide_recsys(empty, np.random.default_rng(0)) == (False, None)

    for level in (1.0, math.sqrt(2.0), 0.9, 1.5):
        with pytest.raises(ValueError):
            build_recsys([1, 0, 1], [0, 0, 1], level=level)


def test_recsys_random_instances():
    rng = np.random.default_rng(14)
    for want in (False, True):
        for _ in range(20):
            inst = gen_disjointness(2, 16, want, rng)
            build = build_recsys(inst.sets[0], inst.sets[1])
            assert build.rank == (1 if want else 0)
            hit, idx = decide_recsys(build, rng)
            assert hit == want
            if want:
                assert idx == inst.intersection[1]


# --- evolution construction ---


def test_hamiltonian_frozen_single_qubit():
    pair = FunctionPair(n=1, f=np.array([1.0, 1.0]), g=np.array([1.0, -1.0]))
    build = build_hamiltonian(pair)
    assert hamiltonian_identity_error(build) < 1e-12
    assert np.linalg.norm(build.hamiltonian) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert build.time == pytest.approx(math.pi, abs=1e-15)
    assert build.session.k == 2
    assert [bl.owner for bl in build.session.a_blocks] == [0]
    assert [bl.owner for bl in build.session.b_blocks] == [1]
    assert np.linalg.norm(build.state) == pytest.approx(1.0, abs=1e-12)


def test_hamiltonian_evolved_law_matches_transform():
    rng = np.random.default_rng(15)
    for n in (1, 2, 3, 4):
        for _ in range(5):
            pair = gen_function_pair(n, rng)
            build = build_hamiltonian(pair)
            assert hamiltonian_identity_error(build) < 1e-9
            want = dsp_distribution(pair.f, pair.g)
            np.testing.assert_allclose(build.target_law, want, atol=1e-12)
            np.testing.assert_allclose(hamiltonian_evolved_law(build), want,
                                       atol=1e-9)


def test_hamiltonian_batch_agrees_with_single():
    rng = np.random.default_rng(16)
    n = 3
    fs = np.stack([gen_function_pair(n, rng).f for _ in range(6)])
    batch = hamiltonian_identity_errors_batch(n, fs)
    g = np.ones(2**n)
    for err, f in zip(batch, fs):
        single = hamiltonian_identity_error(
            build_hamiltonian(FunctionPair(n=n, f=f, g=g)))
        assert err == pytest.approx(single, abs=1e-10)
    with pytest.raises(BadDimension):
        hamiltonian_identity_errors_batch(2, np.ones((3, 3)))


def test_hamiltonian_caps():
    big = FunctionPair(n=9, f=np.ones(512), g=np.ones(512))
    with pytest.raises(BadDimension):
        build_hamiltonian(big)


def test_all_sign_vectors():
    rows = all_sign_vectors(2)
    assert rows.shape == (16, 4)
    assert np.all(np.abs(rows) == 1)
    assert len({tuple(r) for r in rows}) == 16
    with pytest.raises(BadDimension):
        all_sign_vectors(5)
