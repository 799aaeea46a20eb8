import math

import numpy as np
import pytest

from nocollide.embedding import (
    Embedding,
    GraphError,
    check_distance_matrix,
    classical_mds,
    frobenius_relative_error,
    isomap,
    load_matrix,
    pairwise_euclidean,
    procrustes_align,
    rescale_to_reference,
    save_matrix,
    smacof_mds,
    svd_embed,
)
from nocollide.transport import RotationOracleParams, analytic_rotation_matrix, translation_matrix

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def grid(n, lo=-1.0, hi=1.0):
    ax = np.linspace(lo, hi, n)
    return np.array([(x, y) for y in ax for x in ax])


def rigid(X, angle, shift, flip=False):
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    if flip:
        R = R @ np.diag([1.0, -1.0])
    return X @ R.T + np.asarray(shift)


# -- checks ------------------------------------------------------------------


def test_check_distance_matrix():
    with pytest.raises(ValueError, match="square"):
        check_distance_matrix(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="symmetric"):
        check_distance_matrix([[0, 1], [2, 0]])
    with pytest.raises(ValueError, match="diagonal"):
        check_distance_matrix([[1, 1], [1, 0]])
    with pytest.raises(ValueError, match="negative"):
        check_distance_matrix([[0, -1], [-1, 0]])


# -- classical MDS -----------------------------------------------------------


def test_classical_square():
    E = classical_mds(pairwise_euclidean(SQUARE), 2)
    res, _ = procrustes_align(E, SQUARE)
    assert res < 1e-9
    assert E.metadata["negative_eigen_fraction"] == pytest.approx(0.0, abs=1e-12)


def test_classical_all_zero():
    E = classical_mds(np.zeros((5, 5)), 2)
    np.testing.assert_allclose(E.points, 0.0, atol=1e-15)


def test_classical_translation_grid():
    G = grid(4)
    E = classical_mds(translation_matrix(G), 2)
    assert procrustes_align(E, G)[0] < 1e-9


def test_classical_reports_non_euclidean_share():
    D = analytic_rotation_matrix(RotationOracleParams((0, 1), 5.0, 2.0),
                                 2 * np.pi * np.arange(16) / 16)
    E = classical_mds(D, 2)
    assert E.metadata["negative_eigen_fraction"] > 1e-3


# -- SMACOF ------------------------------------------------------------------


def test_smacof_euclidean_reaches_zero_stress():
    G = grid(4)
    E = smacof_mds(translation_matrix(G), 2, seed=1)
    assert E.metadata["stress"] < 1e-6
    assert procrustes_align(E, G)[0] < 1e-5


def test_smacof_rotation_w2_keeps_stress_on_every_restart():
    D = analytic_rotation_matrix(RotationOracleParams((0, 1), 5.0, 2.0),
                                 2 * np.pi * np.arange(16) / 16)
    stresses = [smacof_mds(D, 2, seed=s, restarts=1).metadata["stress"] for s in range(4)]
    assert min(stresses) > 1e-3
    assert smacof_mds(D, 2, seed=0, restarts=4).metadata["stress"] > 1e-3


def test_smacof_deterministic():
    rng = np.random.default_rng(5)
    D = pairwise_euclidean(rng.normal(size=(12, 3)))
    a = smacof_mds(D, 2, seed=7)
    b = smacof_mds(D, 2, seed=7)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.metadata == b.metadata


def test_smacof_stress_monotone():
    rng = np.random.default_rng(6)
    D = pairwise_euclidean(rng.normal(size=(15, 4)))
    hist = smacof_mds(D, 2, seed=0, restarts=1).metadata["stress_history"]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(hist, hist[1:]))


# -- SVD ---------------------------------------------------------------------


def test_svd_recovers_centered_features():
    rng = np.random.default_rng(2)
    F = rng.normal(size=(10, 2))
    F -= F.mean(axis=0)
    assert procrustes_align(svd_embed(F, 2), F)[0] < 1e-9


def test_svd_identical_rows():
    E = svd_embed(np.ones((6, 4)), 2)
    np.testing.assert_allclose(E.points, 0.0, atol=1e-12)


def test_svd_matches_classical_on_feature_distances():
    rng = np.random.default_rng(3)
    F = rng.normal(size=(9, 5))
    a = svd_embed(F, 3)
    b = classical_mds(pairwise_euclidean(F), 3)
    assert procrustes_align(a, b.points)[0] < 1e-9


# -- Isomap ------------------------------------------------------------------


def test_isomap_line_order():
    t = np.array([0.0, 0.3, 1.1, 1.5, 2.6, 3.0, 4.2])
    pts = np.column_stack((t, np.zeros_like(t)))
    E = isomap(pts, k_neighbors=2, k=1, features=True)
    x = E.points[:, 0]
    assert np.all(np.diff(x) > 0) or np.all(np.diff(x) < 0)


def test_isomap_complete_graph_equals_classical():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(10, 2))
    D = pairwise_euclidean(X)
    a = isomap(D, k_neighbors=9, k=2)
    b = classical_mds(D, 2)
    assert procrustes_align(a, b.points)[0] < 1e-9


def test_isomap_disconnected_graph():
    X = np.array([[0, 0], [0.1, 0], [0.2, 0], [10, 0], [10.1, 0], [10.2, 0]], float)
    with pytest.raises(GraphError, match="2 components"):
        isomap(X, k_neighbors=2, features=True)


def test_isomap_unrolls_spiral():
    # Archimedean spiral: turns are 2 pi apart, neighbours ~0.3 apart
    t = np.linspace(2 * np.pi, 6 * np.pi, 200)
    X = np.column_stack((t * np.cos(t), t * np.sin(t)))
    E = isomap(X, k_neighbors=4, k=1, features=True)
    x = E.points[:, 0]
    assert np.all(np.diff(x) > 0) or np.all(np.diff(x) < 0)


# -- Procrustes / scoring ----------------------------------------------------


def test_procrustes_rigid_motion():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(20, 2))
    for flip in (False, True):
        X = rigid(Y, 0.7, (3.0, -1.0), flip)
        res, aligned = procrustes_align(X, Y)
        assert res < 1e-9
        np.testing.assert_allclose(aligned, Y, atol=1e-9)


def test_procrustes_keeps_scale():
    assert procrustes_align(2.0 * SQUARE, SQUARE)[0] > 0.5
    with pytest.raises(ValueError):
        procrustes_align(SQUARE, np.zeros((4, 2)))


def test_rescale_and_frobenius():
    D = np.array([[0.0, 2.0], [2.0, 0.0]])
    np.testing.assert_array_equal(rescale_to_reference(D, 5.0), [[0, 5], [5, 0]])
    np.testing.assert_array_equal(rescale_to_reference(D, 2.0), D)
    assert frobenius_relative_error(D, D) == 0.0
    assert frobenius_relative_error(1.01 * D, D) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        rescale_to_reference(np.zeros((2, 2)), 1.0)
    with pytest.raises(ValueError):
        frobenius_relative_error(D, np.zeros((3, 3)))


def test_rescale_preserves_ratios():
    rng = np.random.default_rng(1)
    D = pairwise_euclidean(rng.normal(size=(6, 2)))
    R = rescale_to_reference(D, 3.7)
    iu = np.triu_indices(6, 1)
    np.testing.assert_allclose(R[iu] / R[iu][0], D[iu] / D[iu][0], rtol=1e-12)
    assert R.max() == pytest.approx(3.7)


# -- files -------------------------------------------------------------------


def test_matrix_and_embedding_csv(tmp_path):
    rng = np.random.default_rng(1)
    D = pairwise_euclidean(rng.normal(size=(5, 2)))
    save_matrix(D, tmp_path / "D.csv")
    np.testing.assert_array_equal(load_matrix(tmp_path / "D.csv"), D)
    E = Embedding(rng.normal(size=(5, 2)), {"stress": np.float64(0.5), "h": np.arange(3)})
    E.to_csv(tmp_path / "E.csv")
    back = Embedding.from_csv(tmp_path / "E.csv")
    np.testing.assert_array_equal(back.points, E.points)
    assert back.metadata == {"stress": 0.5, "h": [0, 1, 2]}
    with pytest.raises(FileNotFoundError):
        load_matrix(tmp_path / "none.csv")
