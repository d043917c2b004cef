import numpy as np
import pytest
from scipy import sparse

from jointsbm.generate import Connectivity
from jointsbm.graphs import Membership
from jointsbm.spectral import (
    DENSE_EIGEN_MAX_N,
    SpectralPair,
    adjacency_eigen,
    population_quantities,
    q_star,
    top_k_eigen,
)

from conftest import random_instance, two_clique_graph


def dense_oracle(matrix, k):
    """Full dense decomposition, reordered by |eigenvalue| descending."""
    vals, vecs = np.linalg.eigh(matrix)
    order = np.argsort(-np.abs(vals), kind="stable")[:k]
    return vals[order], vecs[:, order]


def sym(rng, n):
    m = rng.normal(size=(n, n))
    return (m + m.T) / 2


class TestTopKEigen:
    def test_matches_full_dense_decomposition(self, rng):
        m = sym(rng, 50)
        pair = top_k_eigen(m, 5)
        vals, vecs = dense_oracle(m, 5)
        assert np.allclose(pair.values, vals, atol=1e-8)
        # eigenvectors agree up to sign
        for j in range(5):
            v, w = pair.vectors[:, j], vecs[:, j]
            assert min(np.abs(v - w).max(), np.abs(v + w).max()) < 1e-8

    def test_magnitude_ordering_with_sign_ties(self):
        m = np.diag([3.0, -3.0, 1.0, -5.0])
        pair = top_k_eigen(m, 4)
        assert pair.values.tolist() == [-5.0, 3.0, -3.0, 1.0]

    def test_sign_convention_largest_entry_positive(self, rng):
        m = sym(rng, 12)
        pair = top_k_eigen(m, 3)
        for j in range(3):
            col = pair.vectors[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_reconstructs_matrix_when_k_equals_n(self, rng):
        m = sym(rng, 8)
        pair = top_k_eigen(m, 8)
        approx = pair.vectors @ np.diag(pair.values) @ pair.vectors.T
        assert np.allclose(approx, m, atol=1e-10)

    def test_sparse_input_matches_dense_path(self, rng):
        m = sym(rng, 80)
        dense = top_k_eigen(m, 4)
        sp = top_k_eigen(sparse.csr_matrix(m), 4)
        assert np.allclose(sp.values, dense.values, atol=1e-7)
        for j in range(4):
            v, w = sp.vectors[:, j], dense.vectors[:, j]
            assert min(np.abs(v - w).max(), np.abs(v + w).max()) < 1e-6

    def test_rejects_asymmetric_input(self, rng):
        m = rng.normal(size=(6, 6))
        with pytest.raises(ValueError):
            top_k_eigen(m, 2)

    def test_rejects_bad_k(self, rng):
        m = sym(rng, 5)
        with pytest.raises(ValueError):
            top_k_eigen(m, 0)
        with pytest.raises(ValueError):
            top_k_eigen(m, 6)

    def test_rejects_nonsquare(self, rng):
        with pytest.raises(ValueError):
            top_k_eigen(rng.normal(size=(3, 4)), 2)


class TestSpectralPair:
    def test_rejects_nonorthonormal_vectors(self):
        with pytest.raises(ValueError):
            SpectralPair(vectors=np.ones((4, 2)), values=np.array([2.0, 1.0]))

    def test_rejects_magnitude_disorder(self):
        vecs = np.eye(4)[:, :2]
        with pytest.raises(ValueError):
            SpectralPair(vectors=vecs, values=np.array([1.0, 2.0]))


class TestAdjacencyEigen:
    def test_small_graph_uses_exact_values(self):
        a = two_clique_graph(6, 4)
        pair = adjacency_eigen(a, 2)
        vals, _ = dense_oracle(a.to_dense().astype(float), 2)
        assert np.allclose(pair.values, vals, atol=1e-10)
        # disjoint cliques: leading eigenvalues are size-1 each
        assert np.allclose(np.sort(pair.values), [3.0, 5.0])

    def test_rejects_bad_k(self):
        a = two_clique_graph(3, 3)
        with pytest.raises(ValueError):
            adjacency_eigen(a, 0)
        with pytest.raises(ValueError):
            adjacency_eigen(a, 7)


class TestQStar:
    def test_rows_are_scaled_absolute_spectral_rows(self, rng):
        m = sym(rng, 10)
        pair = top_k_eigen(m, 3)
        q = q_star(pair, n_local=10, n_total=40)
        expected = np.abs(pair.vectors * pair.values[None, :]) * 2.0
        assert np.allclose(q.rows, expected)
        assert q.scale == pytest.approx(2.0)
        assert (q.rows >= 0).all()


class TestPopulationQuantities:
    def test_single_community_single_graph(self):
        memb = Membership((np.zeros(7, dtype=np.int64),), 1)
        theta = Connectivity(np.array([[0.3]]))
        pop = population_quantities(memb, theta)
        assert np.allclose(pop.p_blocks, 0.3)
        assert np.allclose(pop.d, [0.3 * 7])
        assert np.allclose(pop.d_n[0], [0.3 * 7])

    def test_block_identity_on_random_instances(self, rng):
        # (U_n D_n U_n^T) must reproduce each graph's probability block,
        # with U_n assembled from the community-level eigenvectors.
        for _ in range(10):
            memb, theta = random_instance(rng)
            pop = population_quantities(memb, theta)
            for n, labels in enumerate(memb.labels_per_graph):
                root_local = np.sqrt(pop.counts.per_graph[n].astype(float))
                u = pop.z_n[n][labels] / root_local[labels, None]
                d = pop.d_n[n]
                assert np.allclose(
                    u @ np.diag(d) @ u.T, pop.p_blocks[n], atol=1e-8
                )

    def test_stacked_and_weighted_eigenvalues_agree(self, rng):
        # the big stacked decomposition and the small count-weighted one
        # must produce the same spectrum
        for _ in range(5):
            memb, theta = random_instance(rng)
            pop = population_quantities(memb, theta)
            assert np.allclose(pop.d, pop.d_tilde, atol=1e-8)

    def test_global_block_identity(self, rng):
        memb, theta = random_instance(rng)
        pop = population_quantities(memb, theta)
        stacked = memb.stacked()
        expected = theta.probs[np.ix_(stacked, stacked)]
        assert np.allclose(pop.u @ np.diag(pop.d) @ pop.u.T, expected, atol=1e-8)

    def test_shared_composition_scales_eigenvalues(self):
        # two identical graphs: each local spectrum is half the overall one
        labels = np.array([0, 0, 0, 1, 1], dtype=np.int64)
        memb = Membership((labels, labels.copy()), 2)
        theta = Connectivity(np.array([[0.8, 0.2], [0.2, 0.5]]))
        pop = population_quantities(memb, theta)
        for d_n in pop.d_n:
            assert np.allclose(np.sort(d_n), np.sort(pop.d) * (5 / 10), atol=1e-10)

    def test_rejects_rank_deficient_theta(self):
        memb = Membership((np.array([0, 0, 1, 1]),), 2)
        theta = Connectivity(np.array([[0.4, 0.4], [0.4, 0.4]]))
        with pytest.raises(ValueError):
            population_quantities(memb, theta)

    def test_rejects_missing_community(self):
        memb = Membership((np.array([0, 0, 0]),), 2)
        theta = Connectivity(np.array([[0.8, 0.2], [0.2, 0.5]]))
        with pytest.raises(ValueError):
            population_quantities(memb, theta)

    def test_centre_identity_on_random_instances(self, rng):
        # X_n (Delta^-1 Z D) equals Q_n Z_n^T Delta_n^-1 Delta Z per graph.
        for _ in range(10):
            memb, theta = random_instance(rng)
            pop = population_quantities(memb, theta)
            root_all = np.sqrt(pop.counts.overall.astype(float))
            w = (pop.z / root_all[:, None]) @ np.diag(pop.d_tilde)
            for n, labels in enumerate(memb.labels_per_graph):
                root_local = np.sqrt(pop.counts.per_graph[n].astype(float))
                u_n = pop.z_n[n][labels] / root_local[labels, None]
                q_n = u_n @ np.diag(pop.d_n[n])
                rotate = pop.z_n[n].T @ np.diag(root_all / root_local) @ pop.z
                assert np.linalg.norm(w[labels] - q_n @ rotate) < 1e-8
