import numpy as np
import pytest

from jointsbm.generate import GeneratorConfig, generate, planted_partition
from jointsbm.graphs import GraphDataset, Membership
from jointsbm.isolated import fit_single
from jointsbm.joint import (
    FitOptions,
    delta_tilde,
    eta,
    fit_joint,
    gamma,
    omega,
    update_w,
    _assign_graph,
    _assign_graph_slow,
    _guarded_ratios,
    _move_tensors,
    _no_move_omegas,
    _reseed_empty,
)
from jointsbm.metrics import nmi, overall_nmi

from conftest import two_clique_graph


def small_dataset(seed=0):
    cfg = GeneratorConfig(
        n_graphs=3,
        sizes=[40, 50, 60],
        alpha=1.0,
        theta=planted_partition(3, 0.5, 0.1),
        seed=seed,
    )
    data, truth, _ = generate(cfg)
    return data, truth


class TestFitOptions:
    def test_validation(self):
        with pytest.raises(ValueError):
            FitOptions(k=1)
        with pytest.raises(ValueError):
            FitOptions(k=2, epsilon=0.0)
        with pytest.raises(ValueError):
            FitOptions(k=2, max_iter=0)
        with pytest.raises(ValueError):
            FitOptions(k=2, n_restarts=0)


class TestGamma:
    def test_hand_value(self):
        assert gamma([2, 3], [4, 6]) == pytest.approx(1.0)

    def test_equal_split_gives_k_over_m(self):
        # m graphs holding equal shares: each contributes k/m
        assert gamma([5, 5, 5], [15, 15, 15]) == pytest.approx(1.0)
        assert gamma([5, 5], [15, 10]) == pytest.approx(5 / 15 + 5 / 10)

    def test_rejects_empty_overall_community(self):
        with pytest.raises(ValueError):
            gamma([1, 0], [2, 0])


class TestUpdateW:
    def test_single_graph_recovers_community_means(self):
        member = Membership([[0, 1, 1]], 2)
        q = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        w = update_w(member, [q], [0.7])  # weight cancels with one graph
        assert np.allclose(w, [[1.0, 2.0], [4.0, 5.0]])

    def test_two_graphs_weighted_mean(self):
        member = Membership([[0, 1], [0, 1]], 2)
        q1 = np.array([[1.0, 0.0], [0.0, 1.0]])
        q2 = np.array([[3.0, 0.0], [0.0, 3.0]])
        w = update_w(member, [q1, q2], [1.0, 3.0])
        assert np.allclose(w, [[2.5, 0.0], [0.0, 2.5]])

    def test_rejects_community_with_zero_weight(self):
        member = Membership([[0, 0]], 2)
        with pytest.raises(ValueError, match="zero total weight"):
            update_w(member, [np.ones((2, 2))], [1.0])


class TestDeltaTilde:
    def test_hand_adjusted_ratios(self):
        dt = delta_tilde([3, 3], [1, 2], 0, 1)
        assert np.allclose(dt, [0.0, np.sqrt(3 / 4)])

    def test_staying_put_leaves_counts_alone(self):
        dt = delta_tilde([4, 8], [2, 2], 1, 1)
        assert np.allclose(dt, np.sqrt([2 / 4, 2 / 8]))

    def test_ratios_never_exceed_one(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 6))
            local = rng.integers(1, 10, size=k)
            total = local + rng.integers(1, 10, size=k)
            l = int(rng.integers(0, k))
            c = int(rng.integers(0, k))
            assert (delta_tilde(total, local, l, c) <= 1.0 + 1e-12).all()

    def test_rejects_moving_from_empty_source(self):
        with pytest.raises(ValueError, match="source community"):
            delta_tilde([3, 3], [0, 2], 0, 1)

    def test_rejects_emptying_a_community(self):
        with pytest.raises(ValueError, match="left empty"):
            delta_tilde([1, 3], [1, 1], 0, 1)


class TestOmega:
    def test_distance_term_only(self):
        # diff (1,0) against tr = 2, no spread for a zero row
        assert omega([1.0, 0.0], [0.0, 0.0], [1.0, 1.0], 0.0) == pytest.approx(2.0)

    def test_both_terms(self):
        # diff^2 sum = 2 scaled by tr = .5; spread rows (1,1)
        got = omega([0.0, 0.0], [1.0, -1.0], [0.5, 0.5], 0.5)
        assert got == pytest.approx(3.0)

    def test_nonnegative(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 5))
            val = omega(
                rng.normal(size=k),
                rng.normal(size=k),
                rng.uniform(0, 1, size=k),
                rng.uniform(0, 1),
            )
            assert val >= 0.0


class TestEta:
    def test_hand_value_identity_embedding(self):
        got = eta(
            [0, 1],
            np.eye(2),
            np.eye(2),
            [1, 1],
            [2, 2],
            float(np.sqrt(0.5)),
        )
        assert got == pytest.approx(4.0)

    def test_dominates_weighted_residual(self, rng):
        for _ in range(20):
            k = int(rng.integers(2, 5))
            n = int(rng.integers(k, 20))
            labels = rng.integers(0, k, size=n)
            counts = np.bincount(labels, minlength=k) + 1
            overall = counts + rng.integers(1, 5, size=k)
            w = rng.normal(size=(k, k))
            q = rng.normal(size=(n, k))
            g = gamma(counts, overall)
            resid = w[labels] - q
            lower = g * float(np.sum(resid * resid))
            got = eta(labels, w, q, counts, overall, 0.4)
            assert got >= lower - 1e-12


class TestSweepInternals:
    def test_guarded_ratios_read_absent_community_as_zero(self):
        out = _guarded_ratios([0, 2], [0, 8])
        assert np.allclose(out, [0.0, 0.5])

    def test_move_tensors_match_literal_ratios(self, rng):
        k = 4
        local = rng.integers(2, 8, size=k).astype(float)
        total = local + rng.integers(2, 8, size=k)
        ratio = 0.37
        tr, b2 = _move_tensors(local, total, k, ratio)
        for l in range(k):
            for c in range(k):
                move = np.zeros(k)
                move[l] -= 1.0
                move[c] += 1.0
                dt = _guarded_ratios(local + move, total + move)
                assert tr[l, c] == pytest.approx(np.sum(dt * dt))
                assert np.allclose(b2[l, c], (dt + ratio) ** 2)

    def test_vectorised_sweep_matches_literal_sweep(self, rng):
        for _ in range(25):
            k = int(rng.integers(2, 5))
            n = int(rng.integers(k, 25))
            labels = rng.integers(0, k, size=n)
            other = rng.integers(0, k, size=int(rng.integers(k, 25)))
            counts_n = np.bincount(labels, minlength=k)
            overall = counts_n + np.bincount(other, minlength=k)
            q = np.abs(rng.normal(size=(n, k)))
            w = np.abs(rng.normal(size=(k, k)))
            ratio = float(np.sqrt(n / overall.sum()))
            fast = _assign_graph(q, labels, counts_n, overall, w, ratio)
            slow = _assign_graph_slow(q, labels, counts_n, overall, w, ratio)
            assert np.array_equal(fast, slow)

    def test_no_move_omegas_match_omega(self, rng):
        k, n = 3, 8
        labels = rng.integers(0, k, size=n)
        counts = np.bincount(labels, minlength=k) + 1
        overall = counts * 2
        q = np.abs(rng.normal(size=(n, k)))
        w = np.abs(rng.normal(size=(k, k)))
        got = _no_move_omegas(q, labels, counts, overall, w, 0.5)
        dt = _guarded_ratios(counts, overall)
        want = [omega(w[labels[i]], q[i], dt, 0.5) for i in range(n)]
        assert np.allclose(got, want)


class TestReseedEmpty:
    def test_moves_worst_fitting_eligible_node(self):
        # community 2 empty; node 1 is the worst fit for centre 0 by its
        # spread term, and community 0 keeps a member after the move
        labels = [np.array([0, 0, 1])]
        qs = [np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]])]
        per = np.array([[2, 1, 0]])
        overall = np.array([2, 1, 0])
        _reseed_empty(labels, qs, [1.0], per, overall, None, 3)
        assert np.array_equal(labels[0], [0, 2, 1])
        assert np.array_equal(per[0], [1, 1, 1])
        assert np.array_equal(overall, [1, 1, 1])

    def test_raises_when_no_node_can_move(self):
        labels = [np.array([0, 1])]
        qs = [np.eye(3)[:2]]
        per = np.array([[1, 1, 0]])
        overall = np.array([1, 1, 0])
        with pytest.raises(RuntimeError, match="eligible"):
            _reseed_empty(labels, qs, [1.0], per, overall, None, 3)


class TestFitJoint:
    def test_disconnected_cliques_recovered_across_graphs(self):
        data = GraphDataset([two_clique_graph(12, 8)] * 3)
        truth = Membership([[0] * 12 + [1] * 8] * 3, 2)
        fit = fit_joint(data, FitOptions(k=2, n_restarts=5, seed=0))
        assert overall_nmi(fit.membership, truth) == pytest.approx(1.0)
        assert fit.converged

    def test_single_graph_agrees_with_isolated_kmeans(self):
        adj = two_clique_graph(12, 8)
        fit = fit_joint(GraphDataset([adj]), FitOptions(k=2, n_restarts=5, seed=0))
        iso_labels, _ = fit_single(adj, 2, seed=0)
        assert nmi(fit.membership.labels_per_graph[0], iso_labels) == pytest.approx(1.0)

    def test_deterministic_given_options(self):
        data, _ = small_dataset()
        opts = FitOptions(k=3, n_restarts=2, seed=11, max_iter=40)
        a = fit_joint(data, opts)
        b = fit_joint(data, opts)
        for x, y in zip(a.membership.labels_per_graph, b.membership.labels_per_graph):
            assert np.array_equal(x, y)
        assert np.array_equal(a.loss_trace, b.loss_trace)
        assert np.allclose(a.w, b.w)

    def test_more_restarts_never_worse(self):
        # restart streams are spawned from one seed, so the first
        # restart of the 5-run equals the whole 1-run fit
        data, _ = small_dataset()
        f1 = fit_joint(data, FitOptions(k=3, n_restarts=1, seed=7))
        f5 = fit_joint(data, FitOptions(k=3, n_restarts=5, seed=7))
        assert f5.loss_trace[-1] <= f1.loss_trace[-1] + 1e-12

    def test_parallel_sweep_is_equivalent(self):
        data, _ = small_dataset()
        seq = fit_joint(data, FitOptions(k=3, n_restarts=2, seed=4))
        par = fit_joint(
            data, FitOptions(k=3, n_restarts=2, seed=4, parallel_sweep=True)
        )
        for x, y in zip(
            seq.membership.labels_per_graph, par.membership.labels_per_graph
        ):
            assert np.array_equal(x, y)
        assert np.array_equal(seq.loss_trace, par.loss_trace)
        assert par.parallel_sweep

    def test_slow_assign_reproduces_fast_fit(self):
        data, _ = small_dataset()
        opts = FitOptions(k=3, n_restarts=2, seed=3, max_iter=30)
        fast = fit_joint(data, opts)
        slow = fit_joint(data, opts, _assign=_assign_graph_slow)
        for x, y in zip(
            fast.membership.labels_per_graph, slow.membership.labels_per_graph
        ):
            assert np.array_equal(x, y)
        assert np.array_equal(fast.loss_trace, slow.loss_trace)

    def test_loss_accounting_is_consistent(self):
        # the loss may rise between iterations (stale counts); check the
        # log agrees with the trace and the fit still improves net
        data, _ = small_dataset()
        for seed in range(6):
            fit = fit_joint(data, FitOptions(k=3, n_restarts=1, seed=seed))
            increases = int(np.sum(np.diff(fit.loss_trace) > 0))
            assert fit.n_loss_increases == increases
            assert fit.loss_trace[-1] <= fit.loss_trace[0]
            assert fit.iterations == len(fit.loss_trace)
            if fit.converged:
                assert abs(fit.loss_trace[-1] - fit.loss_trace[-2]) <= 1e-6

    def test_gammas_sum_to_k(self):
        # sum_n per-graph counts equals the overall counts, so the
        # gamma weights always add up to k
        data, _ = small_dataset()
        fit = fit_joint(data, FitOptions(k=3, n_restarts=1, seed=0))
        assert fit.gammas.sum() == pytest.approx(3.0)

    def test_reseeding_keeps_every_community_alive(self):
        # two real blocks, three requested: the surplus community must
        # survive through reseeding
        data = GraphDataset([two_clique_graph(10, 10)] * 2)
        fit = fit_joint(data, FitOptions(k=3, n_restarts=3, seed=1))
        counts = np.bincount(fit.membership.stacked(), minlength=3)
        assert (counts >= 1).all()

    def test_rejects_k_larger_than_smallest_graph(self):
        data = GraphDataset([two_clique_graph(2, 1)])
        with pytest.raises(ValueError, match="smallest graph"):
            fit_joint(data, FitOptions(k=4))
