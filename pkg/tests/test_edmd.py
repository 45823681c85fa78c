import numpy as np
import pytest

from koopseed.dictionary import build_dictionary
from koopseed.dynamics import coupled_duffing, sample_initial, simulate
from koopseed.edmd import (
    OnlineState,
    SnapshotPair,
    batch_edmd,
    online_init,
    online_update,
    online_update_many,
    pairs_from_states,
)

DUFFING_PARAMS = dict(
    deltas=(0.23, 0.15, 0.11),
    alphas=(-0.99, -0.59, -0.54),
    betas=(0.8, 0.86, 0.77),
)


def ridge_oracle(dictionary, pairs, sigma, seed_matrix=None):
    """Closed-form solution the recursion must reproduce:
    (K0/sigma + Q)(P + I/sigma)^(-1) with Q, P formed explicitly."""
    n = len(dictionary)
    Q = np.zeros((n, n))
    P = np.zeros((n, n))
    for p in pairs:
        px = dictionary.evaluate(p.x)
        py = dictionary.evaluate(p.y)
        Q += np.outer(py, px)
        P += np.outer(px, px)
    K0 = np.zeros((n, n)) if seed_matrix is None else seed_matrix
    return (K0 / sigma + Q) @ np.linalg.inv(P + np.eye(n) / sigma)


def duffing_pairs(count, seed=0):
    system = coupled_duffing(**DUFFING_PARAMS)
    x0 = sample_initial([(-1.5, 1.5)] * 6, seed)
    traj = simulate(system, x0, count, 0.01)
    return pairs_from_states(traj.states)


def run_online(dictionary, pairs, sigma, seed=None):
    state = online_init(seed, sigma, dictionary=dictionary)
    for p in pairs:
        state = online_update(state, p, dictionary)
    return state


class TestSnapshotPair:
    def test_validates(self):
        with pytest.raises(ValueError):
            SnapshotPair([1.0, 2.0], [1.0])
        with pytest.raises(ValueError):
            SnapshotPair([np.nan], [1.0])

    def test_pairs_from_states(self):
        states = np.arange(8.0).reshape(4, 2)
        pairs = pairs_from_states(states)
        assert len(pairs) == 3
        assert np.array_equal(pairs[1].x, states[1])
        assert np.array_equal(pairs[1].y, states[2])


class TestBatchEDMD:
    def test_identity_dynamics(self):
        d = build_dictionary(2, 2)
        rng = np.random.default_rng(0)
        pairs = [SnapshotPair(x, x) for x in rng.uniform(-1, 1, (3 * len(d), 2))]
        model = batch_edmd(d, pairs)
        assert np.linalg.norm(model.matrix - np.eye(len(d))) <= 1e-10

    def test_scalar_linear_map_is_exact(self):
        a = 0.8
        d = build_dictionary(1, 2)
        xs = np.linspace(-1.0, 1.0, 9).reshape(-1, 1)
        pairs = [SnapshotPair(x, a * x) for x in xs]
        model = batch_edmd(d, pairs)
        assert np.allclose(model.matrix, np.diag([1.0, a, a * a]), atol=1e-12)
        assert model.diagnostics["rank_deficient"] is False

    def test_degenerate_data_is_flagged(self):
        d = build_dictionary(2, 2)
        pairs = [SnapshotPair([0.5, 0.5], [0.4, 0.4])] * 10
        model = batch_edmd(d, pairs)
        assert model.diagnostics["rank_deficient"] is True
        assert model.diagnostics["gram_rank"] == 1
        assert np.isfinite(model.matrix).all()

    def test_requires_pairs(self):
        with pytest.raises(ValueError):
            batch_edmd(build_dictionary(1, 1), [])


class TestOnlineInit:
    def test_sigma_one_gives_identity_pinv(self):
        d = build_dictionary(2, 2)
        state = online_init(None, 1.0, dictionary=d)
        assert np.array_equal(state.pinv, np.eye(len(d)))
        assert state.count == 0
        assert not state.matrix.any()

    def test_seed_matrix_is_copied(self):
        d = build_dictionary(1, 1)
        seed = np.eye(2)
        state = online_init(seed, 2.0)
        seed[0, 0] = 5.0
        assert state.matrix[0, 0] == 1.0
        assert np.array_equal(state.pinv, 2.0 * np.eye(2))

    def test_rejects_bad_sigma(self):
        d = build_dictionary(1, 1)
        with pytest.raises(ValueError):
            online_init(np.eye(2), 0.0)
        with pytest.raises(ValueError):
            online_init(None, -1.0, dictionary=d)


class TestOnlineUpdate:
    def test_single_pair_closed_form(self):
        # for one pair and sigma = 1 the estimate is psi_y psi_x^T / (1+|psi_x|^2)
        d = build_dictionary(2, 1)
        pair = SnapshotPair([0.3, -0.2], [0.25, -0.1])
        state = online_update(online_init(None, 1.0, dictionary=d), pair, d)
        px = d.evaluate(pair.x)
        py = d.evaluate(pair.y)
        expect = np.outer(py, px) / (1.0 + px @ px)
        assert np.allclose(state.matrix, expect, atol=1e-14)
        oracle = ridge_oracle(d, [pair], 1.0)
        assert np.allclose(state.matrix, oracle, atol=1e-12)
        assert state.count == 1

    def test_exact_prediction_leaves_matrix_unchanged(self):
        d = build_dictionary(1, 2)
        state = OnlineState(matrix=np.diag([1.0, 0.5, 0.25]), pinv=np.eye(3), count=0)
        x = np.array([0.7])
        psi_x = d.evaluate(x)
        psi_y = state.matrix @ psi_x  # fabricate a perfectly predicted pair
        before_p = state.pinv.copy()
        new = online_update_many(state, psi_x[None, :], psi_y[None, :])
        assert np.allclose(new.matrix, state.matrix, atol=1e-15)
        # pinv still contracts
        v = np.array([1.0, 1.0, 1.0])
        assert v @ new.pinv @ v < v @ before_p @ v

    def test_gamma_bounds(self):
        d = build_dictionary(2, 3)
        state = online_init(None, 10.0, dictionary=d)
        rng = np.random.default_rng(1)
        from koopseed.edmd import _online_step

        K, P = state.matrix, state.pinv
        for _ in range(50):
            x = rng.uniform(-1.5, 1.5, 2)
            gamma = _online_step(K, P, d.evaluate(x), d.evaluate(x * 0.9))
            assert 0.0 < gamma <= 1.0

    def test_pinv_quadratic_form_monotone(self):
        d = build_dictionary(2, 2)
        state = online_init(None, 3.0, dictionary=d)
        rng = np.random.default_rng(2)
        probes = rng.standard_normal((5, len(d)))
        for _ in range(30):
            x = rng.uniform(-1, 1, 2)
            pair = SnapshotPair(x, 0.8 * x)
            new = online_update(state, pair, d)
            for v in probes:
                assert v @ new.pinv @ v <= v @ state.pinv @ v + 1e-12
            state = new

    def test_matches_ridge_oracle_any_sigma(self):
        d = build_dictionary(2, 3)
        pairs = duffing_pairs(120, seed=3)
        sub = [SnapshotPair(p.x[:2], p.y[:2]) for p in pairs]
        for sigma in (1.0, 30.0, 1000.0):
            state = run_online(d, sub, sigma)
            oracle = ridge_oracle(d, sub, sigma)
            rel = np.linalg.norm(state.matrix - oracle) / np.linalg.norm(oracle)
            assert rel <= 1e-8, (sigma, rel)

    def test_seeded_recursion_matches_seeded_oracle(self):
        d = build_dictionary(2, 3)
        pairs = [SnapshotPair(p.x[:2], p.y[:2]) for p in duffing_pairs(80, seed=4)]
        rng = np.random.default_rng(9)
        seed = rng.standard_normal((len(d), len(d))) * 0.1
        sigma = 2.0
        state = run_online(d, pairs, sigma, seed=seed)
        oracle = ridge_oracle(d, pairs, sigma, seed_matrix=seed)
        rel = np.linalg.norm(state.matrix - oracle) / np.linalg.norm(oracle)
        assert rel <= 1e-8

    def test_order_invariance_of_the_closed_form(self):
        d = build_dictionary(2, 2)
        pairs = [SnapshotPair(p.x[:2], p.y[:2]) for p in duffing_pairs(60, seed=5)]
        forward = run_online(d, pairs, 1.0)
        shuffled = list(pairs)
        np.random.default_rng(11).shuffle(shuffled)
        back = run_online(d, shuffled, 1.0)
        rel = np.linalg.norm(forward.matrix - back.matrix) / np.linalg.norm(forward.matrix)
        assert rel <= 1e-8

    def test_large_sigma_approaches_batch(self):
        # independent snapshot pairs keep the Gram matrix well conditioned;
        # a single short trajectory arc would leave it rank deficient, where
        # ridge and pseudoinverse legitimately differ
        from koopseed.dynamics import duffing_field, rk4_step

        d = build_dictionary(2, 2)
        fld = duffing_field(0.23, -0.99, 0.8)
        rng = np.random.default_rng(6)
        X = rng.uniform(-1.5, 1.5, (100, 2))
        pairs = [SnapshotPair(x, rk4_step(fld, x, 0.01)) for x in X]
        online = run_online(d, pairs, 1e8)
        batch = batch_edmd(d, pairs)
        rel = np.linalg.norm(online.matrix - batch.matrix) / np.linalg.norm(batch.matrix)
        assert rel <= 1e-5

    def test_update_many_equals_repeated_single(self):
        d = build_dictionary(2, 2)
        pairs = [SnapshotPair(p.x[:2], p.y[:2]) for p in duffing_pairs(20, seed=7)]
        one_by_one = run_online(d, pairs, 1.0)
        X = np.stack([p.x for p in pairs])
        Y = np.stack([p.y for p in pairs])
        bulk = online_update_many(
            online_init(None, 1.0, dictionary=d), d.evaluate(X), d.evaluate(Y)
        )
        assert np.array_equal(one_by_one.matrix, bulk.matrix)
        assert one_by_one.count == bulk.count == 20
