import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection

from cranectl.errors import InvalidParameter
from cranectl.model import model_from_parameters
from cranectl.mpc import (MpcConfig, MpcController, build_constraints, build_prediction,
                          free_response, lift_disturbance, qp_matrices)
from cranectl.observer import TABLE_L, StateObserver, block_gain, state_observer_step
from cranectl.params import table_parameters

MODEL = model_from_parameters(table_parameters())


def simulate_outputs(model, x0, u_prev, dU, f, H_p, H_u):
    """Roll the model forward under held inputs; outputs at steps 1..H_p."""
    nu = len(u_prev)
    u = np.array(u_prev, float)
    x = np.array(x0, float)
    out = []
    for i in range(H_p):
        if i < H_u:
            u = u + dU[nu * i:nu * (i + 1)]
        x = model.step(x, u, f)
        out.append(model.C @ x)
    return np.concatenate(out)


class TestPrediction:
    def test_one_step(self):
        m = build_prediction(MODEL, 1, 1)
        assert np.array_equal(m.Psi, MODEL.C @ MODEL.A)
        assert np.array_equal(m.Gamma, MODEL.C @ MODEL.B)
        assert np.array_equal(m.Theta, MODEL.C @ MODEL.B)
        assert np.array_equal(m.Xi, MODEL.C @ MODEL.W_d)

    def test_structural_zero(self):
        m = build_prediction(MODEL, 20, 3)
        assert np.all(m.Theta[:3] == 0.0)
        # block lower triangular
        for i in range(20):
            for j in range(3):
                if j > i:
                    assert np.all(m.Theta[3 * i:3 * i + 3, 3 * j:3 * j + 3] == 0.0)

    def test_bad_horizons(self):
        with pytest.raises(InvalidParameter):
            build_prediction(MODEL, 2, 3)
        with pytest.raises(InvalidParameter):
            MpcConfig(H_p=3, H_u=0)

    @settings(max_examples=25)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_matches_forward_simulation(self, seed):
        rng = np.random.default_rng(seed)
        mats = build_prediction(MODEL, 20, 3)
        x0 = rng.normal(size=6) * 0.1
        u_prev = rng.uniform(-10, 10, 3)
        dU = rng.uniform(-5, 5, 9)
        f = rng.normal(size=3) * 1e-3
        Y = free_response(mats, x0, u_prev, lift_disturbance(f, 20)) + mats.Theta @ dU
        ref = simulate_outputs(MODEL, x0, u_prev, dU, f, 20, 3)
        assert np.max(np.abs(Y - ref)) <= 1e-10

    def test_lift(self):
        assert np.array_equal(lift_disturbance((0, 0, 0), 4), np.zeros(12))
        F = lift_disturbance((1.0, 2.0, 3.0), 5)
        assert len(F) == 15 and np.array_equal(F[6:9], [1, 2, 3])


class TestConstraints:
    def test_input_bound_at_saturation(self):
        cfg = MpcConfig(output_constraints=False)
        mats = build_prediction(MODEL, 20, 3)
        W, w = build_constraints(mats, cfg, np.zeros(6), np.array([24.0, 0, 0]), np.zeros(60))
        assert W.shape == (18, 9)
        assert W[0, 0] == 1.0 and w[0] == 0.0

    def test_large_workspace_only_inputs_active(self):
        cfg = MpcConfig(y_min=(-1e3,) * 3, y_max=(1e3,) * 3)
        ctrl = MpcController(MODEL, cfg)
        Y = np.tile([0.3, 0.3, 0.3], (20, 1))
        u, diag = ctrl.step(np.zeros(6), Y, (0, 0, 0))
        mats = ctrl.mats
        W, w = build_constraints(mats, cfg, np.zeros(6), np.zeros(3), np.zeros(60))
        slack = w[18:]
        assert np.all(slack > 100.0)
        assert np.all(np.abs(u) <= 24.0)

    @settings(max_examples=10)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_vertices_map_into_workspace(self, seed):
        rng = np.random.default_rng(seed)
        cfg = MpcConfig(H_p=3, H_u=2, u_min=(-3.0,) * 3, u_max=(3.0,) * 3,
                        y_min=(0.0, 0.0, 1e-3), y_max=(0.6, 0.6, 0.6))
        mats = build_prediction(MODEL, 3, 2)
        x = np.zeros(6)
        x[0::2] = rng.uniform(0.1, 0.5, 3)
        x[1::2] = rng.uniform(-0.2, 0.2, 3)
        u_prev = rng.uniform(-2, 2, 3)
        F = lift_disturbance(rng.normal(size=3) * 1e-3, 3)
        W, w = build_constraints(mats, cfg, x, u_prev, F)
        # Chebyshev centre gives a strictly interior point
        norms = np.linalg.norm(W, axis=1)
        keep = norms > 0
        Wk, wk = W[keep], w[keep]
        lp = linprog(np.r_[np.zeros(6), -1.0], A_ub=np.c_[Wk, norms[keep]], b_ub=wk,
                     bounds=[(None, None)] * 6 + [(0, None)])
        assert lp.status == 0 and lp.x[-1] > 1e-9
        hs = HalfspaceIntersection(np.c_[Wk, -wk], lp.x[:6])
        free = free_response(mats, x, u_prev, F)
        for v in hs.intersections:
            y = (free + mats.Theta @ v).reshape(3, 3)
            assert np.all(y >= np.array(cfg.y_min) - 1e-9)
            assert np.all(y <= np.array(cfg.y_max) + 1e-9)
            cum = u_prev + np.cumsum(v.reshape(2, 3), axis=0)
            assert np.all(np.abs(cum) <= 3.0 + 1e-9)


class TestStep:
    def test_fixed_point(self):
        ctrl = MpcController(MODEL, u0=(0.0, 0.0, 0.0))
        x = np.array([0.1, 0.0, 0.2, 0.0, 0.3, 0.0])
        u, diag = ctrl.step(x, np.tile([0.1, 0.2, 0.3], (20, 1)), (0, 0, 0))
        assert np.allclose(u, 0.0, atol=1e-9)
        assert diag.status == "optimal" and diag.active == 0

    def test_unconstrained_least_squares(self):
        cfg = MpcConfig(output_constraints=False)
        mats = build_prediction(MODEL, 20, 3)
        x = np.array([0.1, 0.02, 0.2, 0.0, 0.3, -0.01])
        Y = np.tile([0.1005, 0.2, 0.2998], (20, 1))
        H, g = qp_matrices(mats, cfg, x, np.zeros(3), Y, np.zeros(60))
        ctrl = MpcController(MODEL, cfg)
        u, diag = ctrl.step(x, Y, (0, 0, 0))
        # weighted least squares: min |Q^1/2 (E + Theta dU)|^2 + |R^1/2 dU|^2
        q = np.sqrt(np.tile(cfg.Q, 20))
        r = np.sqrt(np.tile(cfg.R, 3))
        E = free_response(mats, x, np.zeros(3), np.zeros(60)) - Y.ravel()
        A = np.vstack([q[:, None] * mats.Theta, np.diag(r)])
        b = np.concatenate([-q * E, np.zeros(9)])
        dU = np.linalg.lstsq(A, b, rcond=None)[0]
        assert diag.active == 0
        assert np.allclose(u, dU[:3], atol=1e-8)

    def test_far_reference_clips_at_bound(self):
        ctrl = MpcController(MODEL, MpcConfig(output_constraints=False))
        u, diag = ctrl.step(np.zeros(6), np.tile([0.5, 0.0, 0.0], (20, 1)), (0, 0, 0))
        assert u[0] == 24.0
        assert diag.active >= 1

    def test_hessian_positive_definite(self):
        cfg = MpcConfig()
        mats = build_prediction(MODEL, 20, 3)
        H, _ = qp_matrices(mats, cfg, np.zeros(6), np.zeros(3), np.zeros((20, 3)), np.zeros(60))
        assert np.min(np.linalg.eigvalsh(H)) >= min(cfg.R) * (1 - 1e-9)

    @settings(max_examples=20)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_heavier_move_weight_shrinks_moves(self, seed):
        rng = np.random.default_rng(seed)
        x = np.zeros(6)
        x[0::2] = rng.uniform(0.1, 0.5, 3)
        Y = np.tile(rng.uniform(0.1, 0.5, 3), (20, 1))
        base = MpcConfig(output_constraints=False, u_min=(-1e6,) * 3, u_max=(1e6,) * 3)
        mats = build_prediction(MODEL, 20, 3)
        norms = []
        for scale in (1.0, 10.0):
            cfg = MpcConfig(R=tuple(scale * r for r in base.R), u_min=base.u_min,
                            u_max=base.u_max, output_constraints=False)
            H, g = qp_matrices(mats, cfg, x, np.zeros(3), Y, np.zeros(60))
            norms.append(np.linalg.norm(np.linalg.solve(H, -g)))
        assert norms[1] <= norms[0] * (1 + 1e-12)

    def test_fallback_uses_second_move(self):
        cfg = MpcConfig()
        ctrl = MpcController(MODEL, cfg)
        x = np.array([0.3, 0.0, 0.3, 0.0, 0.3, 0.0])
        Y = np.tile([0.35, 0.3, 0.3], (20, 1))
        u1, d1 = ctrl.step(x, Y, (0, 0, 0))
        assert d1.status == "optimal"
        planned = ctrl.state.last_dU.copy()
        # the first predicted output does not depend on dU, so an
        # out-of-workspace state is infeasible
        bad = np.array([0.7, 0.0, 0.3, 0.0, 0.3, 0.0])
        u2, d2 = ctrl.step(bad, Y, (0, 0, 0))
        assert d2.fallback and d2.status == "infeasible"
        assert np.allclose(u2, np.clip(u1 + planned[3:6], -24, 24))
        assert ctrl.state.fallbacks == 1

    def test_fallback_without_history_holds(self):
        ctrl = MpcController(MODEL, u0=(3.0, -2.0, 1.0))
        u, d = ctrl.step(np.array([0.7, 0, 0.3, 0, 0.3, 0]), np.zeros((20, 3)), (0, 0, 0))
        assert d.fallback and np.array_equal(u, [3.0, -2.0, 1.0])

    def test_deterministic_replay(self):
        def run():
            ctrl = MpcController(MODEL)
            x = np.array([0.1, 0.0, 0.1, 0.0, 0.2, 0.0])
            us = []
            for k in range(30):
                u, _ = ctrl.step(x, np.tile([0.12, 0.1, 0.2], (20, 1)), (1e-3, 0, 0))
                x = MODEL.step(x, u, (1e-3, 0, 0))
                us.append(u)
            return np.array(us)
        assert np.array_equal(run(), run())


class TestObserver:
    def test_eigenvalues(self):
        A, _, _, C = MODEL.axis_block(0)
        L = np.array(TABLE_L[0])[:, None]
        ev = sorted(np.abs(np.linalg.eigvals(A - L @ C)))
        assert ev == pytest.approx([0.580, 0.871], abs=1e-3)

    def test_zero_error_stays_zero(self):
        x = np.array([0.1, 0.05, 0.2, -0.02, 0.3, 0.01])
        obs = StateObserver(MODEL, x0=x)
        rng = np.random.default_rng(0)
        for _ in range(50):
            u = rng.uniform(-5, 5, 3)
            y = MODEL.C @ x
            xh = obs.step(u, (0, 0, 0), y)
            x = MODEL.step(x, u, (0, 0, 0))
            assert np.allclose(xh, x, atol=1e-14)

    def test_functional_form(self):
        L = block_gain(TABLE_L)
        x = np.array([0.1, 0.05, 0.2, -0.02, 0.3, 0.01])
        a = state_observer_step(x, (1, 2, 3), (1e-3, 0, 0), (0.11, 0.19, 0.3), L, MODEL)
        obs = StateObserver(MODEL, L, x)
        assert np.allclose(a, obs.step((1, 2, 3), (1e-3, 0, 0), (0.11, 0.19, 0.3)), atol=1e-15)

    def test_constant_mismatch_bounded(self):
        L = block_gain(TABLE_L)
        obs = StateObserver(MODEL, L)
        x = np.zeros(6)
        f = np.array([2e-3, -1e-3, 5e-4])
        for _ in range(2000):
            y = MODEL.C @ x
            obs.step((0, 0, 0), (0, 0, 0), y)
            x = MODEL.step(x, (0, 0, 0), f)
        # error recursion e' = (A - LC) e + W_d f has a finite fixed point
        A_LC = MODEL.A - L @ MODEL.C
        e_ss = np.linalg.solve(np.eye(6) - A_LC, MODEL.W_d @ f)
        assert np.allclose(x - obs.x_hat, e_ss, atol=1e-9)
