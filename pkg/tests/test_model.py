import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from cranectl.errors import InvalidParameter, MismatchedSampleTime
from cranectl.model import (AxisDiscretization, assemble_model, backward_difference_axis,
                            controllability_rank, discretize_axis, model_from_parameters,
                            observability_rank)
from cranectl.params import table_parameters

J, B, K, T = 75e-4, 96.3e-3, 14e-4, 0.01


def expm_axis(J_e, B_e, K_e, T_s):
    """ZOH of the velocity channel with held inputs (u, f): exponential of
    the augmented matrix [[-B/J, K/J, -1/J], [0, 0, 0], [0, 0, 0]]."""
    M = np.zeros((3, 3))
    M[0, 0] = -B_e / J_e
    M[0, 1] = K_e / J_e
    M[0, 2] = -1.0 / J_e
    E = expm(M * T_s)
    return E[0, 0], E[0, 1], E[0, 2]


axis_params = st.tuples(st.floats(1e-4, 1e-1), st.floats(1e-3, 1.0),
                        st.floats(1e-4, 1e-2), st.sampled_from([0.001, 0.005, 0.01, 0.02]))


class TestDiscretizeAxis:
    def test_traveling_values(self):
        ax = discretize_axis(J, B, K, T)
        assert ax.a_1 == pytest.approx(0.87949, rel=1e-4)
        assert ax.b_1 == pytest.approx(1.752e-3, rel=1e-3)
        assert ax.b_d1 == pytest.approx(1.2514, rel=1e-4)
        # frozen from the matrix-exponential oracle
        assert ax.a_1 == pytest.approx(0.8795015, abs=1e-7)

    def test_small_sample_limit(self):
        ax = discretize_axis(J, B, K, 1e-12)
        assert ax.a_1 == pytest.approx(1.0)
        assert ax.b_1 == pytest.approx(0.0, abs=1e-12)
        assert ax.b_d1 == pytest.approx(0.0, abs=1e-9)

    def test_gain_equals_damping(self):
        ax = discretize_axis(J, B, B, T)
        assert ax.b_1 == 1.0 - ax.a_1

    @pytest.mark.parametrize("bad", [(0, B, K, T), (J, 0, K, T), (J, B, -1, T), (J, B, K, 0)])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(InvalidParameter):
            discretize_axis(*bad)

    @given(axis_params)
    def test_matches_expm(self, prm):
        ax = discretize_axis(*prm)
        a, bu, bf = expm_axis(*prm)
        assert abs(ax.a_1 - a) <= 1e-12
        assert abs(ax.b_1 - bu) <= 1e-12 * max(1.0, abs(bu))
        # the disturbance column of W_d is -b_d1
        assert abs(ax.b_d1 + bf) <= 1e-12 * max(1.0, abs(bf))
        A_i, B_i, W_i, _ = assemble_model([ax] * 3).axis_block(0)
        assert A_i[1, 1] == ax.a_1 and B_i[1, 0] == ax.b_1 and W_i[1, 0] == -ax.b_d1

    def test_backward_difference(self):
        ax = backward_difference_axis(J, B, K, T)
        assert ax.a_1 == pytest.approx(J / (J + T * B))
        assert ax.b_1 == pytest.approx(K * T / (J + T * B))


class TestAssemble:
    def test_identical_axes(self):
        ax = discretize_axis(J, B, K, T)
        m = assemble_model([ax, ax, ax])
        blocks = [m.axis_block(i) for i in range(3)]
        for blk in blocks[1:]:
            for a, b in zip(blk, blocks[0]):
                assert np.array_equal(a, b)

    def test_mismatched_sample_time(self):
        a = discretize_axis(J, B, K, 0.01)
        b = discretize_axis(J, B, K, 0.02)
        with pytest.raises(MismatchedSampleTime):
            assemble_model([a, a, b])

    def test_structure(self):
        m = model_from_parameters(table_parameters())
        assert np.all(m.C @ m.B == 0.0)
        assert controllability_rank(m.A, m.B) == 6
        assert observability_rank(m.A, m.C) == 6
        with pytest.raises(ValueError):
            m.A[0, 0] = 2.0

    def test_step_response_matches_sampled_continuous(self):
        p = table_parameters()
        m = model_from_parameters(p)
        u = np.array([5.0, -3.0, 2.0])
        f = np.array([1e-3, -2e-3, 5e-4])
        x = np.zeros(6)
        xs = []
        for _ in range(50):
            x = m.step(x, u, f)
            xs.append(x)
        # continuous solution sampled at k T via one exponential per sample time
        for i, ax in enumerate(p.axes):
            for k in (1, 10, 50):
                _, bu, bf = expm_axis(ax.J_e, ax.B_e, ax.K_e, k * T)
                ref = bu * u[i] + bf * f[i]
                assert xs[k - 1][2 * i + 1] == pytest.approx(ref, abs=1e-12)

    def test_include_load(self):
        p = table_parameters(m=0.8)
        a = model_from_parameters(p, include_load=True).axes[2]
        b = discretize_axis(p.l.J_e + p.l.ratio * p.m, p.l.B_e, p.l.K_e, 0.01)
        assert a == b

    def test_axis_discretization_fields(self):
        ax = AxisDiscretization(0.9, 1e-3, 1.0, 0.01)
        assert assemble_model([ax] * 3).T_s == 0.01
