import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from sixdmm.channel import (
    ChannelState,
    assemble_batch,
    assemble_channels,
    bs_array_response,
    cascaded_channel,
    correlation_matrix,
    correlation_sqrt,
    draw_channel_state,
    mm_array_response,
    rician_weights,
)
from sixdmm.config import SystemConfig
from sixdmm.geometry import ElementLayout, rotate_layout


def j0_quadrature(x):
    # integral definition J0(x) = (1/pi) int_0^pi cos(x sin t) dt, split so
    # each piece holds only a few oscillations
    edges = np.linspace(0, np.pi, 2 + int(x))
    return sum(quad(lambda t: np.cos(x * np.sin(t)), a, b, epsabs=1e-13, epsrel=1e-12)[0]
               for a, b in zip(edges[:-1], edges[1:])) / np.pi


def layout(pos):
    return ElementLayout(np.asarray(pos, dtype=float), np.array([0.5, 0.5, 0.5]))


class TestArrayResponses:
    def test_single_antenna(self):
        cfg = SystemConfig(N=1)
        np.testing.assert_allclose(bs_array_response([0.3, 0.4, np.sqrt(0.75)], cfg), [1.0])

    def test_half_wavelength_endfire(self):
        cfg = SystemConfig(N=2)
        a = bs_array_response([1.0, 0, 0], cfg)
        np.testing.assert_allclose(a, np.array([1, -1]) / np.sqrt(2), atol=1e-12)

    def test_bs_magnitudes(self, rng):
        cfg = SystemConfig(N=7)
        k = rng.standard_normal(3)
        a = bs_array_response(k / np.linalg.norm(k), cfg)
        np.testing.assert_allclose(np.abs(a), 1 / np.sqrt(7), atol=1e-12)

    def test_mm_all_at_center(self):
        cfg = SystemConfig(M=3)
        c = np.array([0.5, 0.5, 0.5])
        k = np.array([0.0, 0.6, 0.8])
        a = mm_array_response(k, ElementLayout(np.tile(c, (3, 1)), c), (0.4, 0.2, -1), cfg)
        expected = np.exp(1j * 2 * np.pi / cfg.wavelength * k @ c) / np.sqrt(3)
        np.testing.assert_allclose(a, np.full(3, expected), atol=1e-12)

    def test_mm_zero_rotation_uses_raw_positions(self, rng):
        cfg = SystemConfig(M=5)
        pos = rng.random((5, 3))
        k = np.array([0.6, 0.0, 0.8])
        a = mm_array_response(k, layout(pos), (0, 0, 0), cfg)
        np.testing.assert_allclose(a, np.exp(2j * np.pi / cfg.wavelength * pos @ k) / np.sqrt(5),
                                   atol=1e-12)

    def test_mm_half_wavelength_along_direction(self):
        cfg = SystemConfig(M=2)
        k = np.array([0.0, 0.6, 0.8])
        pos = np.array([[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]]) + np.outer([0, 1], k) * cfg.wavelength / 2
        a = mm_array_response(k, layout(pos), (0, 0, 0), cfg)
        dphi = np.angle(a[1] / a[0])
        assert abs(abs(dphi) - np.pi) < 1e-12


class TestCorrelation:
    def test_single_element(self):
        np.testing.assert_array_equal(correlation_matrix(np.zeros((1, 3)), 0.1), [[1.0]])

    @pytest.mark.parametrize("spacing, ref", [(0.5, -0.30424), (1.0, 0.22028)])
    def test_j0_values(self, spacing, ref):
        lam = 0.1
        pos = np.array([[0, 0, 0], [spacing * lam, 0, 0]])
        c = correlation_matrix(pos, lam)[0, 1]
        assert c == pytest.approx(j0_quadrature(2 * np.pi * spacing), abs=1e-12)
        assert c == pytest.approx(ref, abs=5e-6)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 200))
    def test_j0_against_quadrature(self, x):
        lam = 0.1
        pos = np.array([[0, 0, 0], [0, 0, x * lam / (2 * np.pi)]])
        assert abs(correlation_matrix(pos, lam)[0, 1] - j0_quadrature(x)) < 1e-10

    def test_symmetric_unit_diagonal(self, rng):
        C = correlation_matrix(rng.random((9, 3)), 0.1)
        np.testing.assert_array_equal(C, C.T)
        np.testing.assert_array_equal(np.diag(C), np.ones(9))

    @settings(max_examples=50, deadline=None)
    @given(st.tuples(*[st.floats(-np.pi, np.pi)] * 3), st.integers(0, 1000))
    def test_rotation_invariance(self, angles, seed):
        L = layout(np.random.default_rng(seed).random((6, 3)))
        np.testing.assert_allclose(correlation_matrix(rotate_layout(L, angles), 0.1),
                                   correlation_matrix(L, 0.1), atol=1e-10, rtol=0)


class TestCorrelationSqrt:
    def test_identity(self):
        f = correlation_sqrt(np.eye(3))
        np.testing.assert_allclose(f.matrix_sqrt, np.eye(3), atol=1e-15)
        assert f.clamped_eigs == 0

    def test_reconstruction(self):
        C = np.array([[1, 0.5], [0.5, 1]])
        F = correlation_sqrt(C).matrix_sqrt
        np.testing.assert_allclose(F @ F.conj().T, C, atol=1e-10)

    def test_indefinite_clamped(self):
        f = correlation_sqrt(np.array([[1, 1.2], [1.2, 1]]))
        assert f.clamped_eigs == 1
        P = f.matrix_sqrt @ f.matrix_sqrt.conj().T
        assert np.min(np.linalg.eigvalsh(P)) >= -1e-10
        # projection keeps the positive eigenpair (eig 2.2 along [1, 1])
        np.testing.assert_allclose(P, np.full((2, 2), 1.1), atol=1e-12)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            correlation_sqrt(np.array([[1, 0.2], [0.3, 1]]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 12))
    def test_reconstructs_projection(self, seed, M):
        # dense random layouts give slightly indefinite J0 matrices now and then
        C = correlation_matrix(np.random.default_rng(seed).random((M, 3)) * 0.2, 0.1)
        w, U = np.linalg.eigh(C)
        projected = (U * np.clip(w, 0, None)) @ U.T
        F = correlation_sqrt(C).matrix_sqrt
        assert np.max(np.abs(F @ F.conj().T - projected)) < 1e-8

    def test_continuous_in_positions(self):
        # nearby layouts give nearby factors (no eigenvector sign jumps)
        pos = np.array([[0.0, 0, 0], [0.05, 0, 0], [0.1, 0, 0]])
        F0 = correlation_sqrt(correlation_matrix(pos, 0.1)).matrix_sqrt
        pos2 = pos.copy()
        pos2[2, 1] += 1e-7
        F1 = correlation_sqrt(correlation_matrix(pos2, 0.1)).matrix_sqrt
        assert np.max(np.abs(F1 - F0)) < 1e-5


class TestAssemble:
    def test_rician_weights(self):
        assert rician_weights(0.0) == (0.0, 1.0)
        los, nlos = rician_weights(3.0)
        assert los == pytest.approx(np.sqrt(0.75)) and nlos == pytest.approx(0.5)

    def test_los_limit(self, rng):
        # the NLoS residual is about sqrt(M N / kappa) relative to the LoS part,
        # so the 1e-4 check is made on a 2x2 instance
        cfg = SystemConfig(N=2, M=2, K=2, kappa=1e9)
        state = draw_channel_state(cfg, rng)
        L = layout(rng.random((cfg.M, 3)))
        ang = (0.2, -0.1, 0.5)
        H, h = assemble_channels(state, L, ang, cfg)
        a_r = mm_array_response(state.mm_aoa, L, ang, cfg)
        a_bs = bs_array_response(state.bs_aod, cfg)
        H_los = np.sqrt(cfg.h0 * state.d1 ** -cfg.alpha) * np.outer(a_r, a_bs.conj())
        assert np.linalg.norm(H - H_los) / np.linalg.norm(H_los) < 1e-4
        for k in range(cfg.K):
            a_k = mm_array_response(state.mm_aod[k], L, ang, cfg)
            ref = np.sqrt(cfg.h0 * state.d2[k] ** -cfg.alpha) * a_k
            assert np.linalg.norm(h[k] - ref) / np.linalg.norm(ref) < 1e-4

    def test_los_residual_scales_with_kappa(self, small_config, rng):
        state = draw_channel_state(small_config, rng)
        L = layout(rng.random((small_config.M, 3)))
        err = []
        for kappa in (1e9, 1e11):
            cfg = small_config.replace(kappa=kappa)
            H, _ = assemble_channels(state, L, (0, 0, 0), cfg)
            H_los, _ = assemble_channels(state, L, (0, 0, 0), cfg.replace(kappa=np.inf))
            err.append(np.linalg.norm(H - H_los) / np.linalg.norm(H_los))
        assert err[0] / err[1] == pytest.approx(10, rel=1e-3)

    def test_pure_nlos(self, rng):
        cfg = SystemConfig(N=2, M=2, K=1, kappa=0.0)
        state = draw_channel_state(cfg, rng)
        pos = np.array([[0.2, 0.2, 0.5], [0.8, 0.2, 0.5]])
        H, h = assemble_channels(state, layout(pos), (0, 0, 0), cfg)
        F = correlation_sqrt(correlation_matrix(pos, cfg.wavelength)).matrix_sqrt
        np.testing.assert_allclose(H, np.sqrt(cfg.h0 * state.d1 ** -cfg.alpha)
                                   * F @ state.nlos_bs_mm, atol=1e-20)

    def test_distance_scaling(self, rng):
        cfg = SystemConfig(N=2, M=2, K=1)
        state = draw_channel_state(cfg, rng)
        data = state.to_dict()
        data["d1"] = 2 * state.d1
        far = ChannelState.from_dict(data)
        L = layout([[0.2, 0.2, 0.5], [0.8, 0.2, 0.5]])
        H1, _ = assemble_channels(state, L, (0, 0, 0), cfg)
        H2, _ = assemble_channels(far, L, (0, 0, 0), cfg)
        np.testing.assert_allclose(np.abs(H2 / H1), 2 ** (-cfg.alpha / 2), rtol=1e-12)

    def test_batch_matches_single(self, small_config, rng):
        state = draw_channel_state(small_config, rng)
        pos = rng.random((5, small_config.M, 3))
        ang = rng.uniform(-1, 1, (5, 3))
        Hb, hb, _ = assemble_batch(state, pos, ang, small_config)
        for i in range(5):
            H, h = assemble_channels(state, layout(pos[i]), ang[i], small_config)
            np.testing.assert_allclose(Hb[i], H, atol=1e-18)
            np.testing.assert_allclose(hb[i], h, atol=1e-18)

    def test_deterministic(self, small_config, rng):
        state = draw_channel_state(small_config, rng)
        L = layout(rng.random((small_config.M, 3)))
        a = assemble_channels(state, L, (0.1, 0.2, 0.3), small_config)
        b = assemble_channels(state, L, (0.1, 0.2, 0.3), small_config)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


class TestCascaded:
    def test_scalar(self):
        assert cascaded_channel(np.array([1.0]), np.array([1.0]), np.array([[1.0]])) == 1

    def test_identity_phases(self, rng):
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        H = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        np.testing.assert_allclose(cascaded_channel(h, np.ones(3), H), h.conj() @ H)

    def test_explicit_sum(self, rng):
        h = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        H = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        th = np.exp(-1j * rng.uniform(0, 2 * np.pi, 2))
        ref = [sum(np.conj(h[m]) * th[m] * H[m, n] for m in range(2)) for n in range(3)]
        np.testing.assert_allclose(cascaded_channel(h, th, H), ref, atol=1e-12)

    def test_non_unit_rejected(self):
        with pytest.raises(ValueError):
            cascaded_channel(np.ones(2), np.array([1.0, 0.9]), np.ones((2, 1)))


class TestDraw:
    def test_zero_radius(self, rng):
        cfg = SystemConfig(K=3, user_radius=0.0)
        state = draw_channel_state(cfg, rng)
        np.testing.assert_array_equal(state.user_positions, np.tile(cfg.user_center, (3, 1)))

    def test_seed_reproducible(self, small_config):
        a = draw_channel_state(small_config, np.random.default_rng(3))
        b = draw_channel_state(small_config, np.random.default_rng(3))
        assert a.to_dict() == b.to_dict()

    def test_uniform_disc_mean_radius(self):
        cfg = SystemConfig(K=10_000, M=1, N=1)
        state = draw_channel_state(cfg, np.random.default_rng(0))
        r = np.linalg.norm(state.user_positions[:, :2] - np.asarray(cfg.user_center)[:2], axis=1)
        assert abs(np.mean(r) - 2 * cfg.user_radius / 3) < 0.02 * 2 * cfg.user_radius / 3

    def test_state_fields(self, small_config, rng):
        s = draw_channel_state(small_config, rng)
        assert s.d1 > 0 and np.all(s.d2 > 0)
        assert s.nlos_bs_mm.shape == (small_config.M, small_config.N)
        assert s.nlos_mm_user.shape == (small_config.K, small_config.M)
        with pytest.raises(ValueError):
            s.nlos_bs_mm[0, 0] = 0

    def test_json_round_trip(self, small_config, rng, tmp_path):
        s = draw_channel_state(small_config, rng)
        s.save(tmp_path / "state.json")
        t = ChannelState.load(tmp_path / "state.json")
        for name in ("bs_aod", "mm_aoa", "mm_aod", "d2", "nlos_bs_mm", "nlos_mm_user"):
            np.testing.assert_array_equal(getattr(s, name), getattr(t, name))
        assert s.d1 == t.d1
