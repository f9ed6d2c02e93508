import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netisac.detection import (
    BeamSolution,
    DetectorSpec,
    Receiver,
    Scenario,
    detection_probability,
    detector_statistics,
    detector_threshold,
    echo_energy,
    min_sample_energy,
    monte_carlo_detect,
    monte_carlo_roc,
    q_function,
    q_inverse,
    sensing_beams,
    sinr,
    stacked_mean_vector,
)
from netisac.geometry import target_response_matrix
from netisac.scene import build_channels

from test_scene import small_scene


def random_psd(rng, n, scale=1.0):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = x @ x.conj().T
    return scale * m / np.real(np.trace(m))


def random_solution(rng, L, K, n, p=5.0):
    w = (rng.standard_normal((L, K, n)) + 1j * rng.standard_normal((L, K, n))) * np.sqrt(
        p / (4 * K * n)
    )
    r = np.array([random_psd(rng, n, scale=p / 4) for _ in range(L)])
    return BeamSolution(w=w, r_cov=r, omega=0.0)


class TestQFunction:
    def test_q_at_zero(self):
        assert q_function(0.0) == 0.5

    def test_q_at_one(self):
        # frozen high-precision erfc oracle
        assert q_function(1.0) == pytest.approx(0.15865525393145705, rel=1e-12)

    @given(st.floats(-6, 6))
    @settings(max_examples=100, deadline=None)
    def test_symmetry(self, x):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(-6, 6))
    @settings(max_examples=60, deadline=None)
    def test_inverse_roundtrip(self, x):
        # for x near -6 the tail probability sits within ~1e-9 of 1.0, where
        # float64 spacing (~1.1e-16) quantizes p; the lost x-resolution is
        # spacing / pdf(x), an information floor no root-finder can beat
        quantization = 1.2e-16 / (np.exp(-x * x / 2) / np.sqrt(2 * np.pi))
        assert q_inverse(q_function(x)) == pytest.approx(
            x, abs=1e-9 + quantization
        )

    @given(st.floats(-5.5, 6))
    @settings(max_examples=60, deadline=None)
    def test_inverse_roundtrip_spec_tolerance(self, x):
        assert q_inverse(q_function(x)) == pytest.approx(x, abs=1e-9)

    def test_inverse_known_value(self):
        # frozen: Q^{-1}(1e-3)
        assert q_inverse(1e-3) == pytest.approx(3.0902323061678135, abs=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 2.0])
    def test_inverse_domain(self, p):
        with pytest.raises(ValueError):
            q_inverse(p)


class TestDetectionLaw:
    def test_zero_energy_gives_p_fa(self):
        spec = DetectorSpec(p_fa=0.037, noise_radar=1.0)
        assert detection_probability(0.0, spec) == pytest.approx(0.037, abs=1e-12)

    def test_unit_deflection(self):
        # 2E/sigma^2 = 1, p_fa = 0.5: p_d = Q(-1), frozen erfc oracle
        spec = DetectorSpec(p_fa=0.5, noise_radar=2.0)
        assert detection_probability(1.0, spec) == pytest.approx(
            0.84134474606854295, rel=1e-12
        )

    def test_saturation(self):
        spec = DetectorSpec(p_fa=1e-3, noise_radar=1.0)
        assert detection_probability(1e6, spec) > 1 - 1e-12

    def test_monotone_in_energy_and_pfa(self):
        energies = np.linspace(0, 20, 40)
        for noise in (0.5, 2.0):
            spec = DetectorSpec(p_fa=0.01, noise_radar=noise)
            pd = [detection_probability(e, spec) for e in energies]
            assert np.all(np.diff(pd) >= 0)
        for e in (0.1, 3.0):
            pfas = np.logspace(-6, -0.5, 30)
            pd = [
                detection_probability(e, DetectorSpec(p, 1.0)) for p in pfas
            ]
            assert np.all(np.diff(pd) >= -1e-15)

    def test_negative_energy_rejected(self):
        with pytest.raises(ValueError):
            detection_probability(-1.0, DetectorSpec(0.1, 1.0))

    def test_threshold_at_half(self):
        assert detector_threshold(3.0, DetectorSpec(0.5, 1.0)) == pytest.approx(
            0.0, abs=1e-11
        )

    def test_threshold_sqrt_homogeneity(self):
        spec = DetectorSpec(1e-2, 1.0)
        t1 = detector_threshold(1.0, spec)
        t4 = detector_threshold(4.0, spec)
        assert t4 == pytest.approx(2 * t1, rel=1e-12)

    def test_threshold_known_value(self):
        # sigma^2 E / 2 = 1, p_fa = 1e-3: threshold = Q^{-1}(1e-3)
        spec = DetectorSpec(1e-3, 2.0)
        assert detector_threshold(1.0, spec) == pytest.approx(
            3.0902323061678135, abs=1e-9
        )

    def test_threshold_zero_energy_rejected(self):
        with pytest.raises(ValueError):
            detector_threshold(0.0, DetectorSpec(0.1, 1.0))

    def test_bad_pfa_rejected(self):
        with pytest.raises(ValueError):
            DetectorSpec(p_fa=0.0, noise_radar=1.0)


def sinr_oracle(sol, ch, m, k, receiver):
    """Term-by-term SINR via covariance matrices, independent of production."""
    L, K = ch.n_cells, ch.n_users
    h_own = ch.h[m, m, k][:, None]
    sig = float((np.abs(h_own.conj().T @ sol.w[m, k][:, None]) ** 2).item())
    interference = 0.0
    for l in range(L):
        h = ch.h[l, m, k][:, None]
        cov = np.zeros((h.shape[0], h.shape[0]), dtype=complex)
        for i in range(K):
            if (l, i) != (m, k):
                wi = sol.w[l, i][:, None]
                cov += wi @ wi.conj().T
        if receiver is Receiver.TYPE_I:
            cov += sol.r_cov[l]
        interference += float(np.real(h.conj().T @ cov @ h).item())
    return sig / (interference + ch.scene.noise_comm)


class TestSinr:
    def test_single_cell_no_sensing(self):
        scene = small_scene(n=4)
        ch = build_channels(scene)
        rng = np.random.default_rng(0)
        sol = random_solution(rng, 2, 1, 4)
        sol.r_cov[:] = 0
        # strip to one cell by zeroing the other BS's beams
        sol.w[1] = 0
        expected = abs(np.vdot(ch.h[0, 0, 0], sol.w[0, 0])) ** 2 / scene.noise_comm
        assert sinr(sol, ch, 0, 0, Receiver.TYPE_I) == pytest.approx(expected)

    def test_zero_beam_gives_zero(self):
        ch = build_channels(small_scene(n=4))
        rng = np.random.default_rng(1)
        sol = random_solution(rng, 2, 1, 4)
        sol.w[0, 0] = 0
        assert sinr(sol, ch, 0, 0, Receiver.TYPE_I) == 0.0

    def test_matches_oracle(self):
        ch = build_channels(small_scene(n=5))
        rng = np.random.default_rng(2)
        for _ in range(10):
            sol = random_solution(rng, 2, 1, 5)
            for m in range(2):
                for rx in Receiver:
                    assert sinr(sol, ch, m, 0, rx) == pytest.approx(
                        sinr_oracle(sol, ch, m, 0, rx), rel=1e-12
                    )

    def test_type2_drops_sensing_interference(self):
        ch = build_channels(small_scene(n=4))
        rng = np.random.default_rng(3)
        sol = random_solution(rng, 2, 1, 4)
        assert sinr(sol, ch, 0, 0, Receiver.TYPE_II) >= sinr(
            sol, ch, 0, 0, Receiver.TYPE_I
        )
        sol.r_cov[:] = 0
        assert sinr(sol, ch, 0, 0, Receiver.TYPE_II) == pytest.approx(
            sinr(sol, ch, 0, 0, Receiver.TYPE_I), rel=1e-14
        )


def energy_oracle(sol, ch, q, scenario, include_comm=True):
    """Echo energy in pre-trace steering form: sums of ||H w||^2."""
    L, K = ch.n_cells, ch.n_users
    pairs = (
        [(m, l) for m in range(L) for l in range(L)]
        if scenario is Scenario.SYNC
        else [(m, m) for m in range(L)]
    )
    total = 0.0
    arrays = ch.scene.arrays
    for m, l in pairs:
        h_mat = target_response_matrix(ch.link_params(q, m, l), arrays)
        if include_comm:
            for i in range(K):
                total += float(np.linalg.norm(h_mat @ sol.w[l, i]) ** 2)
        vals, vecs = np.linalg.eigh(sol.r_cov[l])
        for j in range(len(vals)):  # full decomposition, no cutoff
            beam = np.sqrt(max(vals[j], 0.0)) * vecs[:, j]
            total += float(np.linalg.norm(h_mat @ beam) ** 2)
    return total


class TestEchoEnergy:
    def test_zero_solution(self):
        ch = build_channels(small_scene(n=4))
        sol = BeamSolution(
            w=np.zeros((2, 1, 4), dtype=complex),
            r_cov=np.zeros((2, 4, 4), dtype=complex),
            omega=0.0,
        )
        assert echo_energy(sol, ch, 0, Scenario.SYNC) == 0.0

    def test_matched_beam_closed_form(self):
        # single BS, beam aligned with the target steering direction
        scene = small_scene(n=4)
        one = small_scene(n=4)
        ch = build_channels(scene)
        p = 3.0
        a = ch.steer_tx[0, 0]
        sol = BeamSolution(
            w=np.zeros((2, 1, 4), dtype=complex),
            r_cov=np.zeros((2, 4, 4), dtype=complex),
            omega=0.0,
        )
        sol.w[0, 0] = np.sqrt(p / 4) * np.conj(a)
        expected = (
            scene.arrays.n_rx
            * ch.zeta[0, 0] ** 2
            * ch.beta[0, 0, 0]
            * p
            * 4
        )
        assert echo_energy(sol, ch, 0, Scenario.UNSYNC) == pytest.approx(
            expected, rel=1e-12
        )

    def test_matches_steering_oracle(self):
        ch = build_channels(small_scene(n=5))
        rng = np.random.default_rng(4)
        for _ in range(5):
            sol = random_solution(rng, 2, 1, 5)
            for q in range(ch.n_samples):
                for scn in Scenario:
                    assert echo_energy(sol, ch, q, scn) == pytest.approx(
                        energy_oracle(sol, ch, q, scn), rel=1e-10
                    )
                assert echo_energy(sol, ch, q, scn, include_comm=False) == (
                    pytest.approx(
                        energy_oracle(sol, ch, q, scn, include_comm=False),
                        rel=1e-10,
                    )
                )

    def test_direct_links_bounded_by_all_links(self):
        ch = build_channels(small_scene(n=4))
        rng = np.random.default_rng(5)
        sol = random_solution(rng, 2, 1, 4)
        for q in range(ch.n_samples):
            assert echo_energy(sol, ch, q, Scenario.UNSYNC) <= echo_energy(
                sol, ch, q, Scenario.SYNC
            )


class TestSensingBeams:
    def test_covariance_reconstruction(self):
        rng = np.random.default_rng(6)
        r = random_psd(rng, 5, scale=2.0)
        beams = sensing_beams(r)
        np.testing.assert_allclose(
            sum(np.outer(b, np.conj(b)) for b in beams), r, atol=1e-12
        )

    def test_zero_covariance_gives_no_beams(self):
        assert sensing_beams(np.zeros((4, 4), dtype=complex)).shape == (0, 4)

    def test_low_rank_detected(self):
        v = np.array([1.0, 1.0j, -1.0, 0.5])
        r = np.outer(v, np.conj(v))
        assert sensing_beams(r).shape == (1, 4)


class TestMonteCarlo:
    def make(self, seed=0):
        scene = small_scene(n=3, seed=seed)
        ch = build_channels(scene)
        rng = np.random.default_rng(seed)
        sol = random_solution(rng, 2, 1, 3)
        return scene, ch, sol

    def test_alpha_energy_identity(self):
        scene, ch, sol = self.make()
        for scn in Scenario:
            e, q = min_sample_energy(sol, ch, scn)
            alpha = stacked_mean_vector(sol, ch, q, scn)
            assert np.real(np.vdot(alpha, alpha)) == pytest.approx(e, rel=1e-9)

    def test_threshold_near_minus_infinity_accepts_everything(self):
        scene, ch, sol = self.make()
        e, q = min_sample_energy(sol, ch, Scenario.SYNC)
        spec = DetectorSpec(1 - 1e-12, noise_radar=e, scenario=Scenario.SYNC)
        pd, pfa = monte_carlo_detect(sol, ch, q, spec, trials=2000, seed=1)
        assert pd == 1.0 and pfa == 1.0

    def test_rates_match_closed_forms(self):
        scene, ch, sol = self.make(seed=2)
        e, q = min_sample_energy(sol, ch, Scenario.SYNC)
        noise = 2.0 * e / 9.0  # deflection 3
        trials = 40_000
        for p_fa in (1e-1, 1e-2):
            spec = DetectorSpec(p_fa, noise, Scenario.SYNC)
            pd_cf = detection_probability(e, spec)
            pd, pfa = monte_carlo_detect(sol, ch, q, spec, trials=trials, seed=3)
            assert abs(pd - pd_cf) <= 3 * np.sqrt(pd_cf * (1 - pd_cf) / trials) + 0.005
            assert abs(pfa - p_fa) <= 3 * np.sqrt(p_fa * (1 - p_fa) / trials) + 0.005

    def test_statistic_moments_under_h0(self):
        scene, ch, sol = self.make(seed=4)
        e, q = min_sample_energy(sol, ch, Scenario.UNSYNC)
        noise = e
        spec = DetectorSpec(1e-2, noise, Scenario.UNSYNC)
        trials = 100_000
        t0, t1, energy = detector_statistics(sol, ch, q, spec, trials, seed=5)
        var = noise * energy / 2
        assert abs(np.mean(t0)) <= 4 * np.sqrt(var / trials)
        assert np.var(t0) == pytest.approx(var, rel=0.05)
        assert np.mean(t1) == pytest.approx(energy, rel=0.01)

    def test_roc_equals_pointwise_detection(self):
        scene, ch, sol = self.make(seed=6)
        e, q = min_sample_energy(sol, ch, Scenario.SYNC)
        noise = 2.0 * e / 4.0
        spec = DetectorSpec(1e-3, noise, Scenario.SYNC)
        points = monte_carlo_roc(
            sol, ch, q, spec, [1e-1, 1e-2], trials=5000, seed=7
        )
        for p_fa, point in zip([1e-1, 1e-2], points):
            individual = monte_carlo_detect(
                sol, ch, q, DetectorSpec(p_fa, noise, Scenario.SYNC), 5000, 7
            )
            assert point == individual

    def test_zero_mean_vector_rejected(self):
        scene, ch, sol = self.make()
        sol.w[:] = 0
        sol.r_cov[:] = 0
        spec = DetectorSpec(1e-2, 1.0, Scenario.SYNC)
        with pytest.raises(ValueError):
            monte_carlo_detect(sol, ch, 0, spec, trials=10, seed=0)

    def test_sensing_only_alpha_uses_covariance_only(self):
        scene, ch, sol = self.make(seed=8)
        alpha = stacked_mean_vector(sol, ch, 0, Scenario.SYNC, include_comm=False)
        e = float(np.real(np.vdot(alpha, alpha)))
        assert e == pytest.approx(
            echo_energy(sol, ch, 0, Scenario.SYNC, include_comm=False), rel=1e-9
        )
