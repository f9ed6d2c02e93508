import numpy as np
import pytest
from dataclasses import replace

from netisac.beamform import (
    DegenerateExtractionError,
    ProblemVariant,
    Scheme,
    SdrSolution,
    _energy_coefficients,
    build_sdr,
    rank_one_extract,
    sensing_only_variant,
    solve_and_extract,
    solve_variant,
    zf_beamformers,
    zf_power_allocation,
)
from netisac.conic import SolveStatus
from netisac.detection import Receiver, Scenario, echo_energy, min_sample_energy, sinr
from netisac.geometry import ArraySpec, Point2D, angle_from, round_trip_pathloss
from netisac.scene import (
    PathlossParams,
    Scene,
    build_channels,
    db_to_linear,
    default_paper_scene,
)


def desk_scene(seed=0, gamma_db=20.0):
    return default_paper_scene("one-cu", antennas=8, seed=seed).with_sinr_db(gamma_db)


def single_cell_scene(nt=8, gamma=1e-6, cu=Point2D(30.0, 10.0), model="rayleigh"):
    return Scene(
        bs_positions=(Point2D(80.0, 0.0),),
        arrays=ArraySpec(nt, nt),
        cu_positions=((cu,),),
        noise_comm=1e-12,
        noise_radar=1e-13,
        p_max=15.0,
        sinr_targets=np.array([[gamma]]),
        rcs=np.ones((1, 1)),
        pathloss=PathlossParams(),
        target_samples=(Point2D(0.0, 0.0),),
        channel_model=model,
        rng_seed=11,
    )


class TestProgramStructure:
    def test_constraint_count(self):
        scene = desk_scene()
        ch = build_channels(scene)
        prog, _ = build_sdr(ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene)
        L, K, Q = 3, 1, 9
        assert len(prog.constraints) == Q + L * K + L

    def test_type2_rows_drop_sensing_tables(self):
        scene = default_paper_scene("three-cu", antennas=8, seed=0, users_per_cell=2)
        ch = build_channels(scene)
        L, K, Q = 3, 2, 9
        p1, _ = build_sdr(ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene)
        p2, _ = build_sdr(ProblemVariant(Scenario.SYNC, Receiver.TYPE_II), ch, scene)
        for row in range(Q, Q + L * K):  # the SINR rows
            n1 = len(p1.constraints[row].terms)
            n2 = len(p2.constraints[row].terms)
            assert n1 - n2 == L  # the sensing-covariance quadratic forms

    def test_energy_coefficients_link_counts(self):
        scene = desk_scene()
        ch = build_channels(scene)
        nr = scene.arrays.n_rx
        sync = _energy_coefficients(ch, Scenario.SYNC)
        unsync = _energy_coefficients(ch, Scenario.UNSYNC)
        for q in range(ch.n_samples):
            for l in range(3):
                all_links = nr * sum(
                    ch.zeta[m, l] ** 2 * ch.beta[q, m, l] for m in range(3)
                )
                direct = nr * ch.zeta[l, l] ** 2 * ch.beta[q, l, l]
                assert sync[q, l] == pytest.approx(all_links, rel=1e-12)
                assert unsync[q, l] == pytest.approx(direct, rel=1e-12)
        assert np.all(sync >= unsync)

    def test_build_rejects_benchmark_schemes(self):
        scene = desk_scene()
        ch = build_channels(scene)
        with pytest.raises(ValueError):
            build_sdr(
                ProblemVariant(Scenario.SYNC, Receiver.TYPE_I, Scheme.ZF), ch, scene
            )


class TestSolveVariant:
    def test_single_cell_analytic_optimum(self):
        scene = single_cell_scene()
        ch = build_channels(scene)
        sdr = solve_variant(ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene)
        beta = round_trip_pathloss(80.0, 80.0, scene.pathloss.kappa, 1.0)
        expected = 8 * beta * 8 * 15.0  # N_r zeta^2 beta N_t P_max
        assert sdr.report.status is SolveStatus.OPTIMAL
        assert sdr.omega == pytest.approx(expected, rel=1e-4)

    def test_unreachable_sinr_is_infeasible(self):
        scene = desk_scene(gamma_db=90.0)
        ch = build_channels(scene)
        sdr = solve_variant(ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene)
        assert sdr.report.status is SolveStatus.INFEASIBLE
        assert sdr.report.certificate is not None

    def test_variant_orderings(self):
        scene = desk_scene(seed=2)
        ch = build_channels(scene)
        om = {
            (sc, rx): solve_variant(ProblemVariant(sc, rx), ch, scene).omega
            for sc in Scenario
            for rx in Receiver
        }
        slack = 1e-8
        for rx in Receiver:
            assert om[(Scenario.SYNC, rx)] >= om[(Scenario.UNSYNC, rx)] * (1 - slack)
        for sc in Scenario:
            assert om[(sc, Receiver.TYPE_II)] >= om[(sc, Receiver.TYPE_I)] * (1 - slack)

    def test_monotone_in_gamma_and_power(self):
        scene = desk_scene(seed=1)
        ch = build_channels(scene)
        variant = ProblemVariant(Scenario.SYNC, Receiver.TYPE_I)
        low = solve_variant(variant, ch, scene.with_sinr_db(10.0)).omega
        high = solve_variant(variant, ch, scene.with_sinr_db(28.0)).omega
        assert high <= low * (1 + 1e-8)
        small = solve_variant(variant, build_channels(scene.with_p_max(5.0)),
                              scene.with_p_max(5.0)).omega
        assert small <= low * (1 + 1e-8)

    def test_cross_check_against_cvxpy(self):
        # independent canonicalization of the same design problem, on an
        # instance scaled into cvxpy's numerical comfort zone
        cvxpy = pytest.importorskip("cvxpy")
        base = desk_scene(seed=3)
        scene = replace(
            base, pathloss=replace(base.pathloss, kappa=1e2)
        )
        ch = build_channels(scene)
        L, K, nt = 3, 1, 8
        W = [[cvxpy.Variable((nt, nt), hermitian=True) for _ in range(K)]
             for _ in range(L)]
        R = [cvxpy.Variable((nt, nt), hermitian=True) for _ in range(L)]
        om = cvxpy.Variable()
        cons = []
        for l in range(L):
            cons.extend([W[l][i] >> 0 for i in range(K)])
            cons.append(R[l] >> 0)
        nr = scene.arrays.n_rx
        for q in range(ch.n_samples):
            e = 0
            for l in range(L):
                coefl = nr * sum(
                    ch.zeta[m, l] ** 2 * ch.beta[q, m, l] for m in range(L)
                )
                tot = sum(W[l][i] for i in range(K)) + R[l]
                e = e + coefl * cvxpy.real(cvxpy.trace(tot @ ch.steer_gram[q, l]))
            cons.append(e >= om)
        for m in range(L):
            for k in range(K):
                lhs = 0
                for l in range(L):
                    h = ch.h[l, m, k] / np.sqrt(scene.noise_comm)
                    hh = np.outer(h, np.conj(h))
                    for i in range(K):
                        lhs = lhs + cvxpy.real(cvxpy.trace(hh @ W[l][i]))
                    lhs = lhs + cvxpy.real(cvxpy.trace(hh @ R[l]))
                h0 = ch.h[m, m, k] / np.sqrt(scene.noise_comm)
                hh0 = np.outer(h0, np.conj(h0))
                gam = scene.sinr_targets[m, k]
                cons.append(
                    lhs + 1.0
                    <= (1 + 1 / gam) * cvxpy.real(cvxpy.trace(hh0 @ W[m][k]))
                )
        for l in range(L):
            cons.append(
                cvxpy.real(cvxpy.trace(sum(W[l][i] for i in range(K)) + R[l]))
                <= scene.p_max
            )
        problem = cvxpy.Problem(cvxpy.Maximize(om), cons)
        problem.solve(solver=cvxpy.CLARABEL)
        sdr = solve_variant(ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene)
        assert sdr.omega == pytest.approx(float(om.value), rel=1e-5)


class TestRankOneExtraction:
    def test_already_rank_one_is_preserved(self):
        scene = single_cell_scene(nt=4, gamma=2.0)
        ch = build_channels(scene)
        rng = np.random.default_rng(0)
        w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        W = np.outer(w, np.conj(w))[None, None]
        R = np.zeros((1, 4, 4), dtype=complex)
        report = solve_variant(
            ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene
        ).report
        sdr = SdrSolution(W=W, R=R, omega=np.nan, report=report)
        sdr.omega = echo_energy(
            rank_one_extract(sdr, ch, scene,
                             ProblemVariant(Scenario.SYNC, Receiver.TYPE_I)),
            ch, 0, Scenario.SYNC,
        )
        sol = rank_one_extract(
            sdr, ch, scene, ProblemVariant(Scenario.SYNC, Receiver.TYPE_I)
        )
        np.testing.assert_allclose(
            np.outer(sol.w[0, 0], np.conj(sol.w[0, 0])), W[0, 0], atol=1e-9
        )
        np.testing.assert_allclose(sol.r_cov[0], 0, atol=1e-9)

    def test_extraction_contract_on_solved_instances(self):
        for seed in range(3):
            scene = desk_scene(seed=seed, gamma_db=22.0)
            ch = build_channels(scene)
            for sc in Scenario:
                for rx in Receiver:
                    variant = ProblemVariant(sc, rx)
                    sdr, sol = solve_and_extract(variant, ch, scene)
                    assert sdr.report.status is SolveStatus.OPTIMAL
                    res = sol.residuals
                    # objective preserved
                    assert res.energy_rel_gap <= 1e-6
                    # constraints hold after extraction
                    assert res.sinr_slack.min() >= -1e-6
                    assert res.power_overshoot.max() <= 1e-6
                    # remainder covariance is PSD within tolerance
                    assert res.r_min_eig_ratio.min() >= -1e-7
                    # quadratic form at the served channel is preserved
                    for l in range(3):
                        h = ch.h[l, l, 0]
                        lhs = abs(np.vdot(h, sol.w[l, 0])) ** 2
                        rhs = float(np.real(np.conj(h) @ sdr.W[l, 0] @ h))
                        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-30)

    def test_degenerate_quadratic_form_flagged(self):
        scene = single_cell_scene(nt=4, gamma=2.0)
        ch = build_channels(scene)
        h = ch.h[0, 0, 0]
        # build a W supported orthogonally to the served channel
        basis = np.linalg.svd(h[:, None], full_matrices=True)[0][:, 1:]
        v = basis[:, 0]
        W = np.outer(v, np.conj(v))[None, None] * 3.0
        report = solve_variant(
            ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene
        ).report
        sdr = SdrSolution(W=W, R=np.zeros((1, 4, 4), dtype=complex),
                          omega=1.0, report=report)
        with pytest.raises(DegenerateExtractionError):
            rank_one_extract(
                sdr, ch, scene, ProblemVariant(Scenario.SYNC, Receiver.TYPE_I)
            )

    def test_extract_requires_optimal_status(self):
        scene = desk_scene(gamma_db=90.0)
        ch = build_channels(scene)
        sdr = solve_variant(ProblemVariant(Scenario.SYNC, Receiver.TYPE_I), ch, scene)
        with pytest.raises(ValueError):
            rank_one_extract(
                sdr, ch, scene, ProblemVariant(Scenario.SYNC, Receiver.TYPE_I)
            )


class TestZeroForcing:
    def test_single_user_reduces_to_matched_filter(self):
        scene = single_cell_scene(nt=6, gamma=5.0)
        ch = build_channels(scene)
        dirs = zf_beamformers(ch, scene)
        h = ch.h[0, 0, 0]
        np.testing.assert_allclose(
            np.abs(np.vdot(dirs[0, 0], h)), np.linalg.norm(h), rtol=1e-12
        )

    def test_nulling_and_unit_norm(self):
        scene = desk_scene(seed=4)
        ch = build_channels(scene)
        dirs = zf_beamformers(ch, scene)
        for m in range(3):
            for k in range(1):
                assert np.linalg.norm(dirs[m, k]) == pytest.approx(1.0, rel=1e-12)
                for mp in range(3):
                    for kp in range(1):
                        if (mp, kp) == (m, k):
                            continue
                        h = ch.h[m, mp, kp]
                        assert abs(np.vdot(h, dirs[m, k])) <= 1e-9 * np.linalg.norm(h)

    def test_insufficient_antennas_rejected(self):
        scene = default_paper_scene("three-cu", antennas=8, seed=0)  # 9 CUs > 8
        ch = build_channels(scene)
        with pytest.raises(ValueError):
            zf_beamformers(ch, scene)

    def test_zf_bounded_by_proposed(self):
        scene = desk_scene(seed=5)
        ch = build_channels(scene)
        for sc in Scenario:
            for rx in Receiver:
                prop = solve_variant(ProblemVariant(sc, rx), ch, scene).omega
                zf = solve_variant(
                    ProblemVariant(sc, rx, Scheme.ZF), ch, scene
                ).omega
                assert zf <= prop * (1 + 1e-8)

    def test_aligned_los_single_cell_matches_proposed(self):
        # CU on the BS-to-target ray: the matched-filter direction IS the
        # sensing direction, so fixed-direction power allocation is optimal
        bs = Point2D(80.0, 0.0)
        ang = angle_from(bs, Point2D(0.0, 0.0))
        cu = Point2D(bs.x + 45.0 * np.cos(ang), bs.y + 45.0 * np.sin(ang))
        scene = single_cell_scene(nt=8, gamma=1.0, cu=cu, model="los")
        ch = build_channels(scene)
        variant = ProblemVariant(Scenario.SYNC, Receiver.TYPE_I)
        prop = solve_variant(variant, ch, scene).omega
        zf = zf_power_allocation(variant, ch, scene, zf_beamformers(ch, scene)).omega
        assert zf == pytest.approx(prop, rel=1e-4)

    def test_crafted_instance_where_zf_fails_and_proposed_succeeds(self):
        # cell-2's CU sits almost on the ray from BS1 to CU1, so nulling it
        # costs BS1 nearly all of its useful gain
        bs1, bs2 = Point2D(0.0, 0.0), Point2D(200.0, 0.0)
        cu1 = Point2D(40.0 * np.cos(0.3), 40.0 * np.sin(0.3))
        cu2 = Point2D(80.0 * np.cos(0.301), 80.0 * np.sin(0.301))
        scene = Scene(
            bs_positions=(bs1, bs2),
            arrays=ArraySpec(2, 2),
            cu_positions=((cu1,), (cu2,)),
            noise_comm=1e-12,
            noise_radar=1e-13,
            p_max=1.0,
            sinr_targets=np.full((2, 1), db_to_linear(10.0)),
            rcs=np.ones((2, 2)),
            pathloss=PathlossParams(),
            target_samples=(Point2D(100.0, 50.0),),
            channel_model="los",
            rng_seed=0,
        )
        ch = build_channels(scene)
        variant = ProblemVariant(Scenario.SYNC, Receiver.TYPE_II)
        prop = solve_variant(variant, ch, scene)
        zf = zf_power_allocation(variant, ch, scene, zf_beamformers(ch, scene))
        assert prop.report.status is SolveStatus.OPTIMAL
        assert zf.report.status is SolveStatus.INFEASIBLE


class TestSensingOnly:
    def test_bounded_by_proposed(self):
        scene = desk_scene(seed=6)
        ch = build_channels(scene)
        for sc in Scenario:
            for rx in Receiver:
                prop = solve_variant(ProblemVariant(sc, rx), ch, scene).omega
                so = sensing_only_variant(ProblemVariant(sc, rx, Scheme.SENSING_ONLY),
                                          ch, scene).omega
                assert so <= prop * (1 + 1e-8)

    def test_type1_sensing_energy_collapses_toward_sinr_ceiling(self):
        # with Type-I receivers, raising the SINR floor forces power out of
        # the sensing covariance; the energy vanishes only at the feasibility
        # ceiling because a covariance in the CU channels' null space causes
        # no interference while N_t exceeds the CU count
        scene = desk_scene(seed=7)
        ch = build_channels(scene)
        variant = ProblemVariant(Scenario.SYNC, Receiver.TYPE_I, Scheme.SENSING_ONLY)
        omegas = [
            sensing_only_variant(variant, ch, scene.with_sinr_db(g)).omega
            for g in (5.0, 30.0, 45.0, 50.0)
        ]
        assert all(b <= a * (1 + 1e-8) for a, b in zip(omegas, omegas[1:]))
        assert omegas[-1] < 0.5 * omegas[0]

    def test_extraction_feasible_and_at_least_relaxation_value(self):
        scene = desk_scene(seed=8)
        ch = build_channels(scene)
        variant = ProblemVariant(Scenario.SYNC, Receiver.TYPE_II, Scheme.SENSING_ONLY)
        sdr, sol = solve_and_extract(variant, ch, scene)
        assert sol.residuals.sinr_slack.min() >= -1e-6
        # the remainder covariance only adds sensing energy
        assert sol.omega >= sdr.omega * (1 - 1e-6)


class TestRemarkOneTendency:
    def test_type1_optimum_uses_no_dedicated_sensing(self):
        scene = desk_scene(seed=9, gamma_db=25.0)
        ch = build_channels(scene)
        for sc in Scenario:
            sdr = solve_variant(ProblemVariant(sc, Receiver.TYPE_I), ch, scene)
            tr = sum(float(np.real(np.trace(sdr.R[l]))) for l in range(3))
            assert tr <= 1e-4 * scene.p_max
