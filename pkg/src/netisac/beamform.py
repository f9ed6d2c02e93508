"""SINR-constrained max-min echo-energy transmit beamforming.

The design problem: choose per-CU information beamformers and per-BS
sensing covariances maximizing the worst-case fused echo energy over the
target samples, subject to per-CU SINR floors and per-BS power budgets.
Rank-one beamformer outer products are relaxed to PSD matrix variables;
the relaxation is provably tight, and `rank_one_extract` constructs the
optimal rank-one solution from any relaxed optimum.

Benchmarks: zero-forcing directions with optimized power allocation, and
a sensing-only objective where only the dedicated sensing covariance
counts toward the detection energy.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import conic
from .conic import ConicProgram, FreeBlock, NonnegBlock, PsdBlock, SolveStatus
from .detection import (
    BeamSolution,
    Receiver,
    Residuals,
    Scenario,
    min_sample_energy,
    sinr,
)
from .scene import ChannelSet, Scene

logger = logging.getLogger(__name__)

_TINY = 1e-300


class Scheme(Enum):
    PROPOSED = "proposed"
    ZF = "zf"
    SENSING_ONLY = "sensing"


@dataclass(frozen=True)
class ProblemVariant:
    scenario: Scenario
    receiver: Receiver
    scheme: Scheme = Scheme.PROPOSED


@dataclass
class SdrSolution:
    """Optimum of one relaxed design problem.

    W[l, i] and R[l] are Hermitian PSD matrices (information-beam outer
    products and sensing covariances); omega is the certified optimal
    min-sample energy. W and R are None unless the report says OPTIMAL.
    """

    W: np.ndarray | None  # (L, K, N_t, N_t) complex
    R: np.ndarray | None  # (L, N_t, N_t) complex
    omega: float
    report: conic.SolveReport


class DegenerateExtractionError(RuntimeError):
    """Rank-one extraction hit a vanishing quadratic form h^H W h."""


class DegenerateDirectionError(RuntimeError):
    """A zero-forcing direction collapsed to (numerically) zero."""


def default_tol(scene: Scene) -> float:
    """Solver tolerance: tight at desk scale, relaxed for large arrays."""
    return 1e-8 if scene.arrays.n_tx <= 8 else 1e-6


# ---------------------------------------------------------------------------
# Program construction


def _energy_coefficients(ch: ChannelSet, scenario: Scenario) -> np.ndarray:
    """coef[q, l]: weight of BS l's beampattern gain in the echo energy."""
    nr = ch.scene.arrays.n_rx
    if scenario is Scenario.SYNC:
        return nr * np.einsum("ml,qml->ql", ch.zeta**2, ch.beta)
    direct = np.einsum("qll->ql", ch.beta) * np.diag(ch.zeta) ** 2
    return nr * direct


def _energy_scale(coef: np.ndarray, scene: Scene) -> float:
    # Upper bound on the energy functional: full budget on the strongest
    # sample. Keeps the scaled objective O(1) for the solver.
    bound = float(np.max(np.sum(coef, axis=1))) * scene.arrays.n_tx * scene.p_max
    return bound if bound > 0 else 1.0


def build_sdr(
    variant: ProblemVariant, ch: ChannelSet, scene: Scene
) -> tuple[ConicProgram, float]:
    """Relaxed design program for the proposed scheme.

    Returns the program and the energy scale: the free scalar objective
    variable equals (min-sample energy) / scale.
    """
    if variant.scheme is not Scheme.PROPOSED:
        raise ValueError("build_sdr constructs the proposed scheme only")
    return _build_program(variant, ch, scene, include_comm_objective=True)


def _build_program(
    variant: ProblemVariant,
    ch: ChannelSet,
    scene: Scene,
    include_comm_objective: bool,
) -> tuple[ConicProgram, float]:
    L, K = scene.n_cells, scene.n_users
    nt = scene.arrays.n_tx
    dim = 2 * nt

    prog = ConicProgram(maximize=True)
    w_idx = [[prog.add_block(PsdBlock(dim)) for _ in range(K)] for _ in range(L)]
    r_idx = [prog.add_block(PsdBlock(dim)) for _ in range(L)]
    omega = prog.add_block(FreeBlock(1))
    prog.objective = [(omega, np.array([1.0]))]

    coef = _energy_coefficients(ch, variant.scenario)
    e_scale = _energy_scale(coef, scene)

    # Worst-case energy epigraph: one row per target sample.
    for q in range(ch.n_samples):
        terms: list[conic.Term] = []
        for l in range(L):
            if coef[q, l] == 0.0:
                continue
            table = conic.embed_hermitian(ch.steer_gram[q, l]) * (
                0.5 * coef[q, l] / e_scale
            )
            if include_comm_objective:
                terms.extend((w_idx[l][i], table) for i in range(K))
            terms.append((r_idx[l], table))
        terms.append((omega, np.array([-1.0])))
        prog.add_constraint(terms, ">=", 0.0)

    # Per-CU SINR floors in linearized form, normalized by the noise power.
    inv_noise = 1.0 / scene.noise_comm
    for m in range(L):
        for k in range(K):
            tables: dict[int, np.ndarray] = {}
            for l in range(L):
                h = ch.h[l, m, k]
                g = conic.embed_hermitian(np.outer(h, np.conj(h))) * (0.5 * inv_noise)
                for i in range(K):
                    idx = w_idx[l][i]
                    tables[idx] = tables.get(idx, 0.0) + g
                if variant.receiver is Receiver.TYPE_I:
                    tables[r_idx[l]] = tables.get(r_idx[l], 0.0) + g
            h_own = ch.h[m, m, k]
            g_own = conic.embed_hermitian(np.outer(h_own, np.conj(h_own))) * (
                0.5 * inv_noise
            )
            gamma = scene.sinr_targets[m, k]
            idx = w_idx[m][k]
            tables[idx] = tables.get(idx, 0.0) - (1.0 + 1.0 / gamma) * g_own
            prog.add_constraint(
                [(i, t) for i, t in tables.items()], "<=", -1.0
            )

    # Per-BS power budgets, normalized by the budget.
    half_trace = 0.5 * np.eye(dim) / scene.p_max
    for l in range(L):
        terms = [(w_idx[l][i], half_trace) for i in range(K)]
        terms.append((r_idx[l], half_trace))
        prog.add_constraint(terms, "<=", 1.0)

    return prog, e_scale


def _solution_from_report(
    report: conic.SolveReport,
    scene: Scene,
    e_scale: float,
    n_psd_per_cell: int,
) -> SdrSolution:
    L, K = scene.n_cells, scene.n_users
    nt = scene.arrays.n_tx
    if report.status is not SolveStatus.OPTIMAL:
        return SdrSolution(W=None, R=None, omega=np.nan, report=report)
    vals = report.block_values
    W = np.zeros((L, K, nt, nt), dtype=complex)
    for l in range(L):
        for i in range(K):
            W[l, i] = conic.extract_hermitian(vals[l * K + i])
    R = np.zeros((L, nt, nt), dtype=complex)
    for l in range(L):
        R[l] = conic.extract_hermitian(vals[L * K + l])
    omega = float(vals[L * K + L][0]) * e_scale
    return SdrSolution(W=W, R=R, omega=omega, report=report)


def solve_variant(
    variant: ProblemVariant,
    ch: ChannelSet,
    scene: Scene,
    tol: float | None = None,
) -> SdrSolution:
    """Solve one (scenario, receiver, scheme) design problem to certified optimality."""
    tol = default_tol(scene) if tol is None else tol
    if variant.scheme is Scheme.ZF:
        return zf_power_allocation(variant, ch, scene, zf_beamformers(ch, scene), tol)
    if variant.scheme is Scheme.SENSING_ONLY:
        return sensing_only_variant(variant, ch, scene, tol)
    prog, e_scale = build_sdr(variant, ch, scene)
    report = conic.solve(prog, tol)
    return _solution_from_report(report, scene, e_scale, scene.n_users + 1)


def sensing_only_variant(
    variant: ProblemVariant,
    ch: ChannelSet,
    scene: Scene,
    tol: float | None = None,
) -> SdrSolution:
    """Benchmark where only the dedicated sensing covariance is detected.

    Constraints are unchanged; the epigraph keeps only the sensing-
    covariance contribution, so information beams exist solely to satisfy
    the SINR floors.
    """
    tol = default_tol(scene) if tol is None else tol
    prog, e_scale = _build_program(variant, ch, scene, include_comm_objective=False)
    report = conic.solve(prog, tol)
    return _solution_from_report(report, scene, e_scale, scene.n_users + 1)


# ---------------------------------------------------------------------------
# Rank-one extraction


def rank_one_extract(
    sdr: SdrSolution,
    ch: ChannelSet,
    scene: Scene,
    variant: ProblemVariant,
) -> BeamSolution:
    """Construct the rank-one optimal beamformers from a relaxed optimum.

    For each (l, i) with served channel h: w = W h / sqrt(h^H W h), and the
    sensing covariance absorbs the remainder sum(W) + R - sum(w w^H), which
    preserves every SINR quadratic form, the per-BS power, and the achieved
    energy. The remainder is PSD up to solver tolerance; negative
    eigenvalues within tolerance are clipped (and logged), larger ones are
    an extraction failure.
    """
    if sdr.report.status is not SolveStatus.OPTIMAL:
        raise ValueError(f"cannot extract from status {sdr.report.status}")
    L, K = scene.n_cells, scene.n_users
    nt = scene.arrays.n_tx

    w = np.zeros((L, K, nt), dtype=complex)
    r_cov = np.zeros((L, nt, nt), dtype=complex)
    min_eig_ratio = np.zeros(L)
    for l in range(L):
        remainder = sdr.R[l].copy()
        for i in range(K):
            W = sdr.W[l, i]
            remainder += W
            h = ch.h[l, l, i]
            quad = float(np.real(np.conj(h) @ W @ h))
            tr_w = float(np.real(np.trace(W)))
            if tr_w <= 0.0:
                continue
            if quad <= 1e-12 * tr_w * float(np.vdot(h, h).real):
                raise DegenerateExtractionError(
                    f"h^H W h vanished for beam ({l},{i}); "
                    "cannot extract a rank-one solution"
                )
            w[l, i] = (W @ h) / np.sqrt(quad)
            remainder -= np.outer(w[l, i], np.conj(w[l, i]))
        remainder = 0.5 * (remainder + remainder.conj().T)
        vals, vecs = np.linalg.eigh(remainder)
        # scale against the BS's full transmit covariance: the remainder is a
        # difference of matrices at that magnitude, so its own (possibly
        # vanishing) trace is not a meaningful yardstick
        scale = max(
            float(np.real(np.trace(sdr.R[l] + sdr.W[l].sum(axis=0)))), _TINY
        )
        min_eig_ratio[l] = float(vals[0]) / scale
        if np.any(vals < 0):
            clipped = float(-np.sum(vals[vals < 0]))
            if clipped > 0:
                logger.debug(
                    "clipped %.3e total negative eigenvalue mass from "
                    "sensing covariance of BS %d",
                    clipped,
                    l,
                )
            vals = np.maximum(vals, 0.0)
            remainder = (vecs * vals) @ vecs.conj().T
            remainder = 0.5 * (remainder + remainder.conj().T)
        r_cov[l] = remainder

    sol = BeamSolution(w=w, r_cov=r_cov, omega=np.nan)
    include_comm = variant.scheme is not Scheme.SENSING_ONLY
    e_min, _ = min_sample_energy(sol, ch, variant.scenario, include_comm)
    sol.omega = e_min

    slack = np.zeros((L, K))
    for m in range(L):
        for k in range(K):
            gamma = scene.sinr_targets[m, k]
            slack[m, k] = (sinr(sol, ch, m, k, variant.receiver) - gamma) / gamma
    power = np.array(
        [
            float(np.sum(np.abs(w[l]) ** 2) + np.real(np.trace(r_cov[l])))
            for l in range(L)
        ]
    )
    sol.residuals = Residuals(
        sinr_slack=slack,
        power_overshoot=(power - scene.p_max) / scene.p_max,
        r_min_eig_ratio=min_eig_ratio,
        energy_rel_gap=abs(e_min - sdr.omega) / max(abs(sdr.omega), _TINY),
    )
    return sol


# ---------------------------------------------------------------------------
# Zero-forcing benchmark


def zf_beamformers(ch: ChannelSet, scene: Scene) -> np.ndarray:
    """Unit-norm directions nulling every other CU's channel from each BS.

    For CU (m, k): project its own channel onto the orthogonal complement
    of all other CUs' channels from BS m (null space via SVD) and
    normalize. Needs at least as many transmit antennas as CUs in total.
    """
    L, K = scene.n_cells, scene.n_users
    nt = scene.arrays.n_tx
    if nt < L * K:
        raise ValueError(
            f"zero-forcing needs n_tx >= total number of CUs ({L * K}), got {nt}"
        )
    dirs = np.zeros((L, K, nt), dtype=complex)
    for m in range(L):
        for k in range(K):
            others = [
                ch.h[m, mp, kp]
                for mp in range(L)
                for kp in range(K)
                if (mp, kp) != (m, k)
            ]
            h_own = ch.h[m, m, k]
            if not others:
                dirs[m, k] = h_own / np.linalg.norm(h_own)
                continue
            stack = np.column_stack(others)
            u, s, _ = np.linalg.svd(stack, full_matrices=True)
            rank = int(np.sum(s > s[0] * max(stack.shape) * np.finfo(float).eps))
            u_null = u[:, rank:]
            proj = u_null @ (u_null.conj().T @ h_own)
            nrm = np.linalg.norm(proj)
            if nrm <= 1e-12 * np.linalg.norm(h_own):
                raise DegenerateDirectionError(
                    f"projected channel of CU ({m},{k}) is numerically zero"
                )
            dirs[m, k] = proj / nrm
    return dirs


def zf_power_allocation(
    variant: ProblemVariant,
    ch: ChannelSet,
    scene: Scene,
    directions: np.ndarray,
    tol: float | None = None,
) -> SdrSolution:
    """Optimal power allocation over fixed zero-forcing directions.

    Information beams are p_{l,i}^(1/2) * u_{l,i} with nonnegative powers;
    sensing covariances stay free PSD variables. Same constraint families
    as the proposed scheme, solved through the same conic layer.
    """
    tol = default_tol(scene) if tol is None else tol
    L, K = scene.n_cells, scene.n_users
    nt = scene.arrays.n_tx
    dim = 2 * nt

    prog = ConicProgram(maximize=True)
    p_idx = prog.add_block(NonnegBlock(L * K))
    r_idx = [prog.add_block(PsdBlock(dim)) for _ in range(L)]
    omega = prog.add_block(FreeBlock(1))
    prog.objective = [(omega, np.array([1.0]))]

    coef = _energy_coefficients(ch, variant.scenario)
    e_scale = _energy_scale(coef, scene)
    include_comm = variant.scheme is not Scheme.SENSING_ONLY

    for q in range(ch.n_samples):
        p_coef = np.zeros(L * K)
        terms: list[conic.Term] = []
        for l in range(L):
            if coef[q, l] == 0.0:
                continue
            if include_comm:
                a = ch.steer_tx[q, l]
                for i in range(K):
                    gain = abs(a @ directions[l, i]) ** 2
                    p_coef[l * K + i] = coef[q, l] * gain / e_scale
            table = conic.embed_hermitian(ch.steer_gram[q, l]) * (
                0.5 * coef[q, l] / e_scale
            )
            terms.append((r_idx[l], table))
        terms.append((p_idx, p_coef))
        terms.append((omega, np.array([-1.0])))
        prog.add_constraint(terms, ">=", 0.0)

    inv_noise = 1.0 / scene.noise_comm
    for m in range(L):
        for k in range(K):
            p_coef = np.zeros(L * K)
            terms = []
            for l in range(L):
                h = ch.h[l, m, k]
                for i in range(K):
                    p_coef[l * K + i] += inv_noise * abs(np.vdot(h, directions[l, i])) ** 2
                if variant.receiver is Receiver.TYPE_I:
                    g = conic.embed_hermitian(np.outer(h, np.conj(h))) * (
                        0.5 * inv_noise
                    )
                    terms.append((r_idx[l], g))
            h_own = ch.h[m, m, k]
            gamma = scene.sinr_targets[m, k]
            p_coef[m * K + k] -= (
                (1.0 + 1.0 / gamma)
                * inv_noise
                * abs(np.vdot(h_own, directions[m, k])) ** 2
            )
            terms.append((p_idx, p_coef))
            prog.add_constraint(terms, "<=", -1.0)

    half_trace = 0.5 * np.eye(dim) / scene.p_max
    for l in range(L):
        p_coef = np.zeros(L * K)
        p_coef[l * K : (l + 1) * K] = 1.0 / scene.p_max
        prog.add_constraint([(p_idx, p_coef), (r_idx[l], half_trace)], "<=", 1.0)

    report = conic.solve(prog, tol)
    if report.status is not SolveStatus.OPTIMAL:
        return SdrSolution(W=None, R=None, omega=np.nan, report=report)

    powers = report.block_values[p_idx]
    W = np.zeros((L, K, nt, nt), dtype=complex)
    for l in range(L):
        for i in range(K):
            u = directions[l, i]
            W[l, i] = powers[l * K + i] * np.outer(u, np.conj(u))
    R = np.zeros((L, nt, nt), dtype=complex)
    for l in range(L):
        R[l] = conic.extract_hermitian(report.block_values[r_idx[l]])
    omega_val = float(report.block_values[omega][0]) * e_scale
    return SdrSolution(W=W, R=R, omega=omega_val, report=report)


def solve_and_extract(
    variant: ProblemVariant,
    ch: ChannelSet,
    scene: Scene,
    tol: float | None = None,
) -> tuple[SdrSolution, BeamSolution | None]:
    """Solve a variant and, when optimal, extract the rank-one beam solution."""
    sdr = solve_variant(variant, ch, scene, tol)
    if sdr.report.status is not SolveStatus.OPTIMAL:
        return sdr, None
    return sdr, rank_one_extract(sdr, ch, scene, variant)
