"""Detection analytics and the Monte-Carlo likelihood-ratio detector.

Closed forms: the fused echo energy at the receiving base stations is a
sufficient statistic for target detection, and the detection probability
at false-alarm rate p_fa is Q(Q^{-1}(p_fa) - sqrt(2 E / sigma^2)). The
Monte-Carlo detector re-derives the same quantities by simulating the
matched-filter observation vector and applying the likelihood-ratio test,
which is how the closed forms are validated end to end.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .scene import ChannelSet

#: Eigenvalues of a sensing covariance below this fraction of its trace are
#: treated as zero when materializing sensing beams.
SENSING_BEAM_CUTOFF = 1e-10


class Scenario(Enum):
    """Which echo links the fusion center can exploit."""

    SYNC = "sync"  # time-synchronized BSs: direct and cross links
    UNSYNC = "unsync"  # unsynchronized BSs: direct links only


class Receiver(Enum):
    """CU receiver capability regarding the dedicated sensing signal."""

    TYPE_I = "type1"  # cannot cancel sensing interference
    TYPE_II = "type2"  # cancels the (known) sensing interference


@dataclass(frozen=True)
class DetectorSpec:
    """False-alarm operating point of the likelihood-ratio detector."""

    p_fa: float
    noise_radar: float
    scenario: Scenario = Scenario.SYNC

    def __post_init__(self) -> None:
        if not 0.0 < self.p_fa < 1.0:
            raise ValueError("p_fa must lie strictly inside (0, 1)")
        if self.noise_radar <= 0:
            raise ValueError("noise_radar must be positive")


@dataclass
class Residuals:
    """Feasibility slack report for a beamforming solution.

    sinr_slack[m,k] = (achieved - target)/target  (feasible when >= -tol);
    power_overshoot[l] = (used - p_max)/p_max     (feasible when <= tol);
    r_min_eig_ratio[l] = min eigenvalue of the extracted sensing covariance
    divided by the trace of the BS's total transmit covariance (the scale
    of the matrices whose cancellation produced it), before PSD clipping;
    energy_rel_gap = |min-sample energy - omega| / max(omega, tiny).
    """

    sinr_slack: np.ndarray
    power_overshoot: np.ndarray
    r_min_eig_ratio: np.ndarray
    energy_rel_gap: float


@dataclass
class BeamSolution:
    """Transmit-ready beamforming design.

    w[l, k] is the information beamformer of BS l for its CU k; r_cov[l]
    the Hermitian PSD covariance of the dedicated sensing signal; omega
    the achieved min-sample echo energy.
    """

    w: np.ndarray  # (L, K, N_t) complex
    r_cov: np.ndarray  # (L, N_t, N_t) complex
    omega: float
    residuals: Residuals | None = None


# ---------------------------------------------------------------------------
# Q-function and the closed-form detector law


def q_function(x: float) -> float:
    """Standard normal tail probability, via the complementary error function."""
    return 0.5 * erfc(x / np.sqrt(2.0))


def q_inverse(p: float) -> float:
    """Inverse of q_function on (0, 1), by bracketed root finding."""
    if not 0.0 < p < 1.0:
        raise ValueError("q_inverse requires p strictly inside (0, 1)")
    # Q(-40) == 1 and Q(40) == 0 in double precision, so the bracket is safe
    # for every representable p.
    return brentq(lambda x: q_function(x) - p, -40.0, 40.0, xtol=1e-12)


def detection_probability(energy: float, spec: DetectorSpec) -> float:
    """Detection probability at the operating point's false-alarm rate."""
    if energy < 0:
        raise ValueError("energy must be nonnegative")
    deflection = np.sqrt(2.0 * energy / spec.noise_radar)
    return q_function(q_inverse(spec.p_fa) - deflection)


def detector_threshold(energy: float, spec: DetectorSpec) -> float:
    """Decision threshold placing the false-alarm rate at spec.p_fa."""
    if energy <= 0:
        raise ValueError("threshold undefined for a zero-energy test")
    return q_inverse(spec.p_fa) * np.sqrt(spec.noise_radar * energy / 2.0)


# ---------------------------------------------------------------------------
# SINR and echo-energy functionals


def sinr(
    sol: BeamSolution, ch: ChannelSet, m: int, k: int, receiver: Receiver
) -> float:
    """Downlink SINR of CU k in cell m under the given receiver type.

    Type-I receivers see the dedicated sensing signal as interference;
    Type-II receivers cancel it before decoding.
    """
    L, K = ch.n_cells, ch.n_users
    h_own = ch.h[m, m, k]
    signal = abs(np.vdot(h_own, sol.w[m, k])) ** 2
    denom = ch.scene.noise_comm
    for l in range(L):
        h = ch.h[l, m, k]
        for i in range(K):
            if l == m and i == k:
                continue
            denom += abs(np.vdot(h, sol.w[l, i])) ** 2
        if receiver is Receiver.TYPE_I:
            denom += float(np.real(np.conj(h) @ sol.r_cov[l] @ h))
    return float(signal / denom)


def echo_energy(
    sol: BeamSolution,
    ch: ChannelSet,
    q: int,
    scenario: Scenario,
    include_comm: bool = True,
) -> float:
    """Total reflected-signal power fused at the BSs for target sample q.

    Synchronized fusion sums all transmitter/receiver link pairs;
    unsynchronized fusion keeps the direct links only. With
    include_comm=False only the dedicated sensing covariance contributes
    (the sensing-only benchmark's objective).
    """
    L = ch.n_cells
    nr = ch.scene.arrays.n_rx
    total = 0.0
    for l in range(L):
        a = ch.steer_tx[q, l]
        gain = 0.0
        if include_comm:
            proj = sol.w[l] @ a  # a^T w for each served CU
            gain += float(np.sum(np.abs(proj) ** 2))
        gain += float(np.real(a @ sol.r_cov[l] @ np.conj(a)))
        if scenario is Scenario.SYNC:
            link = sum(
                ch.zeta[m, l] ** 2 * ch.beta[q, m, l] for m in range(L)
            )
        else:
            link = ch.zeta[l, l] ** 2 * ch.beta[q, l, l]
        total += link * gain
    return nr * total


def min_sample_energy(
    sol: BeamSolution, ch: ChannelSet, scenario: Scenario, include_comm: bool = True
) -> tuple[float, int]:
    """Minimum echo energy over the target samples and its argmin index."""
    energies = [
        echo_energy(sol, ch, q, scenario, include_comm)
        for q in range(ch.n_samples)
    ]
    q_min = int(np.argmin(energies))
    return energies[q_min], q_min


# ---------------------------------------------------------------------------
# Monte-Carlo likelihood-ratio detector


def sensing_beams(r_cov: np.ndarray, cutoff: float = SENSING_BEAM_CUTOFF) -> np.ndarray:
    """Beamformers realizing a sensing covariance, via eigendecomposition.

    Returns an (r, N_t) array of sqrt(eigenvalue)-scaled eigenvectors,
    keeping eigenvalues above cutoff * trace.
    """
    vals, vecs = np.linalg.eigh(0.5 * (r_cov + r_cov.conj().T))
    tr = float(np.real(np.trace(r_cov)))
    keep = vals > cutoff * max(tr, 0.0)
    if not np.any(keep):
        return np.zeros((0, r_cov.shape[0]), dtype=complex)
    order = np.argsort(vals[keep])[::-1]
    vals, vecs = vals[keep][order], vecs[:, keep][:, order]
    return (np.sqrt(vals)[:, None] * vecs.T).astype(complex)


def stacked_mean_vector(
    sol: BeamSolution,
    ch: ChannelSet,
    q: int,
    scenario: Scenario,
    include_comm: bool = True,
) -> np.ndarray:
    """Mean of the stacked matched-filter observations when a target is present.

    One length-N_r block per (receiver m, transmitter l, beam) triple:
    the echo response applied to each information beam, then to each
    sensing beam materialized from the covariance. Its squared norm equals
    the scenario's echo energy.
    """
    L, K = ch.n_cells, ch.n_users
    beams_per_bs = []
    for l in range(L):
        tx = [sol.w[l, i] for i in range(K)] if include_comm else []
        beams_per_bs.append((tx, sensing_beams(sol.r_cov[l])))

    pairs = (
        [(m, l) for m in range(L) for l in range(L)]
        if scenario is Scenario.SYNC
        else [(m, m) for m in range(L)]
    )
    blocks = []
    for beam_kind in (0, 1):  # communication blocks first, then sensing
        for m, l in pairs:
            a_t = ch.steer_tx[q, l]
            a_r = ch.steer_rx[q, m]
            amp = np.sqrt(ch.beta[q, m, l]) * ch.zeta[m, l]
            for w in beams_per_bs[l][beam_kind]:
                blocks.append(amp * (a_t @ w) * a_r)
    if not blocks:
        return np.zeros(0, dtype=complex)
    return np.concatenate(blocks)


#: Trials per seeded sub-stream of the Monte-Carlo detector. Part of the
#: stream definition: results depend only on (seed, trials).
_MC_BATCH = 8192


def detector_statistics(
    sol: BeamSolution,
    ch: ChannelSet,
    q: int,
    spec: DetectorSpec,
    trials: int,
    seed: int,
    include_comm: bool = True,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Samples of the detector statistic under both hypotheses.

    Draws the stacked observation d = alpha + z (target present) and d = z
    (target absent) with circularly-symmetric complex Gaussian noise of
    per-entry variance noise_radar, and evaluates T(d) = Re(alpha^H d).
    Returns (t_absent, t_present, energy).

    The statistic is computed in the isomorphic real coordinates
    [Re d_0, Im d_0, Re d_1, ...], where T(d) is the plain inner product
    with the same stacking of alpha.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    alpha = stacked_mean_vector(sol, ch, q, spec.scenario, include_comm)
    energy = float(np.real(np.vdot(alpha, alpha)))
    if alpha.size == 0 or energy <= 0.0:
        raise ValueError("stacked mean vector is zero; detector is degenerate")

    v = np.column_stack([alpha.real, alpha.imag]).ravel()  # real stacking
    scale = np.sqrt(spec.noise_radar / 2.0)
    t_absent = np.empty(trials)
    t_present = np.empty(trials)
    for b, start in enumerate(range(0, trials, _MC_BATCH)):
        stop = min(start + _MC_BATCH, trials)
        rng = np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=(2, b))
        )
        z = scale * rng.standard_normal((stop - start, v.size))
        t_absent[start:stop] = z @ v
        z = scale * rng.standard_normal((stop - start, v.size))
        z += v  # d = alpha + z, in place
        t_present[start:stop] = z @ v
    return t_absent, t_present, energy


def monte_carlo_detect(
    sol: BeamSolution,
    ch: ChannelSet,
    q: int,
    spec: DetectorSpec,
    trials: int,
    seed: int,
    include_comm: bool = True,
) -> tuple[float, float]:
    """Empirical (detection, false-alarm) rates of the likelihood-ratio test.

    The threshold is set from the closed-form false-alarm law at the
    stacked-mean energy, so the empirical rates validate the analytic
    detection law.
    """
    t_absent, t_present, energy = detector_statistics(
        sol, ch, q, spec, trials, seed, include_comm
    )
    threshold = detector_threshold(energy, spec)
    p_d_hat = float(np.mean(t_present > threshold))
    p_fa_hat = float(np.mean(t_absent > threshold))
    return p_d_hat, p_fa_hat


def monte_carlo_roc(
    sol: BeamSolution,
    ch: ChannelSet,
    q: int,
    spec: DetectorSpec,
    p_fa_targets: "list[float]",
    trials: int,
    seed: int,
    include_comm: bool = True,
) -> list[tuple[float, float]]:
    """Empirical operating points at several false-alarm targets.

    Simulates the detector statistic once and thresholds it at each
    target's closed-form threshold; each returned (p_d_hat, p_fa_hat) pair
    equals monte_carlo_detect run at that target with the same seed.
    """
    t_absent, t_present, energy = detector_statistics(
        sol, ch, q, spec, trials, seed, include_comm
    )
    out = []
    for p_fa in p_fa_targets:
        point = DetectorSpec(p_fa, spec.noise_radar, spec.scenario)
        threshold = detector_threshold(energy, point)
        out.append(
            (
                float(np.mean(t_present > threshold)),
                float(np.mean(t_absent > threshold)),
            )
        )
    return out
