"""All design variants and benchmarks on one desk-scale scene.

Solves the relaxed max-min problem for every (synchronization scenario,
receiver type) pair and both benchmark schemes, extracts rank-one
beamformers, and prints the achieved worst-case echo energies together
with the extraction's feasibility residuals.
"""

import numpy as np

from netisac import (
    ProblemVariant,
    Receiver,
    Scenario,
    Scheme,
    SolveStatus,
    build_channels,
    default_paper_scene,
    solve_and_extract,
)

scene = default_paper_scene("one-cu", antennas=8, seed=0).with_sinr_db(20.0)
ch = build_channels(scene)
print(f"3 cells, 1 CU each, {scene.arrays.n_tx} antennas, "
      f"SINR target 20 dB, budget {scene.p_max} W\n")

print(f"{'scenario':>9} {'receiver':>9} {'scheme':>9} {'omega [W]':>13} "
      f"{'sinr slack':>11} {'power used':>11} {'tr(R)':>9}")
for scenario in Scenario:
    for receiver in Receiver:
        for scheme in Scheme:
            variant = ProblemVariant(scenario, receiver, scheme)
            sdr, sol = solve_and_extract(variant, ch, scene)
            if sdr.report.status is not SolveStatus.OPTIMAL:
                print(f"{scenario.value:>9} {receiver.value:>9} "
                      f"{scheme.value:>9} {sdr.report.status.value:>13}")
                continue
            power = max(
                float(np.sum(np.abs(sol.w[l]) ** 2)
                      + np.real(np.trace(sol.r_cov[l])))
                for l in range(scene.n_cells)
            )
            tr_r = sum(float(np.real(np.trace(sol.r_cov[l])))
                       for l in range(scene.n_cells))
            print(f"{scenario.value:>9} {receiver.value:>9} {scheme.value:>9} "
                  f"{sol.omega:>13.4e} {sol.residuals.sinr_slack.min():>11.1e} "
                  f"{power:>11.4f} {tr_r:>9.4f}")

print("""
Readings: synchronized fusion beats direct-links-only detection; receivers
that cancel the dedicated sensing signal admit more sensing power (tr(R));
the proposed joint design dominates both benchmarks; Type-I optima drive
tr(R) to zero (dedicated sensing only interferes there).""")
