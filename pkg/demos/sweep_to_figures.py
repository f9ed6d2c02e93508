"""Parameter sweep to CSV, ready for the frontend plot renderer.

Runs a detection-probability-versus-SINR-target sweep over all schemes and
receiver types, writes the harness CSV, and prints the command that turns
it into a figure.
"""

from netisac.harness import (
    SweepParam,
    SweepSpec,
    all_variants,
    figure_sweeps,
    run_sweep,
    write_csv,
)

OUT = "demo_gamma_sweep.csv"

# figure_sweeps ships the reference desk-scale scenes (radar reference
# pinned so p_d stays informative); reuse its gamma-family scene
spec = figure_sweeps(antennas=8, seed=0)["pd_vs_gamma"]
rows = run_sweep(spec)
write_csv(rows, OUT)

solved = sum(1 for r in rows if r.status == "optimal")
print(f"wrote {len(rows)} rows ({solved} optimal) to {OUT}")
print("\ncurve preview (scenario 1, proposed):")
print(f"{'gamma [dB]':>11} {'type-1 p_d':>11} {'type-2 p_d':>11}")
for value in spec.grid:
    pds = {
        r.receiver: r.pd_cf
        for r in rows
        if r.value == value and r.scenario == "1" and r.scheme == "proposed"
    }
    print(f"{value:>11g} {pds['1']:>11.4f} {pds['2']:>11.4f}")

print(f"""
render it (from frontend/, after `npm install && npm run build`):
  node dist/cli.js --csv ../{OUT} --x value --out ../demo_gamma_sweep.svg
""")
