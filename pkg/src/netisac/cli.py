"""Command-line interface.

Subcommands:
  solve      solve one design variant and print energy/detection summary
  sweep      run a parameter sweep and write the CSV
  detect-mc  validate the closed-form detector law by Monte-Carlo
  figures    emit the four reference sweep families as CSV files

Scenes are given as a builtin name (one-cu, three-cu, rotation) or a path
to a JSON scene config. Exit code 0 on success, nonzero with a one-line
reason on failure; `solve` additionally exits 1 when the design problem
is not solved to optimality (e.g. infeasible SINR targets).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import harness
from .beamform import ProblemVariant, Scheme, solve_and_extract
from .conic import SolveStatus
from .detection import (
    DetectorSpec,
    Receiver,
    Scenario,
    detection_probability,
    min_sample_energy,
    monte_carlo_roc,
)
from .scene import Scene, build_channels, dbm_to_watt, load_scene

_SCENARIOS = {1: Scenario.SYNC, 2: Scenario.UNSYNC}
_RECEIVERS = {1: Receiver.TYPE_I, 2: Receiver.TYPE_II}


def _load_scene_arg(args) -> Scene:
    name = args.scene
    if name in ("one-cu", "three-cu", "rotation"):
        scene = harness.resolve_scene(name, antennas=args.antennas, seed=args.seed)
    elif os.path.exists(name):
        scene = load_scene(name)
    else:
        raise ValueError(f"unknown scene {name!r} (builtin name or config path)")
    if args.gamma_db is not None:
        scene = scene.with_sinr_db(args.gamma_db)
    if args.pmax is not None:
        scene = scene.with_p_max(args.pmax)
    return scene


def _variant(args) -> ProblemVariant:
    return ProblemVariant(
        _SCENARIOS[args.scenario], _RECEIVERS[args.receiver], Scheme(args.scheme)
    )


def _add_scene_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene", default="one-cu", help="builtin name or JSON config path")
    p.add_argument("--antennas", type=int, default=8, help="N_t = N_r for builtin scenes")
    p.add_argument("--gamma-db", type=float, default=None, help="common SINR target, dB")
    p.add_argument("--pmax", type=float, default=None, help="per-BS power budget, watts")
    p.add_argument("--seed", type=int, default=0)


def _add_variant_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", type=int, choices=(1, 2), default=1,
                   help="1 = synchronized BSs, 2 = unsynchronized")
    p.add_argument("--receiver", type=int, choices=(1, 2), default=1,
                   help="1 = no sensing-interference cancellation, 2 = with")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="proposed")


def cmd_solve(args) -> int:
    scene = _load_scene_arg(args)
    variant = _variant(args)
    ch = build_channels(scene)
    if args.dump is not None:
        from .beamform import _build_program
        from .conic import dump_program

        if variant.scheme is Scheme.ZF:
            raise ValueError("--dump supports the proposed and sensing schemes")
        prog, _ = _build_program(
            variant, ch, scene,
            include_comm_objective=variant.scheme is not Scheme.SENSING_ONLY,
        )
        with open(args.dump, "w", encoding="utf-8") as fh:
            fh.write(dump_program(prog))
        print(f"dumped program to {args.dump}")
    sdr, sol = solve_and_extract(variant, ch, scene, tol=args.tol)
    report = sdr.report
    print(f"status      : {report.status.value}")
    print(f"iterations  : {report.iterations}")
    if report.status is not SolveStatus.OPTIMAL:
        return 1
    det = DetectorSpec(args.pfa, scene.noise_radar, variant.scenario)
    print(f"omega       : {sol.omega:.6e}  (relaxation bound {sdr.omega:.6e})")
    print(f"p_d         : {detection_probability(sol.omega, det):.6f}  at p_fa={args.pfa:g}")
    res = sol.residuals
    print(f"sinr slack  : min {res.sinr_slack.min():.3e} (relative, >= -1e-6 is feasible)")
    print(f"power slack : max overshoot {res.power_overshoot.max():.3e} (relative)")
    print(f"r_cov eig   : min ratio {res.r_min_eig_ratio.min():.3e} (vs trace)")
    print(f"energy gap  : {res.energy_rel_gap:.3e} (extracted vs relaxation)")
    return 0


def cmd_sweep(args) -> int:
    if args.scene not in ("one-cu", "three-cu", "rotation") and os.path.exists(args.scene):
        cfg = harness.read_config(args.scene)
        if isinstance(cfg, harness.SweepSpec):
            rows = harness.run_sweep(cfg)
            harness.write_csv(rows, args.out)
            print(f"wrote {len(rows)} rows to {args.out}")
            return 0
        scene = cfg
    else:
        scene = _load_scene_arg(args)
    variants = tuple(
        ProblemVariant(_SCENARIOS[sc], _RECEIVERS[rx], Scheme(sch))
        for sc in _parse_ints(args.scenarios)
        for rx in _parse_ints(args.receivers)
        for sch in args.schemes.split(",")
    )
    spec = harness.SweepSpec(
        scene=scene,
        variants=variants,
        param=harness.SweepParam(args.param),
        grid=tuple(float(v) for v in args.grid.split(",")),
        p_fa=args.pfa,
        mc_trials=args.trials,
        seed=args.seed,
    )
    rows = harness.run_sweep(spec)
    harness.write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _parse_ints(spec: str) -> list[int]:
    return [int(v) for v in spec.split(",")]


def cmd_detect_mc(args) -> int:
    scene = _load_scene_arg(args)
    if args.noise_radar_dbm is not None:
        scene = replace(scene, noise_radar=dbm_to_watt(args.noise_radar_dbm))
    variant = _variant(args)
    ch = build_channels(scene)
    sdr, sol = solve_and_extract(variant, ch, scene, tol=args.tol)
    if sol is None:
        print(f"solve failed: {sdr.report.status.value}")
        return 1
    include_comm = variant.scheme is not Scheme.SENSING_ONLY
    energy, q_min = min_sample_energy(sol, ch, variant.scenario, include_comm)
    det = DetectorSpec(args.pfa, scene.noise_radar, variant.scenario)
    targets = [1e-1, 1e-2, 1e-3] if args.pfa_grid is None else [
        float(v) for v in args.pfa_grid.split(",")
    ]
    points = monte_carlo_roc(
        sol, ch, q_min, det, targets, args.trials, args.seed, include_comm
    )
    print(f"worst-case sample {q_min}, energy {energy:.6e}, trials {args.trials}")
    print("p_fa_target   p_d_closed    p_d_mc        p_fa_mc")
    worst = 0.0
    for p_fa, (pd_hat, pfa_hat) in zip(targets, points):
        pd_cf = detection_probability(
            energy, DetectorSpec(p_fa, scene.noise_radar, variant.scenario)
        )
        tol = 3.0 * np.sqrt(pd_cf * (1 - pd_cf) / args.trials) + 0.005
        worst = max(worst, abs(pd_hat - pd_cf) - tol)
        print(f"{p_fa:<13g} {pd_cf:<13.6f} {pd_hat:<13.6f} {pfa_hat:<13.6f}")
    print("agreement     " + ("OK" if worst <= 0 else "OUT OF TOLERANCE"))
    return 0 if worst <= 0 else 1


def cmd_figures(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    sweeps = harness.figure_sweeps(
        antennas=args.antennas,
        seed=args.seed,
        mc_trials=args.trials,
        kappa2=args.kappa2,
    )
    for name, spec in sweeps.items():
        rows = harness.run_sweep(spec)
        path = os.path.join(args.out_dir, f"{name}.csv")
        harness.write_csv(rows, path)
        print(f"wrote {len(rows)} rows to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netisac",
        description="Coordinated beamforming for networked sensing and communication",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one design variant")
    _add_scene_args(p)
    _add_variant_args(p)
    p.add_argument("--pfa", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--dump", default=None,
                   help="write the conic program in sparse text form")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a parameter sweep to CSV")
    _add_scene_args(p)
    p.add_argument("--param", choices=[v.value for v in harness.SweepParam],
                   default="gamma")
    p.add_argument("--grid", default="5,10,15,20,25", help="comma-separated values")
    p.add_argument("--scenarios", default="1,2")
    p.add_argument("--receivers", default="1,2")
    p.add_argument("--schemes", default="proposed,zf,sensing")
    p.add_argument("--pfa", type=float, default=1e-3)
    p.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials per row")
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("detect-mc", help="Monte-Carlo validation of the detector law")
    _add_scene_args(p)
    _add_variant_args(p)
    p.add_argument("--pfa", type=float, default=1e-3)
    p.add_argument("--pfa-grid", default=None, help="comma-separated p_fa targets")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--noise-radar-dbm", type=float, default=None,
                   help="override the radar noise floor, dBm")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_detect_mc)

    p = sub.add_parser("figures", help="emit the four reference sweep families")
    p.add_argument("--out-dir", default="figures")
    p.add_argument("--antennas", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=0)
    p.add_argument("--kappa2", type=float, default=5e-9,
                   help="two-way sensing reference power at 1 m")
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
