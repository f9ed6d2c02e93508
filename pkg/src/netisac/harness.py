"""Experiment sweeps, CSV persistence, and config ingestion.

A SweepSpec names a base scene, a list of design variants, a swept
parameter with its grid, and optional Monte-Carlo validation. run_sweep
emits one SweepRow per (grid point, variant) in deterministic order;
identical (spec, seed) produce identical rows apart from wall time.

Config files are UTF-8 JSON with a "kind" discriminator:

    {"kind": "scene",  ...}   -> Scene (see scene.scene_to_dict)
    {"kind": "sweep",
     "scene": "one-cu" | {...scene...},
     "variants": [{"scenario": 1, "receiver": 2, "scheme": "proposed"}, ...],
     "param": "gamma" | "pfa" | "pmax" | "rotation",
     "grid": [5, 10, 15],
     "p_fa": 1e-3,           # fixed operating point for non-pfa sweeps
     "mc_trials": 0,
     "seed": 0}              -> SweepSpec
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .beamform import (
    DegenerateDirectionError,
    DegenerateExtractionError,
    ProblemVariant,
    Scheme,
    solve_and_extract,
)
from .detection import (
    DetectorSpec,
    Receiver,
    Scenario,
    detection_probability,
    min_sample_energy,
    monte_carlo_detect,
)
from .geometry import Point2D
from .scene import (
    Scene,
    build_channels,
    default_paper_scene,
    scene_from_dict,
    scene_to_dict,
)

CSV_HEADER = "scenario,receiver,scheme,param,value,omega,pd_cf,pd_mc,pfa_mc,status,ms"

#: Distance (meters) at which the rotation sweep repositions each cell's CU.
ROTATION_RADIUS = 45.0


class SweepParam(Enum):
    GAMMA = "gamma"  # common SINR target, grid in dB
    PFA = "pfa"  # false-alarm probability
    PMAX = "pmax"  # per-BS power budget, watts
    ROTATION = "rotation"  # CU angle, degrees

    @property
    def column(self) -> str:
        return {
            SweepParam.GAMMA: "gamma_db",
            SweepParam.PFA: "pfa",
            SweepParam.PMAX: "pmax_w",
            SweepParam.ROTATION: "angle_deg",
        }[self]


_SCENARIO_CODE = {Scenario.SYNC: "1", Scenario.UNSYNC: "2"}
_RECEIVER_CODE = {Receiver.TYPE_I: "1", Receiver.TYPE_II: "2"}


@dataclass(frozen=True)
class SweepSpec:
    scene: Scene | str  # base Scene or builtin variant name
    variants: tuple[ProblemVariant, ...]
    param: SweepParam
    grid: tuple[float, ...]
    p_fa: float = 1e-3  # operating point when param != PFA
    mc_trials: int = 0  # 0 = closed form only
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.grid:
            raise ValueError("sweep grid must be nonempty")
        if not self.variants:
            raise ValueError("sweep needs at least one variant")
        if self.param is SweepParam.PFA:
            if any(not 0.0 < v < 1.0 for v in self.grid):
                raise ValueError("pfa grid values must lie in (0, 1)")
        if self.param is SweepParam.PMAX and any(v <= 0 for v in self.grid):
            raise ValueError("pmax grid values must be positive")
        if self.mc_trials < 0:
            raise ValueError("mc_trials must be nonnegative")


@dataclass
class SweepRow:
    scenario: str
    receiver: str
    scheme: str
    param: str
    value: float
    omega: float | None
    pd_cf: float | None
    pd_mc: float | None
    pfa_mc: float | None
    status: str
    ms: float


def resolve_scene(source: Scene | str, antennas: int | None = None, seed: int | None = None) -> Scene:
    """Materialize a scene source (builtin name or Scene instance)."""
    if isinstance(source, Scene):
        return source
    kwargs = {}
    if antennas is not None:
        kwargs["antennas"] = antennas
    if seed is not None:
        kwargs["seed"] = seed
    return default_paper_scene(source, **kwargs)


def _rotated_scene(base: Scene, angle_deg: float) -> Scene:
    if base.n_users != 1:
        raise ValueError("rotation sweeps require one CU per cell")
    ang = np.deg2rad(angle_deg)
    cells = tuple(
        (
            Point2D(
                bs.x + ROTATION_RADIUS * np.cos(ang),
                bs.y + ROTATION_RADIUS * np.sin(ang),
            ),
        )
        for bs in base.bs_positions
    )
    return replace(base, cu_positions=cells)


def _scene_at(base: Scene, param: SweepParam, value: float) -> Scene:
    if param is SweepParam.GAMMA:
        return base.with_sinr_db(value)
    if param is SweepParam.PMAX:
        return base.with_p_max(value)
    if param is SweepParam.ROTATION:
        return _rotated_scene(base, value)
    return base  # PFA: the design problem is unchanged


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Solve every (grid point, variant) pair and evaluate detection.

    Infeasible or degenerate points are recorded in the status column and
    never abort the sweep. Monte-Carlo validation (when mc_trials > 0) runs
    at the worst-case target sample with a per-point derived seed.
    """
    base = resolve_scene(spec.scene)
    rows: list[SweepRow] = []
    solve_cache: dict[int, tuple] = {}  # variant index -> (sdr, sol, ch); PFA only
    for gi, value in enumerate(spec.grid):
        scene = _scene_at(base, spec.param, value)
        ch = None
        for vi, variant in enumerate(spec.variants):
            t0 = time.perf_counter()
            status = "optimal"
            omega = pd_cf = pd_mc = pfa_mc = None
            try:
                if spec.param is SweepParam.PFA and vi in solve_cache:
                    sdr, sol, ch = solve_cache[vi]
                else:
                    if ch is None:
                        ch = build_channels(scene)
                    sdr, sol = solve_and_extract(variant, ch, scene)
                    if spec.param is SweepParam.PFA:
                        solve_cache[vi] = (sdr, sol, ch)
                if sol is None:
                    status = sdr.report.status.value
                else:
                    omega = sol.omega
                    p_fa = value if spec.param is SweepParam.PFA else spec.p_fa
                    det = DetectorSpec(p_fa, scene.noise_radar, variant.scenario)
                    pd_cf = detection_probability(omega, det)
                    if spec.mc_trials > 0:
                        include_comm = variant.scheme is not Scheme.SENSING_ONLY
                        _, q_min = min_sample_energy(
                            sol, ch, variant.scenario, include_comm
                        )
                        mc_seed = int(
                            np.random.SeedSequence(
                                spec.seed, spawn_key=(3, gi, vi)
                            ).generate_state(1)[0]
                        )
                        pd_mc, pfa_mc = monte_carlo_detect(
                            sol, ch, q_min, det, spec.mc_trials, mc_seed,
                            include_comm,
                        )
            except (DegenerateExtractionError, DegenerateDirectionError):
                status = "degenerate"
            except ValueError as exc:
                status = f"error:{exc}"
            rows.append(
                SweepRow(
                    scenario=_SCENARIO_CODE[variant.scenario],
                    receiver=_RECEIVER_CODE[variant.receiver],
                    scheme=variant.scheme.value,
                    param=spec.param.column,
                    value=float(value),
                    omega=omega,
                    pd_cf=pd_cf,
                    pd_mc=pd_mc,
                    pfa_mc=pfa_mc,
                    status=status,
                    ms=(time.perf_counter() - t0) * 1e3,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# CSV persistence


def _fmt(x: float | None) -> str:
    return "" if x is None else "%.12g" % x


def write_csv(rows: list[SweepRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                ",".join(
                    [
                        r.scenario,
                        r.receiver,
                        r.scheme,
                        r.param,
                        _fmt(r.value),
                        _fmt(r.omega),
                        _fmt(r.pd_cf),
                        _fmt(r.pd_mc),
                        _fmt(r.pfa_mc),
                        r.status,
                        _fmt(r.ms),
                    ]
                )
                + "\n"
            )


def read_csv(path: str) -> list[SweepRow]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 11:
                raise ValueError(f"malformed CSV row: {line!r}")
            opt = lambda s: None if s == "" else float(s)
            rows.append(
                SweepRow(
                    scenario=parts[0],
                    receiver=parts[1],
                    scheme=parts[2],
                    param=parts[3],
                    value=float(parts[4]),
                    omega=opt(parts[5]),
                    pd_cf=opt(parts[6]),
                    pd_mc=opt(parts[7]),
                    pfa_mc=opt(parts[8]),
                    status=parts[9],
                    ms=float(parts[10]),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Config ingestion

_SCENARIO_FROM_CODE = {1: Scenario.SYNC, 2: Scenario.UNSYNC}
_RECEIVER_FROM_CODE = {1: Receiver.TYPE_I, 2: Receiver.TYPE_II}


def variant_from_dict(data: dict) -> ProblemVariant:
    try:
        scenario = _SCENARIO_FROM_CODE[int(data["scenario"])]
    except KeyError:
        raise ValueError(
            "variant field 'scenario' missing or not in {1, 2}"
        ) from None
    try:
        receiver = _RECEIVER_FROM_CODE[int(data["receiver"])]
    except KeyError:
        raise ValueError(
            "variant field 'receiver' missing or not in {1, 2}"
        ) from None
    scheme = Scheme(data.get("scheme", "proposed"))
    return ProblemVariant(scenario, receiver, scheme)


def sweep_to_dict(spec: SweepSpec) -> dict:
    return {
        "kind": "sweep",
        "scene": spec.scene if isinstance(spec.scene, str) else scene_to_dict(spec.scene),
        "variants": [
            {
                "scenario": int(_SCENARIO_CODE[v.scenario]),
                "receiver": int(_RECEIVER_CODE[v.receiver]),
                "scheme": v.scheme.value,
            }
            for v in spec.variants
        ],
        "param": spec.param.value,
        "grid": list(spec.grid),
        "p_fa": spec.p_fa,
        "mc_trials": spec.mc_trials,
        "seed": spec.seed,
    }


def sweep_from_dict(data: dict) -> SweepSpec:
    for key in ("scene", "variants", "param", "grid"):
        if key not in data:
            raise ValueError(f"config missing required field '{key}' in sweep")
    scene = data["scene"]
    if isinstance(scene, dict):
        scene = scene_from_dict(scene)
    return SweepSpec(
        scene=scene,
        variants=tuple(variant_from_dict(v) for v in data["variants"]),
        param=SweepParam(data["param"]),
        grid=tuple(float(v) for v in data["grid"]),
        p_fa=float(data.get("p_fa", 1e-3)),
        mc_trials=int(data.get("mc_trials", 0)),
        seed=int(data.get("seed", 0)),
    )


def read_config(path: str) -> Scene | SweepSpec:
    """Parse a JSON config file into a Scene or a SweepSpec by its "kind"."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config {path}: invalid JSON at line {exc.lineno}") from exc
    kind = data.get("kind")
    if kind == "scene":
        return scene_from_dict(data)
    if kind == "sweep":
        return sweep_from_dict(data)
    raise ValueError(f"config missing required field 'kind' (scene|sweep) in {path}")


# ---------------------------------------------------------------------------
# Figure families


def all_variants() -> tuple[ProblemVariant, ...]:
    return tuple(
        ProblemVariant(sc, rx, sch)
        for sc in Scenario
        for rx in Receiver
        for sch in Scheme
    )


def figure_sweeps(
    antennas: int = 8,
    seed: int = 0,
    mc_trials: int = 0,
    kappa2: float = 5e-9,
) -> dict[str, SweepSpec]:
    """The four reference sweep families at the requested array size.

    kappa2 is the two-way sensing reference (kappa squared); the default
    keeps closed-form detection probabilities informative (away from 0/1
    saturation) at desk scale.
    """
    def prep(scene: Scene) -> Scene:
        pl = replace(scene.pathloss, kappa=float(np.sqrt(kappa2)))
        return replace(scene, pathloss=pl)

    one_cu = prep(default_paper_scene("one-cu", antennas=antennas, seed=seed))
    rot = prep(default_paper_scene("rotation", antennas=antennas, seed=seed))
    variants = all_variants()
    return {
        "pd_vs_gamma": SweepSpec(
            scene=one_cu,
            variants=variants,
            param=SweepParam.GAMMA,
            grid=(5.0, 10.0, 15.0, 20.0, 25.0),
            mc_trials=mc_trials,
            seed=seed,
        ),
        "pd_vs_pfa": SweepSpec(
            scene=one_cu.with_sinr_db(25.0),
            variants=variants,
            param=SweepParam.PFA,
            grid=(1e-4, 1e-3, 1e-2, 1e-1),
            mc_trials=mc_trials,
            seed=seed,
        ),
        "pd_vs_pmax": SweepSpec(
            scene=one_cu.with_sinr_db(25.0),
            variants=variants,
            param=SweepParam.PMAX,
            grid=(1.0, 4.5, 8.0, 11.5, 15.0),
            mc_trials=mc_trials,
            seed=seed,
        ),
        "pd_vs_angle": SweepSpec(
            scene=rot,
            variants=variants,
            param=SweepParam.ROTATION,
            grid=tuple(float(a) for a in range(0, 361, 30)),
            mc_trials=mc_trials,
            seed=seed,
        ),
    }
