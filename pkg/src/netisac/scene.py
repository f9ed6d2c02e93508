"""Problem instances: geometry layout, channel vectors, and sensing links.

A Scene holds everything a solve needs (positions, powers, noise, targets);
build_channels turns it into a ChannelSet with concrete channel vectors and
per-sample sensing link parameters. Channel draws use numpy's PCG64 with
per-link spawned substreams, so results are independent of draw order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    ArraySpec,
    Point2D,
    SensingLinkParams,
    angle_from,
    comm_pathloss,
    round_trip_pathloss,
    steering_vector,
)

RAYLEIGH = "rayleigh"
LOS = "los"

#: Base-station coordinates of the reference three-cell layout, meters.
REFERENCE_BS = (
    Point2D(80.0, 0.0),
    Point2D(-40.0, 40.0 * np.sqrt(3.0)),
    Point2D(-40.0, -40.0 * np.sqrt(3.0)),
)

#: Fixed single-CU-per-cell positions of the reference layout, meters.
REFERENCE_CUS = (
    Point2D(38.85, -20.97),
    Point2D(-1.26, 44.13),
    Point2D(-37.58, -23.16),
)


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class PathlossParams:
    """Path-loss constants for the sensing and communication links.

    Sensing round trip: beta = kappa^2 * d_ref^4 / (d_tx^2 * d_rx^2).
    Communication: mu = kappa_hat * (d0 / d)^nu.
    """

    kappa: float = 1e-3
    d_ref: float = 1.0
    kappa_hat: float = 1e-3
    d0: float = 1.0
    nu: float = 3.0


@dataclass(frozen=True, eq=False)
class Scene:
    """Full problem instance for one network layout."""

    bs_positions: tuple[Point2D, ...]
    arrays: ArraySpec
    cu_positions: tuple[tuple[Point2D, ...], ...]
    noise_comm: float
    noise_radar: float
    p_max: float
    sinr_targets: np.ndarray  # (L, K), linear
    rcs: np.ndarray  # (L, L); rcs[m, l] is the amplitude on link l -> target -> m
    pathloss: PathlossParams
    target_samples: tuple[Point2D, ...]
    channel_model: str = RAYLEIGH
    rng_seed: int = 0

    def __post_init__(self) -> None:
        L = len(self.bs_positions)
        if L < 1:
            raise ValueError("need at least one base station")
        if len(self.cu_positions) != L:
            raise ValueError("cu_positions must list one tuple per cell")
        K = len(self.cu_positions[0])
        if K < 1 or any(len(cell) != K for cell in self.cu_positions):
            raise ValueError("every cell must serve the same number K >= 1 of CUs")
        if min(self.noise_comm, self.noise_radar, self.p_max) <= 0:
            raise ValueError("noise powers and power budget must be positive")
        if not self.target_samples:
            raise ValueError("target_samples must be nonempty")
        targets = np.asarray(self.sinr_targets, dtype=float)
        if targets.shape != (L, K) or np.any(targets <= 0):
            raise ValueError("sinr_targets must be a positive (L, K) array")
        object.__setattr__(self, "sinr_targets", targets)
        rcs = np.asarray(self.rcs, dtype=float)
        if rcs.shape != (L, L):
            raise ValueError("rcs must be an (L, L) array")
        object.__setattr__(self, "rcs", rcs)
        if self.channel_model not in (RAYLEIGH, LOS):
            raise ValueError(f"unknown channel model {self.channel_model!r}")

    @property
    def n_cells(self) -> int:
        return len(self.bs_positions)

    @property
    def n_users(self) -> int:
        return len(self.cu_positions[0])

    @property
    def n_samples(self) -> int:
        return len(self.target_samples)

    def with_sinr_db(self, gamma_db: float) -> "Scene":
        """Copy with a common per-CU SINR target given in dB."""
        targets = np.full((self.n_cells, self.n_users), db_to_linear(gamma_db))
        return replace(self, sinr_targets=targets)

    def with_p_max(self, p_max: float) -> "Scene":
        return replace(self, p_max=p_max)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Concrete channels and sensing parameters for one Scene.

    h[l, m, k] is the length-N_t channel from BS l to CU k of cell m.
    For target sample q: theta[q, l] is the angle from BS l, beta[q, m, l]
    the round-trip loss of link l -> sample -> m, steer_tx / steer_rx the
    transmit/receive steering vectors, and steer_gram[q, l] the conjugate
    outer product conj(a) a^T whose quadratic form w^H A w = |a^T w|^2 is
    the transmit beampattern gain toward the sample.
    """

    scene: Scene
    h: np.ndarray  # (L, L, K, N_t) complex
    theta: np.ndarray  # (Q, L)
    beta: np.ndarray  # (Q, L, L); beta[q, m, l]
    zeta: np.ndarray  # (L, L); zeta[m, l]
    steer_tx: np.ndarray  # (Q, L, N_t) complex
    steer_rx: np.ndarray  # (Q, L, N_r) complex
    steer_gram: np.ndarray  # (Q, L, N_t, N_t) complex

    @property
    def n_cells(self) -> int:
        return self.h.shape[0]

    @property
    def n_users(self) -> int:
        return self.h.shape[2]

    @property
    def n_samples(self) -> int:
        return self.theta.shape[0]

    def link_params(self, q: int, m: int, l: int) -> SensingLinkParams:
        """Echo-link parameters for transmitter l, receiver m, sample q."""
        return SensingLinkParams(
            beta=float(self.beta[q, m, l]),
            zeta=float(self.zeta[m, l]),
            theta_tx=float(self.theta[q, l]),
            theta_rx=float(self.theta[q, m]),
        )


def _channel_rng(seed: int, l: int, m: int, k: int) -> np.random.Generator:
    # Spawn-keyed substream: draws for one link never depend on the others.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, l, m, k)))


def build_channels(scene: Scene) -> ChannelSet:
    """Instantiate channel vectors and the sensing grid for a Scene."""
    L, K = scene.n_cells, scene.n_users
    nt, nr = scene.arrays.n_tx, scene.arrays.n_rx
    ratio = scene.arrays.spacing_ratio
    pl = scene.pathloss

    h = np.zeros((L, L, K, nt), dtype=complex)
    for l, bs in enumerate(scene.bs_positions):
        for m in range(L):
            for k, cu in enumerate(scene.cu_positions[m]):
                d = bs.distance_to(cu)
                if d == 0.0:
                    raise ValueError(f"CU ({m},{k}) coincides with BS {l}")
                mu = comm_pathloss(d, pl.kappa_hat, pl.d0, pl.nu)
                if scene.channel_model == LOS:
                    a = steering_vector(angle_from(bs, cu), nt, ratio)
                    h[l, m, k] = np.sqrt(mu) * np.conj(a)
                else:
                    g = _channel_rng(scene.rng_seed, l, m, k)
                    raw = g.standard_normal(nt) + 1j * g.standard_normal(nt)
                    h[l, m, k] = np.sqrt(mu / 2.0) * raw

    Q = scene.n_samples
    theta = np.zeros((Q, L))
    beta = np.zeros((Q, L, L))
    steer_tx = np.zeros((Q, L, nt), dtype=complex)
    steer_rx = np.zeros((Q, L, nr), dtype=complex)
    gram = np.zeros((Q, L, nt, nt), dtype=complex)
    for q, sample in enumerate(scene.target_samples):
        dists = np.array([bs.distance_to(sample) for bs in scene.bs_positions])
        for l, bs in enumerate(scene.bs_positions):
            theta[q, l] = angle_from(bs, sample)
            a_t = steering_vector(theta[q, l], nt, ratio)
            steer_tx[q, l] = a_t
            steer_rx[q, l] = steering_vector(theta[q, l], nr, ratio)
            gram[q, l] = np.outer(np.conj(a_t), a_t)
        for m in range(L):
            for l in range(L):
                beta[q, m, l] = round_trip_pathloss(
                    dists[l], dists[m], pl.kappa, pl.d_ref
                )

    return ChannelSet(
        scene=scene,
        h=h,
        theta=theta,
        beta=beta,
        zeta=scene.rcs.copy(),
        steer_tx=steer_tx,
        steer_rx=steer_rx,
        steer_gram=gram,
    )


def _sample_grid(half_width: float = 1.0, per_side: int = 3) -> tuple[Point2D, ...]:
    axis = np.linspace(-half_width, half_width, per_side)
    return tuple(Point2D(float(x), float(y)) for y in axis for x in axis)


def default_paper_scene(
    variant: str,
    antennas: int = 32,
    rotation_deg: float = 0.0,
    seed: int = 0,
    users_per_cell: int = 3,
) -> Scene:
    """Reference three-cell layouts used throughout the experiments.

    Variants:
      "one-cu"   three cells, one Rayleigh-faded CU each, at fixed positions;
      "three-cu" three cells, `users_per_cell` Rayleigh CUs each, placed
                 pseudo-randomly (seeded) in an annulus around their BS;
      "rotation" one LoS CU per cell at 45 m and common angle `rotation_deg`.

    Noise floors are -84 dBm (communication) and -102 dBm (radar),
    converted to watts. The detection area is a 2 m x 2 m square at the
    origin sampled on a uniform 3 x 3 grid.
    """
    arrays = ArraySpec(n_tx=antennas, n_rx=antennas)
    common = dict(
        bs_positions=REFERENCE_BS,
        arrays=arrays,
        noise_comm=dbm_to_watt(-84.0),
        noise_radar=dbm_to_watt(-102.0),
        pathloss=PathlossParams(),
        target_samples=_sample_grid(),
        rcs=np.ones((3, 3)),
        rng_seed=seed,
    )
    if variant == "one-cu":
        return Scene(
            cu_positions=tuple((cu,) for cu in REFERENCE_CUS),
            p_max=15.0,
            sinr_targets=np.full((3, 1), db_to_linear(25.0)),
            channel_model=RAYLEIGH,
            **common,
        )
    if variant == "three-cu":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
        cells = []
        for bs in REFERENCE_BS:
            cus = []
            for _ in range(users_per_cell):
                r = rng.uniform(20.0, 60.0)
                ang = rng.uniform(0.0, 2.0 * np.pi)
                cus.append(Point2D(bs.x + r * np.cos(ang), bs.y + r * np.sin(ang)))
            cells.append(tuple(cus))
        return Scene(
            cu_positions=tuple(cells),
            p_max=15.0,
            sinr_targets=np.full((3, users_per_cell), db_to_linear(15.0)),
            channel_model=RAYLEIGH,
            **common,
        )
    if variant == "rotation":
        ang = np.deg2rad(rotation_deg)
        cells = tuple(
            (Point2D(bs.x + 45.0 * np.cos(ang), bs.y + 45.0 * np.sin(ang)),)
            for bs in REFERENCE_BS
        )
        return Scene(
            cu_positions=cells,
            p_max=12.0,
            sinr_targets=np.full((3, 1), db_to_linear(30.0)),
            channel_model=LOS,
            **common,
        )
    raise ValueError(f"unknown scene variant {variant!r}")


# ---------------------------------------------------------------------------
# JSON serialization


def scene_to_dict(scene: Scene) -> dict:
    return {
        "kind": "scene",
        "bs_positions": [[p.x, p.y] for p in scene.bs_positions],
        "arrays": {
            "n_tx": scene.arrays.n_tx,
            "n_rx": scene.arrays.n_rx,
            "spacing_ratio": scene.arrays.spacing_ratio,
        },
        "cu_positions": [[[p.x, p.y] for p in cell] for cell in scene.cu_positions],
        "noise_comm": scene.noise_comm,
        "noise_radar": scene.noise_radar,
        "p_max": scene.p_max,
        "sinr_targets": scene.sinr_targets.tolist(),
        "rcs": scene.rcs.tolist(),
        "pathloss": {
            "kappa": scene.pathloss.kappa,
            "d_ref": scene.pathloss.d_ref,
            "kappa_hat": scene.pathloss.kappa_hat,
            "d0": scene.pathloss.d0,
            "nu": scene.pathloss.nu,
        },
        "target_samples": [[p.x, p.y] for p in scene.target_samples],
        "channel_model": scene.channel_model,
        "rng_seed": scene.rng_seed,
    }


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ValueError(f"config missing required field '{key}' in {where}")
    return mapping[key]


def scene_from_dict(data: dict) -> Scene:
    arrays = _require(data, "arrays", "scene")
    pl = _require(data, "pathloss", "scene")
    return Scene(
        bs_positions=tuple(
            Point2D(*xy) for xy in _require(data, "bs_positions", "scene")
        ),
        arrays=ArraySpec(
            n_tx=int(_require(arrays, "n_tx", "scene.arrays")),
            n_rx=int(_require(arrays, "n_rx", "scene.arrays")),
            spacing_ratio=float(arrays.get("spacing_ratio", 0.5)),
        ),
        cu_positions=tuple(
            tuple(Point2D(*xy) for xy in cell)
            for cell in _require(data, "cu_positions", "scene")
        ),
        noise_comm=float(_require(data, "noise_comm", "scene")),
        noise_radar=float(_require(data, "noise_radar", "scene")),
        p_max=float(_require(data, "p_max", "scene")),
        sinr_targets=np.asarray(_require(data, "sinr_targets", "scene"), dtype=float),
        rcs=np.asarray(_require(data, "rcs", "scene"), dtype=float),
        pathloss=PathlossParams(
            kappa=float(_require(pl, "kappa", "scene.pathloss")),
            d_ref=float(_require(pl, "d_ref", "scene.pathloss")),
            kappa_hat=float(_require(pl, "kappa_hat", "scene.pathloss")),
            d0=float(_require(pl, "d0", "scene.pathloss")),
            nu=float(_require(pl, "nu", "scene.pathloss")),
        ),
        target_samples=tuple(
            Point2D(*xy) for xy in _require(data, "target_samples", "scene")
        ),
        channel_model=str(data.get("channel_model", RAYLEIGH)),
        rng_seed=int(data.get("rng_seed", 0)),
    )


def save_scene(scene: Scene, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)


def load_scene(path: str) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh))
