"""Closed-loop and open-loop experiment drivers, telemetry and summaries."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..mrac import (GainSet, control_law, ideal_gains, lyapunov_value, tracking_error, ultimate_bound,
                    update_gains)
from ..neuro.excitation import generate_excitation
from ..neuro.lstm import LstmParams
from ..neuro.regressor import History, build_regressor, N_U_LAGS
from ..neuro.training import WindowPredictor, approximation_error, make_dataset, split, train
from ..plant import PlantState, step_plant, true_f
from ..refmodel import RefModel, forced_response
from ..vision.pipeline import PoseMeter
from ..vision.scene import state_to_pose, synth_scene
from .config import ExperimentConfig

AXES = ("z", "pitch", "roll")

TELEMETRY_COLUMNS = (
    ["t"] + [f"y_{a}" for a in AXES] + [f"ym_{a}" for a in AXES] + [f"r_{a}" for a in AXES]
    + [f"e_{a}" for a in AXES] + [f"u{i}" for i in range(6)] + [f"fhat{i}" for i in range(6)]
    + [f"ftrue{i}" for i in range(6)] + ["V", "Ky_norm", "Kr_norm", "saturation_fraction"]
)

DATASET_COLUMNS = ["t"] + [f"u{i}" for i in range(6)] + [f"y_{a}" for a in AXES] + [f"ftrue{i}" for i in range(6)]


def _fmt(row) -> str:
    return ",".join(format(float(v), ".17g") for v in row)


def write_csv(path, columns, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(_fmt(row) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


@dataclass
class RunSummary:
    kind: str
    final_state: list
    final_error: float
    steady_state_error: float
    steady_state_axis_error: list
    rise_time: dict
    overshoot: dict
    bound: float
    saturation_fraction: float
    max_dV_outside_bound: float
    ticks: int
    wall_time: float
    telemetry: str | None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def rise_time(t, y, y0: float, y1: float, lo: float = 0.1, hi: float = 0.9) -> float:
    """Time to go from ``lo`` to ``hi`` of the step ``y0 -> y1`` (first crossings); NaN if never reached."""
    step = y1 - y0
    if step == 0:
        return float("nan")
    frac = (np.asarray(y) - y0) / step
    above_lo = np.flatnonzero(frac >= lo)
    above_hi = np.flatnonzero(frac >= hi)
    if len(above_lo) == 0 or len(above_hi) == 0:
        return float("nan")
    return float(t[above_hi[0]] - t[above_lo[0]])


def overshoot(y, y0: float, y1: float) -> float:
    """Peak excursion past ``y1`` as a fraction of the step size."""
    step = y1 - y0
    if step == 0:
        return 0.0
    return float(max(0.0, np.max((np.asarray(y) - y1) / step)))


class _Sensor:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.meter = PoseMeter(cfg.vision) if cfg.sensing == "vision" else None

    def __call__(self, y_true: np.ndarray, tick: int, direct: bool = False) -> np.ndarray:
        if self.meter is None or direct:
            return y_true.copy()
        scene = synth_scene(state_to_pose(y_true, self.cfg.vision.scene), noise_sigma=self.cfg.noise_sigma,
                            clutter=self.cfg.clutter, seed=self.cfg.seed * 1_000_003 + tick, cfg=self.cfg.vision.scene)
        return self.meter.measure(scene.cloud).state


def _f_hat_source(cfg: ExperimentConfig):
    if cfg.f_hat == "network":
        params = LstmParams.load(cfg.network_path())
        return WindowPredictor(params, cfg.train.seq_len, cfg.mc_dropout, cfg.seed)
    return None


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> tuple[RunSummary, np.ndarray]:
    """Closed-loop run: settle at the start pose, then track the waypoint schedule for ``cfg.duration``.

    Returns the summary and the telemetry array (columns ``TELEMETRY_COLUMNS``, one row per tick from t = 0).
    """
    wall0 = time.perf_counter()
    pp, cc, dt = cfg.plant, cfg.controller, cfg.dt
    n_settle = int(round(cfg.settle / dt))
    n_run = int(round(cfg.duration / dt))
    Lambda_abs = np.abs(pp.Lambda)
    ref = RefModel(A_m=cc.A_m)
    K_y_star, K_r_star = ideal_gains(pp.A, pp.B, pp.Lambda, ref.A_m, ref.B_m)
    gains = cc.initial_gains()
    if cfg.gain_preset == "ideal":
        gains = GainSet(K_y_star.copy(), K_r_star.copy(), gains.Gamma_y, gains.Gamma_r)
    bound = ultimate_bound(cc, pp.Lambda)
    sense = _Sensor(cfg)
    predictor = _f_hat_source(cfg)
    history = History(maxlen=N_U_LAGS + cfg.train.d + 2)

    state = PlantState(np.array(cfg.start, dtype=float), t=-n_settle * dt)
    start = np.array(cfg.start)
    y_m = start.copy()
    rows = []
    saturated = 0
    u_total = 0
    max_dV = -np.inf
    prev = None  # (V, ||e||) of the previous tick
    for k in range(-n_settle, n_run + 1):
        t = k * dt
        in_run = k >= 0
        y = sense(state.y, k, direct=not in_run)
        if k == 0:
            y_m = y.copy()  # the reference model starts at the measured pose
        pose_ref = cfg.reference_at(t) if in_run else start
        r = np.repeat(pose_ref, 2)
        history.append(y)
        f_true = true_f(pp, state.y)
        if cfg.f_hat == "oracle":
            f_hat = f_true
        elif predictor is not None and len(history) >= cfg.train.d + N_U_LAGS:
            f_hat = predictor(build_regressor(history, cfg.train.d))
        else:
            f_hat = np.zeros(6)
        e = tracking_error(y, y_m)
        u_raw = control_law(gains, y, r, f_hat, clamp=False)
        u = np.clip(u_raw, 0.0, 1.0)
        sat = np.count_nonzero(u_raw != u)
        history.set_last_u(u)
        if in_run:
            V = lyapunov_value(cc, e, K_y_star - gains.K_y, K_r_star - gains.K_r, Lambda_abs,
                               gains.Gamma_y, gains.Gamma_r)
            en = float(np.linalg.norm(e))
            if prev is not None and prev[1] > bound:
                max_dV = max(max_dV, V - prev[0])
            prev = (V, en)
            saturated += sat
            u_total += 6
            Ky, Kr = gains.norms()
            rows.append(np.concatenate([[t], y, y_m, pose_ref, e, u, f_hat, f_true, [V, Ky, Kr, sat / 6.0]]))
        if k == n_run:
            break
        gains = update_gains(cc, gains, e, y, r, dt)
        state = step_plant(pp, state, u, dt)
        y_m = forced_response(ref, y_m, r, dt)

    tel = np.array(rows)
    summary = summarize(cfg, tel, bound, max_dV, time.perf_counter() - wall0)
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.json")
        path = out / "telemetry.csv"
        write_csv(path, TELEMETRY_COLUMNS, tel)
        summary.telemetry = str(path)
        # wall time is the only nondeterministic field; keep it out of the reproducible artifacts
        (out / "summary.json").write_text(json.dumps({k: v for k, v in summary.to_dict().items() if k != "wall_time"},
                                                     indent=2, sort_keys=True) + "\n")
    return summary, tel


def summarize(cfg: ExperimentConfig, tel: np.ndarray, bound: float, max_dV: float, wall: float) -> RunSummary:
    col = {c: i for i, c in enumerate(TELEMETRY_COLUMNS)}
    t = tel[:, 0]
    Y = tel[:, col["y_z"]:col["y_z"] + 3]
    E = tel[:, col["e_z"]:col["e_z"] + 3]
    last = t >= t[-1] - 10.0 + 1e-9
    target = cfg.reference_at(t[-1])
    start = np.array(cfg.start)
    rt, ov = {}, {}
    for i, a in enumerate(AXES):
        rt[a] = rise_time(t, Y[:, i], start[i], target[i])
        ov[a] = overshoot(Y[:, i], start[i], target[i])
    en = np.linalg.norm(E, axis=1)
    return RunSummary(
        kind=cfg.kind,
        final_state=Y[-1].tolist(),
        final_error=float(en[-1]),
        steady_state_error=float(np.max(en[last])),
        steady_state_axis_error=np.max(np.abs(E[last]), axis=0).tolist(),
        rise_time=rt,
        overshoot=ov,
        bound=float(bound),
        saturation_fraction=float(np.mean(tel[:, col["saturation_fraction"]])),
        max_dV_outside_bound=float(max_dV),
        ticks=len(tel),
        wall_time=float(wall),
        telemetry=None,
    )


def capture_dataset(cfg: ExperimentConfig, write: bool = True) -> np.ndarray:
    """Open-loop excitation run from the start pose; rows ``(t, u[6], y[3], f_true[6])``, one per tick."""
    dt = cfg.dt
    U = generate_excitation(cfg.excitation_duration, cfg.seed, dt)
    state = PlantState(np.array(cfg.start, dtype=float))
    rows = np.empty((len(U), len(DATASET_COLUMNS)))
    for k, u in enumerate(U):
        rows[k, 0] = k * dt
        rows[k, 1:7] = u
        rows[k, 7:10] = state.y
        rows[k, 10:16] = true_f(cfg.plant, state.y)
        state = step_plant(cfg.plant, state, u, dt)
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.json")
        write_csv(out / "dataset.csv", DATASET_COLUMNS, rows)
    return rows


def train_network(cfg: ExperimentConfig, rows: np.ndarray | None = None, write: bool = True):
    """Train the approximator on a capture (``rows`` or ``cfg.dataset``, else a fresh capture)."""
    if rows is None:
        rows = read_csv(cfg.dataset)[1] if cfg.dataset else capture_dataset(cfg, write=False)
    ds = make_dataset(rows[:, 7:10], rows[:, 1:7], rows[:, 10:16], cfg.train.d, cfg.train.target)
    params, report = train(ds, cfg.train)
    _, held = split(ds, cfg.train.val_fraction)
    info = report.to_dict()
    info["val_reduction"] = report.val_reduction
    if cfg.train.target == "f_true":
        info["sup_error_heldout"] = approximation_error(params, held.Phi, held.target, cfg.train.seq_len)
        info["eps_max"] = cfg.controller.eps_max
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.json")
        params.save(out / "network.npz")
        (out / "train_report.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    return params, info


def vision_demo(cfg: ExperimentConfig, pose_state=None, cloud_path=None, write: bool = True) -> dict:
    """Render (or load) one cloud and run the pose pipeline on it."""
    from ..vision.segmentation import load_cloud, save_cloud

    meter = PoseMeter(cfg.vision)
    truth = None
    if cloud_path is not None:
        cloud = load_cloud(cloud_path)
    else:
        truth = np.array(cfg.start if pose_state is None else pose_state, dtype=float)
        cloud = synth_scene(state_to_pose(truth, cfg.vision.scene), noise_sigma=cfg.noise_sigma,
                            clutter=cfg.clutter, seed=cfg.seed, cfg=cfg.vision.scene).cloud
    m = meter.measure(cloud)
    result = {"measured": m.state.tolist(), "face_points": m.face_size, "face_centroid": m.face_centroid.tolist()}
    if truth is not None:
        result["truth"] = truth.tolist()
        result["error"] = (m.state - truth).tolist()
    if write:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if cloud_path is None:
            save_cloud(out / "scene.xyz", cloud)
        (out / "vision.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return result


def emit_plot_data(telemetry_path, out_dir=None) -> list[Path]:
    """Write ``<axis>.csv`` files with columns ``t, y, y_m, r`` next to the telemetry (or in ``out_dir``)."""
    telemetry_path = Path(telemetry_path)
    header, data = read_csv(telemetry_path)
    col = {c: i for i, c in enumerate(header)}
    out = Path(out_dir) if out_dir else telemetry_path.parent
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for a in AXES:
        path = out / f"{a}.csv"
        cols = [col["t"], col[f"y_{a}"], col[f"ym_{a}"], col[f"r_{a}"]]
        write_csv(path, ["t", "y", "y_m", "r"], data[:, cols])
        paths.append(path)
    return paths
