"""End-to-end experiments and their CSV reports.

Every experiment is a pure function of its config: seeds are explicit, digits
are simulated in ascending dataset order, and statistics are reduced in split
order, so reports are byte-identical across runs and thread counts.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import ExperimentConfig
from .encoder import encode, make_mask_family, pump_scale, to_pump
from .errors import ParameterError
from .lattice import connectivity_experiment, evolve_batch, render_camera, response_curve, single_node_roots
from .mnist import downsample, load_dataset, split_indices
from .readout import FeatureMatrix, accuracy, confusion, predict, train_logreg

log = logging.getLogger(__name__)


@dataclass
class Table:
    header: list[str]
    rows: list[list] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass
class ExperimentReport:
    name: str
    tables: dict[str, Table]
    summary: list[str]
    config_text: str = ""
    wall_time: float = 0.0

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for key, table in self.tables.items():
            (out / f"{key}.csv").write_text(table.to_csv())
        (out / "config_echo.ini").write_text(self.config_text)
        lines = [f"experiment: {self.name}"] + self.summary + [f"wall time: {self.wall_time:.1f} s"]
        (out / "summary.txt").write_text("\n".join(lines) + "\n")
        return out


def standard_error(values) -> float:
    """Sample standard deviation over sqrt(m); NaN for fewer than two values."""
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2:
        return float("nan")
    return float(v.std(ddof=1) / math.sqrt(len(v)))


# ---------------------------------------------------------------- inputs


@dataclass(frozen=True)
class Inputs:
    pixels: np.ndarray  # (pool, r*r) downsampled digits
    labels: np.ndarray  # (pool,)
    splits: list[tuple[int, np.ndarray, np.ndarray]]  # (seed, train rows, test rows) into the pool


def prepare_inputs(cfg: ExperimentConfig) -> Inputs:
    """Load, downsample, and restrict to the digits some split actually uses."""
    d = cfg.data
    if d.n_test <= 0:
        raise ParameterError("n_test must be positive: accuracy needs a test set")
    if not d.split_seeds:
        raise ParameterError("data.split_seeds is empty")
    ds = load_dataset(d.images, d.labels)
    raw = [split_indices(len(ds), s, d.n_train, d.n_test) for s in d.split_seeds]
    pool = np.unique(np.concatenate([np.concatenate(pair) for pair in raw]))
    where = np.full(len(ds), -1)
    where[pool] = np.arange(len(pool))
    splits = [(s, where[tr], where[te]) for s, (tr, te) in zip(d.split_seeds, raw)]
    pixels = downsample(ds.images[pool], d.resolution, crop=d.crop).reshape(len(pool), -1)
    return Inputs(pixels, ds.labels[pool], splits)


def evaluate(X, inputs: Inputs, cfg: ExperimentConfig):
    """Train/test the readout on every split; returns (accuracies, summed confusion)."""
    r = cfg.readout
    accs = []
    conf = np.zeros((10, 10), dtype=np.int64)
    for _, tr, te in inputs.splits:
        model = train_logreg(
            FeatureMatrix(X[tr], inputs.labels[tr]),
            l2=r.l2, lr=r.lr, max_iters=r.max_iters, grad_tol=r.grad_tol, solver=r.solver,
        )
        pred = predict(model, X[te])
        accs.append(accuracy(pred, inputs.labels[te]))
        conf += confusion(pred, inputs.labels[te])
    return accs, conf


@dataclass(frozen=True)
class ReservoirOutput:
    features: np.ndarray  # (pool, R*R) camera pixels
    intensities: np.ndarray  # (pool, N, N)
    encoded: np.ndarray  # (pool, N*N)
    converged: np.ndarray  # (pool,) bool
    t_elapsed: np.ndarray


def reservoir_features(pixels, W, cfg: ExperimentConfig, threads: int = 1) -> ReservoirOutput:
    """digit -> W a -> pump -> steady state -> camera image, for every pool digit."""
    p = cfg.lattice
    if W.out_dim != p.N * p.N:
        raise ParameterError(f"projection has {W.out_dim} outputs for a {p.N}x{p.N} lattice")
    b = encode(pixels, W)
    s = pump_scale(float(b.max()), cfg.encoder.p_peak, cfg.p0)
    pump = to_pump(b, cfg.p0, s, p.N)
    ss = evolve_batch(pump.drive, p, threads=threads)
    img = render_camera(ss.intensity, cfg.camera.resolution, cfg.camera.sigma)
    return ReservoirOutput(img.reshape(len(img), -1), ss.intensity, b, ss.converged, ss.t_elapsed)


def _masks(cfg: ExperimentConfig, k: int):
    n_nodes = cfg.lattice.N ** 2
    return make_mask_family(cfg.encoder.mask_seed, k, cfg.in_dim, n_nodes, cfg.encoder.density)


def _accuracy_rows(table: Table, name: str, inputs: Inputs, accs) -> None:
    for (seed, _, _), a in zip(inputs.splits, accs):
        table.rows.append([name, seed, a])


def _summary_row(table: Table, name: str, accs, extra=()) -> None:
    table.rows.append([name, len(accs), float(np.mean(accs)), standard_error(accs), *extra])


def _confusion_table(conf) -> Table:
    t = Table(["true"] + [f"pred_{k}" for k in range(10)])
    for k in range(10):
        t.rows.append([k] + conf[k].tolist())
    return t


def _sizes(cfg):
    return f"{cfg.data.n_train}:{cfg.data.n_test}"


# ----------------------------------------------------------- experiments


def run_baseline(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Logistic regression on the downsampled digits and, optionally, on W a."""
    inputs = prepare_inputs(cfg)
    runs = Table(["features", "split_seed", "accuracy"])
    summary = Table(["features", "splits", "mean_accuracy", "standard_error"])
    sets = {"pixels": inputs.pixels}
    if cfg.experiment.encoded_baseline:
        sets["encoded"] = encode(inputs.pixels, _masks(cfg, 1)[0])
    conf = None
    text = []
    for name, X in sets.items():
        accs, c = evaluate(X, inputs, cfg)
        conf = c if conf is None else conf
        _accuracy_rows(runs, name, inputs, accs)
        _summary_row(summary, name, accs)
        text.append(f"{name}: {np.mean(accs):.4f} +/- {standard_error(accs):.4f} "
                    f"({cfg.data.resolution}x{cfg.data.resolution}, {_sizes(cfg)})")
    return ExperimentReport("baseline", {"runs": runs, "summary": summary, "confusion": _confusion_table(conf)}, text)


def run_reservoir(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Reservoir readout next to the matched pixel and encoded-input baselines."""
    inputs = prepare_inputs(cfg)
    W = _masks(cfg, 1)[0]
    res = reservoir_features(inputs.pixels, W, cfg, threads)
    runs = Table(["features", "split_seed", "accuracy"])
    summary = Table(["features", "splits", "mean_accuracy", "standard_error"])
    results = {}
    conf = None
    for name, X in (("pixels", inputs.pixels), ("encoded", res.encoded), ("reservoir", res.features)):
        accs, c = evaluate(X, inputs, cfg)
        results[name] = accs
        if name == "reservoir":
            conf = c
        _accuracy_rows(runs, name, inputs, accs)
        _summary_row(summary, name, accs)
    sim = Table(["pool_index", "converged", "t_elapsed"])
    for i, (ok, t) in enumerate(zip(res.converged, res.t_elapsed)):
        sim.rows.append([i, int(ok), float(t)])
    gain = np.mean(results["reservoir"]) - np.mean(results["pixels"])
    text = [
        f"{name}: {np.mean(a):.4f} +/- {standard_error(a):.4f}" for name, a in results.items()
    ] + [
        f"reservoir gain over pixel baseline: {100 * gain:+.2f} points",
        f"steady states converged: {int(res.converged.sum())}/{len(res.converged)}",
    ]
    return ExperimentReport(
        "reservoir",
        {"runs": runs, "summary": summary, "confusion": _confusion_table(conf), "simulation": sim},
        text,
    )


def run_ensemble(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Concatenate camera features from k masks; accuracy vs number of masks."""
    k = cfg.encoder.masks
    if k < 1:
        raise ParameterError("ensemble needs encoder.masks >= 1")
    inputs = prepare_inputs(cfg)
    feats = []
    n_conv = 0
    for i, W in enumerate(_masks(cfg, k)):
        log.info("mask %d/%d (seed %s)", i + 1, k, W.seed)
        res = reservoir_features(inputs.pixels, W, cfg, threads)
        feats.append(res.features)
        n_conv += int(res.converged.sum())
    base, _ = evaluate(inputs.pixels, inputs, cfg)
    runs = Table(["masks", "split_seed", "accuracy"])
    curve = Table(["masks", "features", "splits", "mean_accuracy", "standard_error", "gain_over_pixels"])
    conf = None
    means = []
    for m in range(1, k + 1):
        accs, conf = evaluate(np.hstack(feats[:m]), inputs, cfg)
        for (seed, _, _), a in zip(inputs.splits, accs):
            runs.rows.append([m, seed, a])
        curve.rows.append([m, sum(f.shape[1] for f in feats[:m]), len(accs), float(np.mean(accs)),
                           standard_error(accs), float(np.mean(accs) - np.mean(base))])
        means.append(float(np.mean(accs)))
    baseline = Table(["features", "splits", "mean_accuracy", "standard_error"])
    _summary_row(baseline, "pixels", base)
    text = [f"pixels baseline: {np.mean(base):.4f} +/- {standard_error(base):.4f}"]
    text += [f"{m} mask(s): {a:.4f}" for m, a in enumerate(means, 1)]
    text += [f"ensemble gain over single mask: {100 * (means[-1] - means[0]):+.2f} points",
             f"steady states converged: {n_conv}/{k * len(inputs.labels)}"]
    return ExperimentReport(
        "ensemble",
        {"runs": runs, "curve": curve, "baseline": baseline, "confusion": _confusion_table(conf)},
        text,
    )


def run_curve(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    """Up and down power sweeps plus the single-node root count at each power."""
    p = cfg.lattice
    powers = list(cfg.experiment.curve_powers)
    up = response_curve(p, powers, "up")
    down = response_curve(p, powers, "down")
    t = Table(["power", "up_intensity", "down_intensity", "single_node_roots"])
    for (P, a), (_, b) in zip(up, down):
        t.rows.append([P, a, b, len(single_node_roots(p, P)) if p.N == 1 else ""])
    hyst = [P for (P, a), (_, b) in zip(up, down) if abs(a - b) > 1e-6 * max(1.0, abs(a))]
    text = [f"{len(powers)} powers, lattice {p.N}x{p.N}, detuning {p.delta}"]
    if hyst:
        text.append(f"hysteresis between powers {min(hyst)} and {max(hyst)}")
    return ExperimentReport("curve", {"curve": t}, text)


def run_connectivity(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    res = connectivity_experiment(cfg.lattice, cfg.experiment.connectivity_powers)
    t = Table(["power", "probe_all_neighbors", "probe_second_neighbors_only", "ratio"])
    for row in zip(res.powers, res.all_neighbors, res.second_only, res.ratio):
        t.rows.append([float(v) for v in row])
    ratio = res.ratio[np.isfinite(res.ratio)]
    text = [f"probe node {res.probe}"]
    if len(ratio):
        text.append(f"second-only / all-neighbors ratio: {ratio.min():.3f} .. {ratio.max():.3f} (mean {ratio.mean():.3f})")
    return ExperimentReport("connectivity", {"connectivity": t}, text)


def run_sweep(cfg: ExperimentConfig, threads: int = 1, axis: str | None = None, values=None) -> ExperimentReport:
    """Re-run the reservoir experiment for each value of one ``section.key`` parameter."""
    axis = axis or cfg.experiment.sweep_axis
    values = list(values if values is not None else cfg.experiment.sweep_values)
    cfg.replace(axis, values[0] if values else 0)  # validates the axis name up front
    t = Table([axis, "pixels_accuracy", "reservoir_accuracy", "reservoir_standard_error", "converged_fraction"])
    text = []
    for v in values:
        rep = run_reservoir(cfg.replace(axis, v), threads)
        s = {row[0]: row for row in rep.tables["summary"].rows}
        sim = rep.tables["simulation"].rows
        conv = sum(r[1] for r in sim) / len(sim)
        t.rows.append([v, s["pixels"][2], s["reservoir"][2], s["reservoir"][3], conv])
        text.append(f"{axis}={v}: reservoir {s['reservoir'][2]:.4f} vs pixels {s['pixels'][2]:.4f}")
    return ExperimentReport("sweep", {"sweep": t}, text)


RUNNERS = {
    "baseline": run_baseline,
    "reservoir": run_reservoir,
    "ensemble": run_ensemble,
    "curve": run_curve,
    "connectivity": run_connectivity,
    "sweep": run_sweep,
}


def run(cfg: ExperimentConfig, mode: str | None = None, threads: int = 1, config_text: str | None = None):
    mode = mode or cfg.experiment.mode
    if mode not in RUNNERS:
        raise ParameterError(f"unknown experiment {mode!r}")
    start = time.perf_counter()
    report = RUNNERS[mode](cfg, threads=threads)
    report.wall_time = time.perf_counter() - start
    report.config_text = config_text if config_text is not None else config_mod.emit(cfg)
    return report
