"""Panel rendering for experiment CSVs.

Reads the artifacts written by the experiment harness (learning curves,
sweep summaries, evaluation trajectories, exact-solver overlays) and
regenerates the standard three figure layouts.  Nothing is recomputed:
every plotted series comes straight from a CSV column, and each figure is
accompanied by a manifest listing the series names with sha256 digests of
the plotted data, so re-rendering the same inputs is verifiable.
"""

import hashlib
import json
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

LAYOUTS = ("fig1", "fig2", "fig3")

CURVE_COLUMNS = {"episode", "total_reward", "delta_d", "sigma"}
SWEEP_COLUMNS = {"lambda_f", "delta_d", "sigma_min", "oracle_sigma",
                 "converged"}
TRAJ_CLASSICAL = {"t", "p_minus", "epsilon", "lam", "d_sigma", "sigma_cum"}
TRAJ_QUANTUM = {"t", "bloch_x", "bloch_y", "bloch_z", "epsilon", "lam",
                "d_sigma", "sigma_cum"}
ORACLE_COLUMNS = {"t", "p", "lambda_star", "d_sigma"}

MAX_DRAWN_POINTS = 20_000


class SchemaError(ValueError):
    """An input CSV does not match the harness column contract."""


@dataclass
class FigureSpec:
    """What to render: layout id, input files, output path, overlay flag.

    inputs holds 'curve' and 'sweep' paths plus 'trajectories' and
    (optionally) 'oracles' dicts keyed by the target label.
    """
    layout: str
    out: str
    inputs: dict
    overlay_oracle: bool = True

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise SchemaError(f"unknown layout {self.layout!r}; "
                              f"expected one of {LAYOUTS}")

    @staticmethod
    def from_json(path):
        with open(path) as fh:
            raw = json.load(fh)
        known = {"layout", "out", "inputs", "overlay_oracle"}
        unknown = set(raw) - known
        if unknown:
            raise SchemaError(f"unknown spec keys: {sorted(unknown)}")
        return FigureSpec(**raw)


def _read_checked(path, expected, role):
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise SchemaError(f"{role} file missing: {path}")
    except Exception as exc:
        raise SchemaError(f"{role} file unreadable: {path}: {exc}")
    columns = set(frame.columns)
    if isinstance(expected, tuple):  # any of several schemas
        if not any(columns == want for want in expected):
            raise SchemaError(
                f"{role} file {path}: columns {sorted(columns)} match none "
                f"of the accepted schemas")
    elif columns != expected:
        raise SchemaError(
            f"{role} file {path}: columns {sorted(columns)} != expected "
            f"{sorted(expected)}")
    return frame


def _downsample(x, y):
    if len(x) <= MAX_DRAWN_POINTS:
        return np.asarray(x, float), np.asarray(y, float)
    stride = int(np.ceil(len(x) / MAX_DRAWN_POINTS))
    usable = (len(x) // stride) * stride
    xs = np.asarray(x, float)[:usable:stride]
    ys = np.asarray(y, float)[:usable].reshape(-1, stride).mean(axis=1)
    return xs, ys


class _Manifest:
    def __init__(self):
        self.entries = {}

    def add(self, name, *arrays):
        digest = hashlib.sha256()
        for arr in arrays:
            digest.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        self.entries[name] = digest.hexdigest()

    def write(self, path):
        with open(path, "w") as fh:
            for name in sorted(self.entries):
                fh.write(f"{name}\t{self.entries[name]}\n")


def _panel_curve(ax, manifest, curve):
    x, y = _downsample(curve["episode"].to_numpy(),
                       curve["total_reward"].to_numpy())
    ax.plot(x, y, lw=0.8)
    manifest.add("curve/total_reward", x, y)
    ax.set_xlabel("episode")
    ax.set_ylabel("total reward")


def _panel_sweep(ax, manifest, sweep, overlay):
    lf = sweep["lambda_f"].to_numpy(float)
    dd = sweep["delta_d"].to_numpy(float)
    sig = sweep["sigma_min"].to_numpy(float)
    ax.plot(lf, dd, "o-", label="distance")
    manifest.add("sweep/delta_d", lf, dd)
    twin = ax.twinx()
    twin.plot(lf, sig, "s-", color="tab:orange", label="entropy")
    manifest.add("sweep/sigma", lf, sig)
    if overlay and sweep["oracle_sigma"].notna().any():
        mask = sweep["oracle_sigma"].notna().to_numpy()
        twin.plot(lf[mask], sweep["oracle_sigma"].to_numpy(float)[mask],
                  "v--", color="tab:red", label="exact entropy")
        manifest.add("sweep/oracle_sigma", lf[mask],
                     sweep["oracle_sigma"].to_numpy(float)[mask])
    ax.set_xlabel("target control value")
    ax.set_ylabel("final distance")
    twin.set_ylabel("entropy production")


def _panel_series(ax, manifest, frames, column, prefix, ylabel,
                  oracles=None, oracle_column=None):
    for label, frame in frames.items():
        t = frame["t"].to_numpy(float)
        y = frame[column].to_numpy(float)
        ax.plot(t, y, marker=".", ms=3, lw=0.9, label=f"target {label}")
        manifest.add(f"{prefix}/lf={label}/{column}", t, y)
    if oracles:
        for label, frame in oracles.items():
            keep = frame[oracle_column].notna().to_numpy()
            t = frame["t"].to_numpy(float)[keep]
            y = frame[oracle_column].to_numpy(float)[keep]
            ax.plot(t, y, "--", lw=1.0, alpha=0.7)
            manifest.add(f"oracle/lf={label}/{oracle_column}", t, y)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if frames:
        ax.legend(fontsize=6)


def render(spec):
    """Render one figure; returns (image_path, manifest_path)."""
    curve = _read_checked(spec.inputs["curve"], CURVE_COLUMNS, "curve")
    sweep = _read_checked(spec.inputs["sweep"], SWEEP_COLUMNS, "sweep")
    traj_schema = TRAJ_CLASSICAL if spec.layout == "fig1" else TRAJ_QUANTUM
    trajectories = {
        label: _read_checked(path, traj_schema, f"trajectory[{label}]")
        for label, path in spec.inputs.get("trajectories", {}).items()}
    oracles = {}
    if spec.overlay_oracle:
        oracles = {
            label: _read_checked(path, ORACLE_COLUMNS, f"oracle[{label}]")
            for label, path in spec.inputs.get("oracles", {}).items()}

    manifest = _Manifest()
    if spec.layout == "fig1":
        fig, axes = plt.subplots(2, 2, figsize=(9, 7))
        _panel_curve(axes[0, 0], manifest, curve)
        _panel_sweep(axes[0, 1], manifest, sweep, spec.overlay_oracle)
        _panel_series(axes[1, 0], manifest, trajectories, "p_minus", "traj",
                      "ground population", oracles, "p")
        _panel_series(axes[1, 1], manifest, trajectories, "lam", "protocol",
                      "control", oracles, "lambda_star")
    elif spec.layout == "fig2":
        fig, axes = plt.subplots(2, 3, figsize=(13, 7))
        _panel_curve(axes[0, 0], manifest, curve)
        _panel_sweep(axes[0, 1], manifest, sweep, spec.overlay_oracle)
        _panel_series(axes[0, 2], manifest, trajectories, "bloch_z", "traj",
                      "sigma_z expectation")
        _panel_series(axes[1, 0], manifest, trajectories, "epsilon",
                      "protocol", "transverse control")
        _panel_series(axes[1, 1], manifest, trajectories, "lam", "protocol",
                      "longitudinal control")
        axes[1, 2].axis("off")
    else:  # fig3
        fig, axes = plt.subplots(2, 3, figsize=(13, 7))
        _panel_curve(axes[0, 0], manifest, curve)
        _panel_sweep(axes[0, 1], manifest, sweep, spec.overlay_oracle)
        _panel_series(axes[0, 2], manifest, trajectories, "bloch_x", "traj",
                      "sigma_x expectation")
        _panel_series(axes[1, 0], manifest, trajectories, "bloch_z", "traj",
                      "sigma_z expectation")
        _panel_series(axes[1, 1], manifest, trajectories, "epsilon",
                      "protocol", "transverse control")
        _panel_series(axes[1, 2], manifest, trajectories, "lam", "protocol",
                      "longitudinal control")

    fig.suptitle(spec.layout)
    fig.tight_layout()
    fig.savefig(spec.out, dpi=110)
    plt.close(fig)
    manifest_path = spec.out + ".manifest.txt"
    manifest.write(manifest_path)
    return spec.out, manifest_path
