"""Renderers for the five plot kinds.

Domain coloring convention: hue encodes the argument, lightness encodes
tanh-compressed log-magnitude, exact zeros and NaNs render black.
Rendering is a pure function of inputs and style; SVG output is
byte-reproducible (fixed hash salt, no date metadata).
"""

from __future__ import annotations

import colorsys
import csv
import json
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spinplot.jobs import PlotJob

plt.rcParams["svg.hashsalt"] = "spinplot"


def _read_csv(path: str) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


def domain_color_rgb(mag: np.ndarray, arg: np.ndarray, mag_scale: float = 3.0) -> np.ndarray:
    """RGB array for a grid of (|Z|, arg Z).

    hue = arg mapped onto [0, 1); lightness = (1 + tanh(log|Z|/scale))/2,
    so |Z| = 1 sits mid-gray-bright, large |Z| tends white, and |Z| -> 0
    (or NaN) is black.
    """
    mag = np.asarray(mag, dtype=float)
    arg = np.asarray(arg, dtype=float)
    hue = (arg + math.pi) / (2.0 * math.pi) % 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        light = 0.5 * (1.0 + np.tanh(np.log(mag) / mag_scale))
    light = np.where((mag > 0.0) & np.isfinite(mag) & np.isfinite(arg), light, 0.0)
    rgb = np.zeros(mag.shape + (3,))
    it = np.nditer(mag, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        rgb[idx] = colorsys.hls_to_rgb(float(hue[idx]), float(light[idx]), 1.0)
    return rgb


def _render_domain_map(job: PlotJob) -> None:
    rows = _read_csv(job.input)
    res = [(float(r["re"]), float(r["im"]), float(r["abs_z"]), float(r["arg_z"])) for r in rows]
    res_sorted = sorted(res, key=lambda t: (t[1], t[0]))
    ims = sorted({t[1] for t in res_sorted})
    res_x = sorted({t[0] for t in res_sorted})
    h, w = len(ims), len(res_x)
    if h * w != len(res_sorted):
        raise ValueError("raster rows do not form a full grid")
    mag = np.array([t[2] for t in res_sorted]).reshape(h, w)
    arg = np.array([t[3] for t in res_sorted]).reshape(h, w)
    rgb = domain_color_rgb(mag, arg, job.style.mag_scale)
    # pixel-exact image, row 0 at the bottom (increasing imaginary part up)
    plt.imsave(job.output, rgb[::-1], origin="upper", dpi=job.style.dpi)


def render_tubes_axes(rows: list[dict]):
    """Figure with the curve paths and tube boundaries; returns (fig, ax)."""
    fig, ax = plt.subplots(figsize=(6, 6))
    ks = sorted({int(r["k"]) for r in rows})
    for k in ks:
        tube = [r for r in rows if int(r["k"]) == k and r["kind"] == "tube"]
        if tube:
            xs = [float(r["re"]) for r in tube]
            ys = [float(r["im"]) for r in tube]
            ax.plot(xs + xs[:1], ys + ys[:1], color="tab:blue", lw=0.7, alpha=0.8)
        path = [r for r in rows if int(r["k"]) == k and r["kind"] == "path"]
        xs = [float(r["re"]) for r in path]
        ys = [float(r["im"]) for r in path]
        ax.plot(xs, ys, color="black", lw=1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    return fig, ax


def _render_tubes(job: PlotJob) -> None:
    fig, _ = render_tubes_axes(_read_csv(job.input))
    _save(fig, job)


def render_zeros_axes(payload: dict):
    """Zero scatter with the threshold circle; accepts the CLI report or
    its inner zeros block."""
    block = payload.get("zeros", payload)
    fig, ax = plt.subplots(figsize=(6, 6))
    xs = [z["re"] for z in block["zeros"]]
    ys = [z["im"] for z in block["zeros"]]
    ax.scatter(xs, ys, marker="x", color="tab:red", zorder=3)
    theta = np.linspace(0, 2 * math.pi, 512)
    radius = block.get("beta_2nd", 1.0)
    ax.plot(radius * np.cos(theta), radius * np.sin(theta), color="gray", ls="--", lw=1.0)
    disk_r = block.get("disk_radius")
    if disk_r:
        ax.plot(disk_r * np.cos(theta), disk_r * np.sin(theta), color="tab:blue", lw=0.8)
    ax.set_aspect("equal")
    return fig, ax


def _render_zeros(job: PlotJob) -> None:
    with open(job.input) as fh:
        payload = json.load(fh)
    fig, _ = render_zeros_axes(payload)
    _save(fig, job)


def _render_cw_bound(job: PlotJob) -> None:
    rows = _read_csv(job.input)
    betas = [float(r["beta"]) for r in rows]
    lz = [float(r["log_zcw"]) for r in rows]
    rb = [float(r["rs_bound"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(betas, lz, label="log Z_CW(beta^2)")
    ax.plot(betas, rb, ls="--", label="comparison bound")
    ax.set_xlabel("beta")
    ax.legend()
    _save(fig, job)


def _render_phi_profile(job: PlotJob) -> None:
    rows = _read_csv(job.input)
    ms = [float(r["m"]) for r in rows]
    phis = [float(r["phi"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ms, phis)
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.set_xlabel("m")
    ax.set_ylabel("phi(m)")
    _save(fig, job)


def _save(fig, job: PlotJob) -> None:
    if job.output.endswith(".svg"):
        fig.savefig(job.output, dpi=job.style.dpi, metadata={"Date": None})
    else:
        fig.savefig(job.output, dpi=job.style.dpi)
    plt.close(fig)


_RENDERERS = {
    "domain_map": _render_domain_map,
    "tubes": _render_tubes,
    "zeros": _render_zeros,
    "cw_bound": _render_cw_bound,
    "phi_profile": _render_phi_profile,
}


def render(job: PlotJob) -> str:
    """Render one job; returns the output path."""
    _RENDERERS[job.kind](job)
    return job.output
