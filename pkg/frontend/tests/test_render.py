import colorsys
import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

matplotlib = pytest.importorskip("matplotlib")
from matplotlib import image as mpimg

from spinplot.jobs import PlotJob, PlotStyle, load_jobs
from spinplot.render import domain_color_rgb, render, render_tubes_axes, render_zeros_axes


def _write_raster(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "abs_z", "arg_z"])
        w.writerows(rows)


def test_domain_color_convention():
    mag = np.array([[1.0, 0.0], [100.0, float("nan")]])
    arg = np.array([[0.5, 0.0], [-2.0, 0.0]])
    rgb = domain_color_rgb(mag, arg)
    # zero and NaN pixels are exactly black
    assert tuple(rgb[0, 1]) == (0.0, 0.0, 0.0)
    assert tuple(rgb[1, 1]) == (0.0, 0.0, 0.0)
    # hue of a unit-magnitude pixel round-trips to the argument
    h, l, s = colorsys.rgb_to_hls(*rgb[0, 0])
    assert h == pytest.approx((0.5 + math.pi) / (2 * math.pi), abs=1e-6)
    assert l == pytest.approx(0.5, abs=1e-6)
    # large magnitude is brighter than unit magnitude
    _, l_big, _ = colorsys.rgb_to_hls(*rgb[1, 0])
    assert l_big > 0.6


def test_domain_map_two_by_two_pixels(tmp_path):
    # synthetic 2x2 fixture; one numerically-zero pixel must come out black
    raster = tmp_path / "raster.csv"
    args = {(0.0, 0.0): 1.0, (1.0, 0.0): 2.0, (0.0, 1.0): -1.5, (1.0, 1.0): 0.0}
    rows = []
    for (re, im), a in args.items():
        mag = 0.0 if (re, im) == (1.0, 1.0) else 1.0
        rows.append([re, im, mag, a])
    _write_raster(raster, rows)
    out = tmp_path / "map.png"
    render(PlotJob(kind="domain_map", input=str(raster), output=str(out)))
    img = mpimg.imread(out)
    assert img.shape[0] == 2 and img.shape[1] == 2  # 4-pixel image
    # row order: bottom row of the complex plane is the last image row
    top_right = img[0, 1, :3]
    assert tuple(top_right) == (0.0, 0.0, 0.0)  # the zero pixel, black
    # hue of the bottom-left pixel matches arg = 1.0
    h, _, _ = colorsys.rgb_to_hls(*(float(c) for c in img[1, 0, :3]))
    assert h == pytest.approx((1.0 + math.pi) / (2 * math.pi), abs=0.01)


def _tubes_rows(beta_star=0.4, N=2, samples=64):
    rows = []
    for k in range(-N, N + 1):
        for i in range(samples):
            t = i / (samples - 1)
            # stand-in arcs: straight chords plus a bulge; endpoints exact
            re = beta_star * t
            im = 0.05 * k * math.sin(math.pi * t)
            rows.append({"kind": "path", "k": str(k), "idx": str(i), "re": repr(re), "im": repr(im)})
        for i in range(samples):
            th = 2 * math.pi * i / samples
            rows.append(
                {
                    "kind": "tube",
                    "k": str(k),
                    "idx": str(i),
                    "re": repr(beta_star / 2 + 0.2 * math.cos(th)),
                    "im": repr(0.05 * k + 0.02 * math.sin(th)),
                }
            )
    return rows


def test_tubes_endpoints_within_one_pixel(tmp_path):
    beta_star = 0.4
    rows = _tubes_rows(beta_star=beta_star)
    fig, ax = render_tubes_axes(rows)
    fig.canvas.draw()
    want = ax.transData.transform([(0.0, 0.0), (beta_star, 0.0)])
    # black path lines: endpoints of each must hit 0 and beta* to 1 px
    paths = [ln for ln in ax.get_lines() if ln.get_color() == "black"]
    assert len(paths) == 5
    for ln in paths:
        x, y = ln.get_data()
        got = ax.transData.transform([(x[0], y[0]), (x[-1], y[-1])])
        assert np.hypot(*(got[0] - want[0])) <= 1.0
        assert np.hypot(*(got[1] - want[1])) <= 1.0
    out = tmp_path / "tubes.png"
    fig.savefig(out)
    assert out.exists()


def test_zeros_overlay_circle_radius():
    payload = {
        "zeros": {
            "disk_center": [0.0, 0.0],
            "disk_radius": 0.9,
            "zeros": [{"re": 0.3, "im": 0.1, "multiplicity": 1}],
            "beta_2nd": 0.77,
        }
    }
    fig, ax = render_zeros_axes(payload)
    radii = []
    for ln in ax.get_lines():
        x, y = ln.get_data()
        radii.append(np.hypot(x, y).max())
    assert any(abs(r - 0.77) < 1e-9 for r in radii)  # threshold circle
    assert any(abs(r - 0.9) < 1e-9 for r in radii)  # search disk


def test_cw_and_phi_renderers(tmp_path):
    cw = tmp_path / "cw.csv"
    with open(cw, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "log_zcw", "rs_bound"])
        for b in np.linspace(0, 0.9, 10):
            w.writerow([b, 0.5 * b * b, 0.6 * b * b])
    out = tmp_path / "cw.svg"
    render(PlotJob(kind="cw_bound", input=str(cw), output=str(out)))
    assert out.exists()

    phi = tmp_path / "phi.csv"
    with open(phi, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "phi"])
        for m in np.linspace(-0.9, 0.9, 11):
            w.writerow([m, -m * m])
    out2 = tmp_path / "phi.png"
    render(PlotJob(kind="phi_profile", input=str(phi), output=str(out2)))
    assert out2.exists()


def test_svg_output_deterministic(tmp_path):
    cw = tmp_path / "cw.csv"
    with open(cw, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "log_zcw", "rs_bound"])
        w.writerows([[0.1, 0.01, 0.02], [0.2, 0.03, 0.05]])
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render(PlotJob(kind="cw_bound", input=str(cw), output=str(a)))
    render(PlotJob(kind="cw_bound", input=str(cw), output=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_job_file_parsing_and_errors(tmp_path):
    jobfile = tmp_path / "jobs.json"
    jobfile.write_text(
        json.dumps(
            [{"kind": "phi_profile", "input": "x.csv", "output": "x.png", "style": {"dpi": 72}}]
        )
    )
    jobs = load_jobs(str(jobfile))
    assert jobs[0].style.dpi == 72
    with pytest.raises(ValueError):
        PlotJob(kind="mystery", input="a", output="b")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "tubes"}))
    with pytest.raises(ValueError):
        load_jobs(str(bad))


def test_cli_end_to_end_with_primary(tmp_path):
    """Integration through the primary component's documented interfaces."""
    spininterp = pytest.importorskip("spininterp")
    spec = tmp_path / "sk.toml"
    spec.write_text('domain = "hypercube"\ngammas = [0.7071067811865476]\n')
    raster = tmp_path / "raster.csv"
    curves = tmp_path / "curves.csv"
    zeros = tmp_path / "zeros.json"
    for argv in (
        ["exact", "--spec", str(spec), "--n", "10", "--seed", "3",
         "--grid=-1,1,-1,1", "--resolution", "16", "--out", str(raster)],
        ["curves", "--spec", str(spec), "--beta-star", "0.3", "--N", "1",
         "--m", "12", "--samples", "64", "--out", str(curves)],
        ["zeros", "--spec", str(spec), "--n", "8", "--seed", "11",
         "--radius", "1.05", "--out", str(zeros)],
    ):
        proc = subprocess.run(
            [sys.executable, "-m", "spininterp.cli", *argv], capture_output=True, text=True
        )
        assert proc.returncode == 0, proc.stderr

    jobfile = tmp_path / "jobs.json"
    jobfile.write_text(
        json.dumps(
            [
                {"kind": "domain_map", "input": str(raster), "output": str(tmp_path / "m.png")},
                {"kind": "tubes", "input": str(curves), "output": str(tmp_path / "t.png")},
                {"kind": "zeros", "input": str(zeros), "output": str(tmp_path / "z.png")},
            ]
        )
    )
    from spinplot.cli import main

    assert main([str(jobfile)]) == 0
    for name in ("m.png", "t.png", "z.png"):
        assert (tmp_path / name).exists()
