"""Plot job descriptions.

A job file is a JSON list of objects:

    [{"kind": "domain_map", "input": "raster.csv",
      "output": "map.png", "style": {"dpi": 120}}, ...]

Kinds: domain_map, tubes, zeros, cw_bound, phi_profile.  Inputs are the
documented spininterp CLI outputs (CSV rasters/curves, JSON zero lists).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

KINDS = ("domain_map", "tubes", "zeros", "cw_bound", "phi_profile")


@dataclass(frozen=True)
class PlotStyle:
    dpi: int = 120
    colormap: str = "viridis"
    mag_scale: float = 3.0  # log-magnitude compression for domain coloring

    @classmethod
    def from_dict(cls, data: dict | None) -> "PlotStyle":
        data = dict(data or {})
        known = {k: data[k] for k in ("dpi", "colormap", "mag_scale") if k in data}
        return cls(**known)


@dataclass(frozen=True)
class PlotJob:
    kind: str
    input: str
    output: str
    style: PlotStyle = field(default_factory=PlotStyle)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def from_dict(cls, data: dict) -> "PlotJob":
        try:
            kind = data["kind"]
            input_path = data["input"]
            output = data["output"]
        except KeyError as exc:
            raise ValueError(f"plot job missing key: {exc}")
        return cls(
            kind=kind,
            input=input_path,
            output=output,
            style=PlotStyle.from_dict(data.get("style")),
        )


def load_jobs(path: str) -> list[PlotJob]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("job file must be a JSON list of plot jobs")
    return [PlotJob.from_dict(item) for item in data]
