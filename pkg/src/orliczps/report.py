"""Suite reports and their json / csv / svg emitters."""

from __future__ import annotations

import csv
import json
import math
import platform
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__

__all__ = [
    "SCHEMA_VERSION",
    "CaseRecord",
    "SuiteReport",
    "environment_fingerprint",
    "emit_report",
    "polar_svg",
]

SCHEMA_VERSION = "v1"
VERDICTS = ("pass", "fail", "skipped", "info")


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


@dataclass
class CaseRecord:
    case_id: str
    verdict: str
    inputs: dict = field(default_factory=dict)
    quantities: dict = field(default_factory=dict)
    margin: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")

    def as_dict(self):
        return _clean({"case_id": self.case_id, "verdict": self.verdict, "inputs": self.inputs,
                       "quantities": self.quantities, "margin": self.margin, "note": self.note})


def environment_fingerprint() -> dict:
    return {
        "orliczps": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "machine": platform.machine(),
    }


@dataclass
class SuiteReport:
    suite: str
    cases: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    environment: dict = field(default_factory=environment_fingerprint)

    def add(self, *args, **kw) -> CaseRecord:
        rec = CaseRecord(*args, **kw)
        self.cases.append(rec)
        return rec

    def extend(self, other: "SuiteReport"):
        self.cases.extend(other.cases)

    @property
    def failures(self) -> list:
        return [c for c in self.cases if c.verdict == "fail"]

    @property
    def skipped(self) -> list:
        return [c for c in self.cases if c.verdict == "skipped"]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        counts = {v: sum(c.verdict == v for c in self.cases) for v in VERDICTS}
        margins = [c.margin for c in self.cases
                   if c.margin is not None and c.verdict in ("pass", "fail")]
        return {
            "cases": len(self.cases),
            **counts,
            "min_margin": min(margins) if margins else None,
            "passed": self.passed,
        }

    def as_dict(self) -> dict:
        return _clean({
            "schema": SCHEMA_VERSION,
            "suite": self.suite,
            "summary": self.summary(),
            "environment": self.environment,
            "config": self.config,
            "cases": [c.as_dict() for c in self.cases],
        })

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteReport":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        rep = cls(data["suite"], config=data.get("config", {}),
                  environment=data.get("environment", {}))
        for c in data["cases"]:
            rep.cases.append(CaseRecord(c["case_id"], c["verdict"], c["inputs"],
                                        c["quantities"], c["margin"], c["note"]))
        return rep


def polar_svg(angles, radii, title: str = "", size: int = 320, overlays=()) -> str:
    """Minimal SVG polar plot of one or more closed radial curves."""
    curves = [(np.asarray(angles), np.asarray(radii), "#1f4e9c")]
    colours = ["#c0392b", "#27ae60", "#8e44ad"]
    for i, (a, r) in enumerate(overlays):
        curves.append((np.asarray(a), np.asarray(r), colours[i % len(colours)]))
    rmax = max(float(np.max(r)) for _, r, _ in curves if len(r)) or 1.0
    half = size / 2
    scale = 0.9 * half / rmax
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<title>{_xml_escape(title)}</title>',
             f'<line x1="0" y1="{half}" x2="{size}" y2="{half}" stroke="#ccc"/>',
             f'<line x1="{half}" y1="0" x2="{half}" y2="{size}" stroke="#ccc"/>']
    for a, r, colour in curves:
        xs = half + scale * r * np.cos(a)
        ys = half - scale * r * np.sin(a)
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polygon points="{pts}" fill="none" stroke="{colour}" stroke-width="1.2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _slug(s: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", s).strip("_")


def emit_report(report: SuiteReport, fmt: str, out_dir) -> list[Path]:
    """Write ``report`` as ``json``, ``csv`` or ``svg-bundle`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = _slug(report.suite)
    if fmt == "json":
        path = out / f"{stem}.json"
        path.write_text(report.to_json() + "\n")
        return [path]
    if fmt == "csv":
        path = out / f"{stem}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case_id", "verdict", "margin", "note", "inputs", "quantities"])
            for c in report.cases:
                d = c.as_dict()
                w.writerow([d["case_id"], d["verdict"], d["margin"], d["note"],
                            json.dumps(d["inputs"], sort_keys=True),
                            json.dumps(d["quantities"], sort_keys=True)])
        return [path]
    if fmt == "svg-bundle":
        folder = out / f"{stem}_svg"
        folder.mkdir(exist_ok=True)
        paths = []
        for c in report.cases:
            body = c.quantities.get("body")
            if not body:
                continue
            overlays = [(o["angles"], o["radial"]) for o in body.get("overlays", [])]
            svg = polar_svg(body["angles"], body["radial"], c.case_id, overlays=overlays)
            p = folder / f"{_slug(c.case_id)}.svg"
            p.write_text(svg)
            paths.append(p)
        return paths
    raise ValueError(f"unknown report format {fmt!r}")
