"""
Metric reports for texture and render comparisons.

report.json carries no timestamps so identical runs write identical bytes.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..optimize.render import RenderMap, render
from ..projection.texture import TextureMap
from .quality import psnr, ssim

PathLike = Union[str, Path]


@dataclass
class MetricReport:
    """
    Attributes:
        label: Artifact compared, e.g. "final"
        domain: "texture" or "render"
        region: "full" or "visible"
        psnr: dB, +inf for identical inputs
        ssim: Mean SSIM
        count: Pixels or texels evaluated
    """

    label: str
    domain: str
    region: str
    psnr: float
    ssim: float
    count: int

    @property
    def key(self) -> str:
        return f"{self.label}/{self.domain}/{self.region}"

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "domain": self.domain,
            "region": self.region,
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": self.ssim,
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        value = data["psnr"]
        return cls(
            label=data["label"],
            domain=data["domain"],
            region=data["region"],
            psnr=float("inf") if value == "inf" else float(value),
            ssim=float(data["ssim"]),
            count=int(data["count"]),
        )

    def summary(self) -> str:
        shown = "inf" if math.isinf(self.psnr) else f"{self.psnr:.2f}"
        return f"{self.key} PSNR={shown}dB SSIM={self.ssim:.4f}"


def _measure(label, domain, region, a, b, mask) -> MetricReport:
    count = int(np.count_nonzero(mask)) if mask is not None else a.shape[0] * a.shape[1]
    return MetricReport(
        label=label,
        domain=domain,
        region=region,
        psnr=psnr(a, b, mask),
        ssim=ssim(a, b, mask),
        count=count,
    )


def evaluate_textures(
    result: TextureMap,
    truth: TextureMap,
    visible: Optional[np.ndarray] = None,
    label: str = "final",
) -> list[MetricReport]:
    """Compare UV textures over every texel and, if given, the visible texels."""
    reports = [_measure(label, "texture", "full", result.rgb, truth.rgb, None)]
    if visible is not None and np.any(visible):
        reports.append(_measure(label, "texture", "visible", result.rgb, truth.rgb, visible))
    return reports


def evaluate_renders(
    render_map: RenderMap,
    result: TextureMap,
    truth: TextureMap,
    label: str = "final",
) -> list[MetricReport]:
    """Render both textures through the input view and compare the frames."""
    a, mask = render(render_map, result)
    b, _ = render(render_map, truth)
    reports = [_measure(label, "render", "full", a, b, None)]
    if mask.any():
        reports.append(_measure(label, "render", "visible", a, b, mask))
    return reports


def generate_report(reports: list[MetricReport], output_path: Optional[PathLike] = None) -> str:
    """
    Write report.json (if a path is given) and return a one-line summary.
    """
    data = {"reports": [r.to_dict() for r in reports]}
    if output_path:
        path = Path(output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return " | ".join(r.summary() for r in reports)


def load_report(path: PathLike) -> list[MetricReport]:
    data = json.loads(Path(path).read_text())
    return [MetricReport.from_dict(entry) for entry in data["reports"]]
