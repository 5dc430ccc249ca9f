"""
Metrics Module

PSNR/SSIM and labeled texture and render reports.
"""

from .quality import psnr, ssim, ssim_map
from .report import MetricReport, evaluate_renders, evaluate_textures, generate_report, load_report

__all__ = [
    "MetricReport",
    "evaluate_renders",
    "evaluate_textures",
    "generate_report",
    "load_report",
    "psnr",
    "ssim",
    "ssim_map",
]
