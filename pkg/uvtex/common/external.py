"""
External Process Hook

Runs an external image tool through the temp-dir PNG protocol shared by the
inpainter and the denoiser backends:

1. write `in.png` (RGB, 8-bit) and `in.mask.png` (gray, 255 = valid) to a
   fresh temporary directory
2. run the command template with {in}, {mask}, {out}, {seed}, {python} and
   any extra substitutions (e.g. {t})
3. expect `out.png` with the input's dimensions and exit code 0

The temporary directory root can be moved with the UVTEX_TMPDIR variable.
"""

import os
import shlex
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ExternalProcessError
from .imageio import load_image, save_gray, save_image
from .log import get_logger

logger = get_logger(__name__)

TMPDIR_ENV = "UVTEX_TMPDIR"


def build_command(template: str, substitutions: dict[str, str]) -> list[str]:
    """
    Split a command template into argv and fill in placeholders.

    Splitting happens before substitution so paths containing spaces stay
    single arguments.
    """
    argv = []
    for token in shlex.split(template):
        for key, value in substitutions.items():
            token = token.replace("{" + key + "}", value)
        argv.append(token)
    return argv


@dataclass
class ExternalTool:
    """An external executable speaking the PNG protocol."""

    command: str
    timeout: float = 300.0
    seed: int = 0
    extra: dict[str, str] = field(default_factory=dict)

    def run(
        self,
        image: np.ndarray,
        mask: np.ndarray,
        substitutions: Optional[dict[str, str]] = None,
    ) -> np.ndarray:
        """
        Run the tool on one image/mask pair.

        Args:
            image: (H, W, 3) input in [0, 1]
            mask: (H, W) validity in [0, 1]
            substitutions: Extra placeholder values for this call

        Returns:
            The (H, W, 3) float image read back from out.png
        """
        if self.timeout <= 0:
            raise ExternalProcessError("timeout must be positive", phase="config")

        root = os.environ.get(TMPDIR_ENV) or None
        with tempfile.TemporaryDirectory(prefix="uvtex-", dir=root) as workdir:
            work = Path(workdir)
            in_path = work / "in.png"
            mask_path = work / "in.mask.png"
            out_path = work / "out.png"
            save_image(in_path, image, bit_depth=8)
            save_gray(mask_path, mask, bit_depth=8)

            values = {
                "in": str(in_path),
                "mask": str(mask_path),
                "out": str(out_path),
                "seed": str(self.seed),
                "python": sys.executable,
                **self.extra,
                **(substitutions or {}),
            }
            cmd = build_command(self.command, values)
            logger.debug(f"[external] {' '.join(cmd)}")

            start_time = time.time()
            try:
                result = subprocess.run(
                    cmd,
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired:
                raise ExternalProcessError(
                    f"external tool timed out after {self.timeout:g}s", phase="timeout"
                )
            except FileNotFoundError:
                raise ExternalProcessError(
                    f"external tool not found: {cmd[0] if cmd else self.command}",
                    phase="launch",
                )
            elapsed_ms = int((time.time() - start_time) * 1000)
            logger.debug(f"[timing] external {elapsed_ms}ms")

            if result.returncode != 0:
                detail = result.stderr.strip() or "no stderr"
                raise ExternalProcessError(
                    f"external tool exited with code {result.returncode}: {detail}",
                    phase="exit",
                )
            if not out_path.exists():
                raise ExternalProcessError("external tool did not write out.png", phase="output")

            output = load_image(out_path)
            if output.shape != image.shape:
                raise ExternalProcessError(
                    f"output size {output.shape[1]}x{output.shape[0]} does not match "
                    f"input {image.shape[1]}x{image.shape[0]}",
                    phase="output",
                )
            return output
