"""
Pass-through reference tool for the external PNG protocol.

Copies the input image and paints every invalid texel (mask < 0.5) mid-gray.
Accepts and ignores --seed and --t, so the same stub serves the inpainter
and the denoiser hooks:

    {python} -m uvtex.stubs.passthrough --in {in} --mask {mask} --out {out} --seed {seed}
"""

import argparse
import sys

import numpy as np

from ..common.errors import UvtexError
from ..common.imageio import load_gray, load_image, save_image

FILL_VALUE = 0.5


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Pass-through inpainting stub")
    parser.add_argument("--in", dest="input", required=True, help="Input RGB PNG")
    parser.add_argument("--mask", required=True, help="Validity mask PNG (255 = valid)")
    parser.add_argument("--out", required=True, help="Output RGB PNG")
    parser.add_argument("--seed", type=int, default=0, help="Ignored; accepted for the protocol")
    parser.add_argument("--t", type=int, default=None, help="Ignored; denoiser timestep")
    args = parser.parse_args(argv)

    try:
        image = load_image(args.input)
        mask = load_gray(args.mask)
        out = np.where((mask >= 0.5)[:, :, None], image, FILL_VALUE)
        save_image(args.out, out, bit_depth=8)
    except UvtexError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
