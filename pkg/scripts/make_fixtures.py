"""Build the PGM fixture set for the Gaussian filter benchmark.

Takes sample images bundled with scikit-image, converts them to 8-bit
grayscale, cuts a central crop of at most 256x256 at native resolution and
writes ``<name>.pgm`` together with a copy carrying additive Gaussian noise
(sigma 10, seed derived from the name) as ``<name>_noisy.pgm``.

Only smooth-content images are used. On strongly textured scenes (grass,
gravel, page, coins) the 3x3 kernel, whose gain is 246/256, removes more
detail than noise, so filtering lowers PSNR even with exact products.
scikit-image is only needed here.

    python scripts/make_fixtures.py [--out src/approxcgp/data/images]
"""
from __future__ import annotations

import argparse
import zlib
from pathlib import Path

import numpy as np
from skimage import color, data, util

from approxcgp.bench.images import GrayImage, add_gaussian_noise, write_pgm

NAMES = ["brick", "cat", "cell", "chelsea", "clock", "coffee", "hubble_deep_field",
         "immunohistochemistry", "microaneurysms", "moon", "retina", "rocket", "text"]
SIZE = 256


def load(name: str) -> np.ndarray:
    img = getattr(data, name)()
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    img = util.img_as_ubyte(img)
    h, w = img.shape
    s = min(SIZE, h, w)
    y, x = (h - s) // 2, (w - s) // 2
    return img[y:y + s, x:x + s]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                         / "src" / "approxcgp" / "data" / "images"))
    ap.add_argument("--sigma", type=float, default=10.0)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in NAMES:
        clean = GrayImage.from_array(load(name))
        noisy = add_gaussian_noise(clean, args.sigma, seed=zlib.crc32(name.encode()))
        write_pgm(clean, out / f"{name}.pgm")
        write_pgm(noisy, out / f"{name}_noisy.pgm")
        print(name)


if __name__ == "__main__":
    main()
