"""8-bit grayscale images, the 3x3 Gaussian filter harness, and PSNR."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lut import MultLut

KERNEL = np.array([[15, 31, 15],
                   [31, 62, 31],
                   [15, 31, 15]], dtype=np.int64)
NORM_SHIFT = 8
PSNR_CAP = 99.0


@dataclass(frozen=True, eq=False)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.size != self.width * self.height:
            raise ValueError(f"expected {self.width * self.height} pixels, got {px.size}")
        px = np.ascontiguousarray(px.reshape(self.height, self.width), dtype=np.uint8)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr) -> "GrayImage":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("pixel values must be within 0..255")
        return cls(arr.shape[1], arr.shape[0], arr.astype(np.uint8))

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


def write_pgm(image: GrayImage, path) -> None:
    header = f"P5\n{image.width} {image.height}\n255\n".encode()
    Path(path).write_bytes(header + image.pixels.tobytes())


def read_pgm(path) -> GrayImage:
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while data[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"{path}: only binary PGM (P5) is supported")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported")
    pos += 1
    px = np.frombuffer(data[pos:pos + width * height], dtype=np.uint8)
    return GrayImage(width, height, px)


def add_gaussian_noise(image: GrayImage, sigma: float = 10.0, seed: int = 42) -> GrayImage:
    rng = np.random.default_rng(seed)
    noisy = image.pixels.astype(np.float64) + rng.normal(0.0, sigma, image.pixels.shape)
    return GrayImage.from_array(np.clip(np.rint(noisy), 0, 255))


def _taps(image: GrayImage):
    padded = np.pad(image.pixels.astype(np.int64), 1, mode="edge")
    h, w = image.height, image.width
    for dy in range(3):
        for dx in range(3):
            yield int(KERNEL[dy, dx]), padded[dy:dy + h, dx:dx + w]


def gaussian_filter(image: GrayImage, mult: MultLut) -> GrayImage:
    """3x3 filter where every tap product goes through ``mult(coefficient, pixel)``."""
    if mult.w != 8 or mult.signed:
        raise ValueError("gaussian_filter needs an unsigned 8-bit multiplier")
    acc = np.zeros((image.height, image.width), dtype=np.int64)
    for c, window in _taps(image):
        acc += mult.table[c, window]
    return GrayImage.from_array(np.clip(acc >> NORM_SHIFT, 0, 255))


def convolve_reference(image: GrayImage) -> GrayImage:
    """Same filter in plain integer arithmetic."""
    acc = np.zeros((image.height, image.width), dtype=np.int64)
    for c, window in _taps(image):
        acc += c * window
    return GrayImage.from_array(np.clip(acc >> NORM_SHIFT, 0, 255))


def psnr(reference: GrayImage, test: GrayImage) -> float:
    if reference.pixels.shape != test.pixels.shape:
        raise ValueError("images differ in size")
    diff = reference.pixels.astype(np.float64) - test.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(255.0 ** 2 / mse))


def load_fixture_set(directory) -> list[tuple[str, GrayImage, GrayImage]]:
    """(name, clean, noisy) triples from ``<name>.pgm`` / ``<name>_noisy.pgm`` pairs."""
    directory = Path(directory)
    out = []
    for clean in sorted(directory.glob("*.pgm")):
        if clean.stem.endswith("_noisy"):
            continue
        noisy = clean.with_name(clean.stem + "_noisy.pgm")
        if noisy.exists():
            out.append((clean.stem, read_pgm(clean), read_pgm(noisy)))
    return out


def filter_bench(mult: MultLut, fixtures) -> dict:
    """Mean PSNR of filtered noisy images against their clean originals."""
    rows = []
    for name, clean, noisy in fixtures:
        out = gaussian_filter(noisy, mult)
        rows.append({"image": name, "psnr_noisy": psnr(clean, noisy),
                     "psnr_filtered": psnr(clean, out)})
    mean = sum(r["psnr_filtered"] for r in rows) / len(rows) if rows else float("nan")
    return {"mean_psnr": mean, "images": rows}
