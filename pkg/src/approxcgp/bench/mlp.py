"""Integer 784-300-10 perceptron whose every weight x activation product
goes through a multiplier lookup table.

Quantisation: weights and biases are int8 with power-of-two scales, hidden
activations are clamped to 0..127, the input is ``pixel >> 1``. Each layer
accumulates ``sum_j M(w, x)`` in a wrapping two's-complement register sized
for the exact worst case, adds the bias aligned to the accumulator scale,
and (for hidden layers) shifts the result down to the activation scale.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .lut import MultLut

MAGIC = b"QMLP"
FORMAT_VERSION = 1
INPUT_FRAC = 7           # pixel >> 1 in 0..127 stands for pixel / 256
ACT_MAX = 127


def adder_width(d: int) -> int:
    """Width of a d-input sum of 8-bit terms: 8 + ceil(log2 d)."""
    if d < 1:
        raise ValueError("fan-in must be >= 1")
    return 8 + math.ceil(math.log2(d))


def accumulator_width(d: int) -> int:
    """Adder width extended by the 8 extra bits of a full product."""
    return adder_width(d) + 8


def wrap(acc: np.ndarray, bits: int) -> np.ndarray:
    """Two's-complement wrap of int64 values to ``bits`` bits."""
    half = np.int64(1) << np.int64(bits - 1)
    return ((np.asarray(acc, dtype=np.int64) + half) & ((half << np.int64(1)) - 1)) - half


def mac_accumulate(products, d: int) -> int:
    """Sum multiplier outputs in the wrapping register of a d-input MAC."""
    products = np.asarray(products, dtype=np.int64).ravel()
    if products.size > d:
        raise ValueError(f"{products.size} products exceed fan-in {d}")
    return int(wrap(np.int64(products.sum()), accumulator_width(d)))


@dataclass(frozen=True, eq=False)
class QuantLayer:
    weights: np.ndarray   # int8, (out, in)
    bias: np.ndarray      # int8, (out,)
    w_frac: int           # real weight = q * 2**-w_frac
    b_frac: int           # real bias   = q * 2**-b_frac
    in_frac: int          # activation scale of the layer input
    out_frac: int | None  # activation scale of the output; None = raw scores
    relu: bool

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.int8)
        b = np.ascontiguousarray(self.bias, dtype=np.int8)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError("layer needs (out, in) weights and (out,) bias")
        if self.b_frac > self.w_frac + self.in_frac:
            raise ValueError("bias scale finer than accumulator scale")
        if self.out_frac is not None and self.out_frac > self.w_frac + self.in_frac:
            raise ValueError("output scale finer than accumulator scale")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def acc_frac(self) -> int:
        return self.w_frac + self.in_frac

    def bias_aligned(self) -> np.ndarray:
        return self.bias.astype(np.int64) << (self.acc_frac - self.b_frac)

    def finish(self, acc: np.ndarray) -> np.ndarray:
        """Wrap, add bias, apply activation and rescale."""
        acc = wrap(wrap(acc, accumulator_width(self.fan_in)) + self.bias_aligned(),
                   accumulator_width(self.fan_in))
        if self.relu:
            acc = np.maximum(acc, 0)
        if self.out_frac is None:
            return acc
        return np.clip(acc >> (self.acc_frac - self.out_frac), 0, ACT_MAX)


@dataclass(frozen=True, eq=False)
class QuantMlp:
    layers: tuple[QuantLayer, ...]
    meta: dict

    @property
    def n_inputs(self) -> int:
        return self.layers[0].fan_in

    def save(self, path) -> None:
        """``QMLP`` + u32 version + u32 header length + JSON header + raw tensors."""
        blobs = []
        offset = 0
        lay = []
        for L in self.layers:
            entry = {"w_frac": L.w_frac, "b_frac": L.b_frac, "in_frac": L.in_frac,
                     "out_frac": L.out_frac, "relu": L.relu}
            for key, arr in (("weights", L.weights), ("bias", L.bias)):
                raw = arr.astype("<i1").tobytes()
                entry[key] = {"dtype": "int8", "shape": list(arr.shape),
                              "offset": offset, "nbytes": len(raw)}
                blobs.append(raw)
                offset += len(raw)
            lay.append(entry)
        header = json.dumps({"layers": lay, "meta": self.meta}, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(MAGIC + struct.pack("<II", FORMAT_VERSION, len(header)))
            fh.write(header)
            for raw in blobs:
                fh.write(raw)

    @classmethod
    def load(cls, path) -> "QuantMlp":
        data = Path(path).read_bytes()
        if data[:4] != MAGIC:
            raise ValueError(f"{path}: not a quantised MLP file")
        version, hlen = struct.unpack("<II", data[4:12])
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        header = json.loads(data[12:12 + hlen])
        body = data[12 + hlen:]
        layers = []
        for e in header["layers"]:
            arrs = {}
            for key in ("weights", "bias"):
                t = e[key]
                raw = body[t["offset"]:t["offset"] + t["nbytes"]]
                arrs[key] = np.frombuffer(raw, dtype="<i1").reshape(t["shape"])
            layers.append(QuantLayer(arrs["weights"], arrs["bias"], e["w_frac"], e["b_frac"],
                                     e["in_frac"], e["out_frac"], e["relu"]))
        return cls(tuple(layers), header.get("meta", {}))


def quantize_input(pixels: np.ndarray) -> np.ndarray:
    return (np.asarray(pixels, dtype=np.int64) >> 1)


@njit(cache=True, nogil=True)
def _lut_dense(x_idx, w_idx, table, out):
    n, d = x_idx.shape
    m = w_idx.shape[0]
    for s in range(n):
        for o in range(m):
            row = w_idx[o]
            acc = 0
            for k in range(d):
                acc += table[row[k], x_idx[s, k]]
            out[s, o] = acc


def _dense_lut(x: np.ndarray, layer: QuantLayer, mult: MultLut) -> np.ndarray:
    off = mult.offset
    x_idx = np.ascontiguousarray(x + off, dtype=np.int64)
    w_idx = np.ascontiguousarray(layer.weights.astype(np.int64) + off)
    table = np.ascontiguousarray(mult.table, dtype=np.int64)
    out = np.empty((x.shape[0], layer.weights.shape[0]), dtype=np.int64)
    _lut_dense(x_idx, w_idx, table, out)
    return out


def _check_mult(mult: MultLut):
    if mult.w != 8 or not mult.signed:
        raise ValueError("the network needs a signed 8-bit multiplier")


def mlp_scores(model: QuantMlp, images: np.ndarray, mult: MultLut) -> np.ndarray:
    """Raw integer output scores for a batch of (n, 784) uint8 images."""
    _check_mult(mult)
    x = quantize_input(np.atleast_2d(images))
    for layer in model.layers:
        x = layer.finish(_dense_lut(x, layer, mult))
    return x


def mlp_infer(model: QuantMlp, image, mult: MultLut) -> tuple[int, np.ndarray]:
    """Label and raw scores for one 28x28 image (GrayImage or array)."""
    px = np.asarray(getattr(image, "pixels", image))
    if px.size != model.n_inputs:
        raise ValueError(f"model expects {model.n_inputs} pixels, got {px.size}")
    scores = mlp_scores(model, px.reshape(1, -1), mult)[0]
    return int(np.argmax(scores)), scores


def mlp_predict(model: QuantMlp, images: np.ndarray, mult: MultLut) -> np.ndarray:
    """Labels; ties resolve to the lowest class index."""
    return np.argmax(mlp_scores(model, images, mult), axis=1)


def mlp_scores_reference(model: QuantMlp, images: np.ndarray, widen: int = 0) -> np.ndarray:
    """Pure integer path with exact products. ``widen`` adds accumulator bits."""
    x = quantize_input(np.atleast_2d(images))
    for layer in model.layers:
        acc = x @ layer.weights.astype(np.int64).T
        bits = accumulator_width(layer.fan_in) + widen
        acc = wrap(wrap(acc, bits) + layer.bias_aligned(), bits)
        if layer.relu:
            acc = np.maximum(acc, 0)
        x = acc if layer.out_frac is None else np.clip(
            acc >> (layer.acc_frac - layer.out_frac), 0, ACT_MAX)
    return x


def accuracy(model: QuantMlp, images, labels, mult: MultLut) -> float:
    return float(np.mean(mlp_predict(model, images, mult) == np.asarray(labels)))


def weights_histogram(model: QuantMlp) -> np.ndarray:
    """Counts of every int8 weight value, pooled over layers, index = value + 128."""
    counts = np.zeros(256, dtype=np.int64)
    for layer in model.layers:
        counts += np.bincount(layer.weights.ravel().astype(np.int64) + 128, minlength=256)
    return counts


def small_weight_fraction(model: QuantMlp, bound: float = 0.08) -> float:
    """Share of weights whose real value lies strictly inside (-bound, bound)."""
    inside = total = 0
    for layer in model.layers:
        real = np.abs(layer.weights.astype(np.float64)) * 2.0 ** -layer.w_frac
        inside += int(np.count_nonzero(real < bound))
        total += real.size
    return inside / total


def load_test_set(path) -> tuple[np.ndarray, np.ndarray]:
    with np.load(path) as z:
        return z["images"], z["labels"]


def nn_bench(model: QuantMlp, images, labels, mult: MultLut) -> dict:
    exact = MultLut.exact(8, "signed")
    acc_ref = accuracy(model, images, labels, exact)
    acc = accuracy(model, images, labels, mult)
    return {"accuracy": acc, "accuracy_exact": acc_ref, "delta": acc - acc_ref,
            "n_images": int(len(labels))}
