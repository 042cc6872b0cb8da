"""Train the shipped 784-300-10 MNIST perceptron and freeze its int8 version.

Uses the 5000-digit MNIST sample bundled with mlxtend (500 per class):
3000 digits for training, the remaining 2000 are exported as the test set.
Requires scikit-learn and mlxtend, which the package itself does not need.

    python scripts/train_mlp.py [--out src/approxcgp/data]
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np
from mlxtend.data import mnist_data
from sklearn.model_selection import train_test_split
from sklearn.neural_network import MLPClassifier

from approxcgp.bench.lut import MultLut
from approxcgp.bench.mlp import (INPUT_FRAC, QuantLayer, QuantMlp, accuracy,
                                 small_weight_fraction)


def frac_bits(max_abs: float, limit: int) -> int:
    """Largest f with round(max_abs * 2**f) <= 127, capped at ``limit``."""
    f = math.floor(math.log2(127.0 / max_abs))
    while round(max_abs * 2.0 ** (f + 1)) <= 127:
        f += 1
    while round(max_abs * 2.0 ** f) > 127:
        f -= 1
    return min(f, limit)


def q8(x: np.ndarray, f: int) -> np.ndarray:
    return np.clip(np.rint(x * 2.0 ** f), -128, 127).astype(np.int8)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                         / "src" / "approxcgp" / "data"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    X, y = mnist_data()
    X = X.astype(np.uint8)
    Xtr, Xte, ytr, yte = train_test_split(X, y, train_size=3000, test_size=2000,
                                          stratify=y, random_state=args.seed)
    clf = MLPClassifier(hidden_layer_sizes=(300,), activation="relu", solver="adam",
                        alpha=1e-3, batch_size=64, max_iter=60, random_state=args.seed)
    xf = (Xtr >> 1) / 128.0
    clf.fit(xf, ytr)
    float_acc = clf.score((Xte >> 1) / 128.0, yte)

    W1, W2 = (w.T for w in clf.coefs_)
    b1, b2 = clf.intercepts_
    fw1 = frac_bits(np.abs(W1).max(), 14)
    fb1 = frac_bits(np.abs(b1).max(), fw1 + INPUT_FRAC)
    hidden = np.maximum(xf @ W1.T + b1, 0.0)
    fo1 = frac_bits(float(np.percentile(hidden, 99.9)), fw1 + INPUT_FRAC)
    fw2 = frac_bits(np.abs(W2).max(), 14)
    fb2 = frac_bits(np.abs(b2).max(), fw2 + fo1)
    layers = (
        QuantLayer(q8(W1, fw1), q8(b1, fb1), fw1, fb1, INPUT_FRAC, fo1, True),
        QuantLayer(q8(W2, fw2), q8(b2, fb2), fw2, fb2, fo1, None, False),
    )
    model = QuantMlp(layers, {})
    q_acc = accuracy(model, Xte, yte, MultLut.exact(8, "signed"))
    meta = {
        "source": "mlxtend mnist_data (5000 digits), stratified 3000/2000 split",
        "split_seed": args.seed,
        "float_accuracy": float_acc,
        "quantized_accuracy": q_acc,
        "small_weight_fraction": small_weight_fraction(model),
    }
    model = QuantMlp(layers, meta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "mnist_mlp.qmlp")
    np.savez_compressed(out / "mnist_test.npz", images=Xte, labels=yte.astype(np.uint8))
    print(json.dumps(meta, indent=2))


if __name__ == "__main__":
    main()
