"""Operand distributions and error metrics for approximate multipliers.

All metrics are exhaustive over the 2**w x 2**w operand pairs. Error sums
are accumulated in int64 and only the final weighting by the PMF is done in
floating point, always in ascending operand-value order, so any partition of
the work reproduces the same bits.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from .sim import operand_values


def _signed(signedness) -> bool:
    if signedness in ("signed", True):
        return True
    if signedness in ("unsigned", False, None):
        return False
    raise ValueError(f"signedness must be 'signed' or 'unsigned', got {signedness!r}")


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass over one operand's values, indexed in ascending value order."""

    w: int
    signed: bool
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        if p.shape != (1 << self.w,):
            raise ValueError(f"pmf needs {1 << self.w} entries, got {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("pmf entries must be finite and non-negative")
        if abs(math.fsum(p) - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {math.fsum(p)!r}, not 1")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def values(self) -> np.ndarray:
        return operand_values(self.w, self.signed)

    @property
    def signedness(self) -> str:
        return "signed" if self.signed else "unsigned"

    def __call__(self, x: int) -> float:
        lo = -(1 << (self.w - 1)) if self.signed else 0
        return float(self.p[x - lo])

    def __eq__(self, other):
        return (isinstance(other, Pmf) and self.w == other.w and self.signed == other.signed
                and np.array_equal(self.p, other.p))

    def mix(self, other: "Pmf", a: float) -> "Pmf":
        p = a * self.p + (1.0 - a) * other.p
        return Pmf(self.w, self.signed, p / math.fsum(p))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["value", "probability"])
            for v, q in zip(self.values, self.p):
                wr.writerow([int(v), repr(float(q))])

    @classmethod
    def from_csv(cls, path) -> "Pmf":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        vals = np.array([int(r["value"]) for r in rows], dtype=np.int64)
        probs = np.array([float(r["probability"]) for r in rows])
        n = len(rows)
        w = n.bit_length() - 1
        if n < 2 or 1 << w != n:
            raise ValueError(f"pmf file must have 2**w rows, got {n}")
        signed = bool(vals.min() < 0)
        order = np.argsort(vals)
        if not np.array_equal(vals[order], operand_values(w, signed)):
            raise ValueError("pmf values do not cover the operand range exactly once")
        return cls(w, signed, probs[order])


def pmf_uniform(w: int, signedness="unsigned") -> Pmf:
    if not 1 <= w <= 12:
        raise ValueError("w must be in 1..12")
    n = 1 << w
    return Pmf(w, _signed(signedness), np.full(n, 1.0 / n))


def pmf_gaussian(w: int, mean: float, sigma: float, half: bool = False,
                 signedness="unsigned") -> Pmf:
    """Normal (or half-normal with its mode at ``mean``) density sampled at
    the integer operand values and renormalised over the operand range."""
    if not sigma > 0 or not math.isfinite(sigma):
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 1 <= w <= 12:
        raise ValueError("w must be in 1..12")
    x = operand_values(w, _signed(signedness)).astype(np.float64)
    dens = np.exp(-0.5 * ((x - mean) / sigma) ** 2)
    if half:
        dens[x < mean] = 0.0
    total = math.fsum(dens)
    if total <= 0.0:
        raise ValueError("distribution has no mass inside the operand range")
    return Pmf(w, _signed(signedness), dens / total)


def pmf_from_histogram(counts, signedness="unsigned") -> Pmf:
    counts = np.asarray(counts)
    if counts.ndim != 1:
        raise ValueError("histogram must be one-dimensional")
    if np.any(counts < 0):
        raise ValueError("histogram counts must be non-negative")
    total = int(counts.sum())
    if total <= 0:
        raise ValueError("histogram is empty (all counts zero)")
    n = counts.size
    w = n.bit_length() - 1
    if 1 << w != n:
        raise ValueError(f"histogram needs 2**w bins, got {n}")
    return Pmf(w, _signed(signedness), counts.astype(np.float64) / total)


# Reference distributions for 8-bit operands; other widths scale the
# parameters by 2**w / 256.
PRESETS = {
    "d1": dict(mean=127.5, sigma=32.0, half=False),
    "d2": dict(mean=0.0, sigma=64.0, half=True),
}


def pmf_preset(name: str, w: int = 8, signedness="unsigned") -> Pmf:
    name = name.lower()
    if name in ("du", "uniform"):
        return pmf_uniform(w, signedness)
    try:
        cfg = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown distribution {name!r}; choose d1, d2 or du") from None
    scale = (1 << w) / 256.0
    return pmf_gaussian(w, cfg["mean"] * scale, cfg["sigma"] * scale, cfg["half"], signedness)


# --- metrics -----------------------------------------------------------------------

def product_array(mult, w: int, signedness) -> np.ndarray:
    """Normalise a multiplier (table or callable) to an int64 [i_idx, j_idx] table."""
    n = 1 << w
    if callable(mult):
        v = operand_values(w, _signed(signedness))
        I, J = np.meshgrid(v, v, indexing="ij")
        try:
            table = np.asarray(mult(I, J))
            if table.shape != (n, n):
                raise ValueError
        except Exception:
            table = np.array([[mult(int(i), int(j)) for j in v] for i in v])
        return table.astype(np.int64)
    table = np.asarray(getattr(mult, "table", mult))
    if table.shape != (n, n):
        raise ValueError(f"multiplier table must be {n}x{n}, got {table.shape}")
    return table.astype(np.int64, copy=False)


def abs_errors(mult, w: int, signedness) -> np.ndarray:
    v = operand_values(w, _signed(signedness))
    return np.abs(np.outer(v, v) - product_array(mult, w, signedness))


def row_error_sums(err: np.ndarray) -> np.ndarray:
    """Exact integer sum over j of |i*j - M(i,j)|, per i (value order)."""
    return err.sum(axis=1, dtype=np.int64)


def weighted_total(p: np.ndarray, row_sums: np.ndarray, w: int, signed: bool) -> float:
    """sum_i p(i) * row_sums(i), accumulated in ascending value order."""
    n = 1 << w
    by_bits = np.empty(n, dtype=np.int64)
    by_bits[operand_values(w, signed) & (n - 1)] = row_sums
    return K.weighted_total(np.ascontiguousarray(p, dtype=np.float64), by_bits, w, signed)


def _check(pmf: Pmf, w: int, signedness):
    if pmf.w != w:
        raise ValueError(f"pmf width {pmf.w} does not match multiplier width {w}")
    if pmf.signed != _signed(signedness):
        raise ValueError("pmf signedness does not match multiplier signedness")


def wmed(mult, w: int, signedness, pmf: Pmf, alpha=None) -> float:
    """Weighted mean error distance.

    (1 / 2**(2w)) * sum_i sum_j alpha(i, j) * |i*j - M(i, j)| with
    alpha(i, j) = pmf(i) unless a full weight matrix ``alpha`` is given.
    """
    _check(pmf, w, signedness)
    err = abs_errors(mult, w, signedness)
    scale = float(1 << (2 * w))
    if alpha is not None:
        alpha = np.asarray(alpha, dtype=np.float64)
        if alpha.shape != err.shape:
            raise ValueError("alpha must be a 2**w x 2**w matrix")
        return math.fsum((alpha * err).ravel()) / scale
    return weighted_total(pmf.p, row_error_sums(err), w, pmf.signed) / scale


@dataclass
class ErrorReport:
    wmed: float
    mae: float
    wce: int
    error_rate: float
    heatmap: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("heatmap")
        d["wmed_percent"] = 100.0 * self.wmed
        return d


def error_report(mult, w: int, signedness, pmf: Pmf, with_heatmap: bool = False) -> ErrorReport:
    _check(pmf, w, signedness)
    err = abs_errors(mult, w, signedness)
    n_pairs = 1 << (2 * w)
    rows = row_error_sums(err)
    total = int(rows.sum())
    return ErrorReport(
        wmed=weighted_total(pmf.p, rows, w, pmf.signed) / float(n_pairs),
        mae=total / n_pairs,
        wce=int(err.max()),
        error_rate=int(np.count_nonzero(err)) / n_pairs,
        heatmap=err if with_heatmap else None,
    )


# --- heat-map export ------------------------------------------------------------------

def heatmap_to_csv(heatmap: np.ndarray, path) -> None:
    """Rows are the weighted operand i, columns the second operand j."""
    np.savetxt(path, heatmap, fmt="%d", delimiter=",")


def heatmap_image(heatmap: np.ndarray) -> np.ndarray:
    """8-bit image scaled by the worst-case error; image column = operand i."""
    wce = int(heatmap.max())
    if wce == 0:
        return np.zeros(heatmap.T.shape, dtype=np.uint8)
    img = np.rint(heatmap.T.astype(np.float64) * (255.0 / wce))
    return img.astype(np.uint8)
