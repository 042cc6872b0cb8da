"""Behavioural multiplier: a full product table built from a genome."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..cgp import Genome
from ..sim import as_function, operand_values, simulate_all


@dataclass(frozen=True, eq=False)
class MultLut:
    """table[i_idx, j_idx] = M(i, j), indices in ascending operand-value order.

    Operand i is the weighted operand (filter coefficient, NN weight).
    """

    w: int
    signed: bool
    table: np.ndarray

    def __post_init__(self):
        n = 1 << self.w
        t = np.ascontiguousarray(self.table, dtype=np.int64)
        if t.shape != (n, n):
            raise ValueError(f"LUT must be {n}x{n}, got {t.shape}")
        t.flags.writeable = False
        object.__setattr__(self, "table", t)

    @property
    def offset(self) -> int:
        """Add to an operand value to get its table index."""
        return (1 << (self.w - 1)) if self.signed else 0

    @property
    def signedness(self) -> str:
        return "signed" if self.signed else "unsigned"

    def __call__(self, i, j):
        return self.table[np.asarray(i) + self.offset, np.asarray(j) + self.offset]

    def is_exact(self) -> bool:
        v = operand_values(self.w, self.signed)
        return bool(np.array_equal(self.table, np.outer(v, v)))

    @classmethod
    def exact(cls, w: int = 8, signedness="unsigned") -> "MultLut":
        signed = signedness in ("signed", True)
        v = operand_values(w, signed)
        return cls(w, signed, np.outer(v, v))

    @classmethod
    def from_genome(cls, genome: Genome, signedness="unsigned") -> "MultLut":
        p = genome.params
        if p.n_i % 2 or p.n_o != p.n_i:
            raise ValueError("genome is not a w x w -> 2w multiplier")
        signed = signedness in ("signed", True)
        return cls(p.n_i // 2, signed, as_function(simulate_all(genome), signedness))

    def to_raw(self, path) -> None:
        """2**(2w) little-endian int32 values, row-major over [i_idx, j_idx]."""
        Path(path).write_bytes(self.table.astype("<i4").tobytes())

    @classmethod
    def from_raw(cls, path, signedness="unsigned") -> "MultLut":
        data = np.frombuffer(Path(path).read_bytes(), dtype="<i4")
        n2 = data.size
        w2 = n2.bit_length() - 1
        if 1 << w2 != n2 or w2 % 2:
            raise ValueError(f"raw LUT must hold 2**(2w) entries, got {n2}")
        n = 1 << (w2 // 2)
        return cls(w2 // 2, signedness in ("signed", True), data.reshape(n, n).astype(np.int64))


def load_lut(path, signedness="unsigned") -> MultLut:
    """Genome file (simulated here) or raw table, chosen by content."""
    path = Path(path)
    head = path.read_bytes()[:4]
    if head == b"cgp ":
        return MultLut.from_genome(Genome.load(path), signedness)
    return MultLut.from_raw(path, signedness)
