"""Exhaustive gate-level simulation of netlists and genomes."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .cgp import Genome, Netlist, decode

MAX_INPUTS = 24


class ResourceGuardError(RuntimeError):
    """Raised when an exhaustive pass would exceed the input-count guard."""


@dataclass(frozen=True, eq=False)
class TruthTables:
    """One packed bit-vector per output; bit k is the output on input vector k.

    ``words`` has shape (n_o, max(1, 2**n_i // 64)) and dtype int64; bits past
    2**n_i in the last word are zero.
    """

    n_i: int
    n_o: int
    words: np.ndarray

    @property
    def n_vectors(self) -> int:
        return 1 << self.n_i

    def bit(self, o: int, k: int) -> int:
        return int((int(self.words[o, k >> 6]) >> (k & 63)) & 1)

    def bits(self, o: int) -> np.ndarray:
        raw = self.words[o].view(np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.n_vectors]

    def values(self, signed: bool = False) -> np.ndarray:
        """Integer value of the output word for every input vector."""
        return K.unpack_values(self.words, self.n_vectors, signed)

    def __eq__(self, other):
        return (isinstance(other, TruthTables) and self.n_i == other.n_i
                and self.n_o == other.n_o and np.array_equal(self.words, other.words))

    def to_bytes(self) -> bytes:
        """Raw little-endian dump, outputs concatenated, ceil(2**n_i/8) bytes each."""
        nbytes = max(1, self.n_vectors // 8)
        return b"".join(self.words[o].astype("<i8").tobytes()[:nbytes] for o in range(self.n_o))

    @classmethod
    def from_bytes(cls, data: bytes, n_i: int, n_o: int) -> "TruthTables":
        nbytes = max(1, (1 << n_i) // 8)
        nw = K.n_words(n_i)
        words = np.zeros((n_o, nw), dtype=np.int64)
        for o in range(n_o):
            chunk = data[o * nbytes:(o + 1) * nbytes].ljust(nw * 8, b"\0")
            words[o] = np.frombuffer(chunk, dtype="<i8")
        return cls(n_i, n_o, words)

    def to_csv(self, path, signed: bool = False) -> None:
        vals = self.values(signed)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["k", "out_value"])
            for k, v in enumerate(vals):
                wr.writerow([k, int(v)])


def simulate_naive(netlist: Netlist, vector) -> list[int]:
    """Gate-by-gate evaluation of one input vector (sequence of 0/1, input 0 first)."""
    vector = [int(v) for v in vector]
    if len(vector) != netlist.n_i:
        raise ValueError(f"expected {netlist.n_i} input bits, got {len(vector)}")
    val = dict(enumerate(vector))
    for g in netlist.gates:
        a = val[g.fanin[0]]
        b = val[g.fanin[1]] if len(g.fanin) > 1 else 0
        val[g.address] = g.fn(a, b)
    return [val[a] for a in netlist.outputs]


def _as_genome(circuit) -> Genome:
    if isinstance(circuit, Genome):
        return circuit
    if isinstance(circuit, Netlist):
        return circuit.to_genome()
    raise TypeError(f"expected Genome or Netlist, got {type(circuit).__name__}")


def simulate_all(circuit, workers: int = 1) -> TruthTables:
    """Truth tables over all 2**n_i input vectors.

    Accepts a Genome (decoded on the fly, inactive nodes skipped) or a Netlist.
    With ``workers > 1`` the word range is split across threads; the result
    is bit-identical to the sequential pass.
    """
    genome = _as_genome(circuit)
    p = genome.params
    if p.n_i > MAX_INPUTS:
        raise ResourceGuardError(f"exhaustive simulation limited to {MAX_INPUTS} inputs, got {p.n_i}")
    if isinstance(circuit, Genome):
        decode(genome)  # validation
    arity, opcode, _ = p.gamma.arrays()
    genes = np.ascontiguousarray(genome.genes)
    nw = K.n_words(p.n_i)
    out = np.zeros((p.n_o, nw), dtype=np.int64)
    chunk = 1 << 12
    spans = [(w0, min(chunk, nw - w0)) for w0 in range(0, nw, chunk)]

    def run(span):
        w0, n = span
        part = np.empty((p.n_o, n), dtype=np.int64)
        K.sim_tables(genes, p.n_i, p.n_o, p.n_nodes, arity, opcode, w0, n, part)
        out[:, w0:w0 + n] = part

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(run, spans))
    else:
        for s in spans:
            run(s)
    n_vec = 1 << p.n_i
    if n_vec < 64:
        out &= (1 << n_vec) - 1
    return TruthTables(p.n_i, p.n_o, out)


def operand_values(w: int, signed: bool) -> np.ndarray:
    """Operand values in ascending order (the index order used by Pmf and LUTs)."""
    if signed:
        return np.arange(-(1 << (w - 1)), 1 << (w - 1), dtype=np.int64)
    return np.arange(0, 1 << w, dtype=np.int64)


def decode_operand(bits, w: int, signed: bool):
    bits = np.asarray(bits, dtype=np.int64)
    if signed:
        return np.where(bits >= (1 << (w - 1)), bits - (1 << w), bits)
    return bits


def as_function(tables: TruthTables, signedness="unsigned", out_width: int | None = None) -> np.ndarray:
    """Product table M[i_idx, j_idx] over ascending operand values.

    Operand i occupies the low w input bits. The output word is decoded as
    two's complement when signed.
    """
    signed = _signed(signedness)
    if tables.n_i % 2:
        raise ValueError("as_function needs an even number of inputs (two w-bit operands)")
    if out_width is None:
        out_width = tables.n_o
    if out_width != tables.n_o:
        raise ValueError(f"out_width {out_width} does not match {tables.n_o} outputs")
    w = tables.n_i // 2
    vals = tables.values(signed).reshape(1 << w, 1 << w)  # [j_bits, i_bits]
    order = operand_values(w, signed) & ((1 << w) - 1)
    return np.ascontiguousarray(vals[np.ix_(order, order)].T)


def _signed(signedness) -> bool:
    if signedness in ("signed", True):
        return True
    if signedness in ("unsigned", False, None):
        return False
    raise ValueError(f"signedness must be 'signed' or 'unsigned', got {signedness!r}")


def product_table(genome: Genome, signedness="unsigned", workers: int = 1) -> np.ndarray:
    """Shorthand: simulate a multiplier genome and return its value table."""
    return as_function(simulate_all(genome, workers), signedness)
