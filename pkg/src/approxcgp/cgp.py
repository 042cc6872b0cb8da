"""CGP chromosome, validation, decoding to an active-only netlist, and area."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gates import DEFAULT_GATES, GateFn, GateSet

N_A = 2


class GenomeLengthError(ValueError):
    """Gene string length differs from r*c*(n_a+1)+n_o."""


class InvalidGenomeError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(f"genome violates invariants at gene indices {self.violations[:10]}"
                         + (" ..." if len(self.violations) > 10 else ""))


@dataclass(frozen=True)
class CgpParams:
    n_i: int
    n_o: int
    r: int
    c: int
    n_a: int = N_A
    gamma: GateSet = field(default=DEFAULT_GATES, compare=False, repr=False)

    def __post_init__(self):
        if self.n_i < 1 or self.n_o < 1 or self.r < 1 or self.c < 1:
            raise ValueError(f"n_i, n_o, r, c must all be >= 1: {self}")
        if self.n_a != N_A:
            raise ValueError("only n_a = 2 is supported")
        if not isinstance(self.gamma, GateSet):
            object.__setattr__(self, "gamma", GateSet(self.gamma))

    @property
    def n_nodes(self) -> int:
        return self.r * self.c

    @property
    def n_addresses(self) -> int:
        return self.n_i + self.r * self.c

    @property
    def size(self) -> int:
        return genome_size(self)

    def max_source(self, node: int) -> int:
        """Exclusive upper bound for the connection genes of a node index (0-based)."""
        return self.n_i + (node // self.r) * self.r

    def gene_bounds(self) -> np.ndarray:
        """Exclusive upper bound of every gene position, in gene order."""
        per_node = np.empty((self.n_nodes, self.n_a + 1), dtype=np.int64)
        cols = np.arange(self.n_nodes) // self.r
        per_node[:, 0] = self.n_i + cols * self.r
        per_node[:, 1] = per_node[:, 0]
        per_node[:, 2] = len(self.gamma)
        outs = np.full(self.n_o, self.n_addresses, dtype=np.int64)
        return np.concatenate([per_node.ravel(), outs])


def genome_size(params: CgpParams) -> int:
    return params.r * params.c * (params.n_a + 1) + params.n_o


class Genome:
    """Integer gene string plus the grid parameters. Immutable."""

    __slots__ = ("params", "genes")

    def __init__(self, params: CgpParams, genes):
        genes = np.array(genes, dtype=np.int64)
        if genes.ndim != 1 or genes.size != genome_size(params):
            raise GenomeLengthError(
                f"expected {genome_size(params)} genes, got {genes.size}")
        genes.flags.writeable = False
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "genes", genes)

    def __setattr__(self, name, value):
        raise AttributeError("Genome is immutable")

    def __eq__(self, other):
        return (isinstance(other, Genome) and self.params == other.params
                and self.params.gamma == other.params.gamma
                and np.array_equal(self.genes, other.genes))

    def __hash__(self):
        return hash((self.params, self.genes.tobytes()))

    def __repr__(self):
        p = self.params
        return f"Genome(n_i={p.n_i}, n_o={p.n_o}, r={p.r}, c={p.c}, |Γ|={len(p.gamma)})"

    def node_genes(self, node: int) -> np.ndarray:
        return self.genes[3 * node:3 * node + 3]

    @property
    def output_genes(self) -> np.ndarray:
        return self.genes[3 * self.params.n_nodes:]

    def with_genes(self, genes) -> "Genome":
        return Genome(self.params, genes)

    # text format ---------------------------------------------------------
    def to_text(self) -> str:
        p = self.params
        head = f"cgp {p.n_i} {p.n_o} {p.r} {p.c} {p.n_a} {len(p.gamma)}"
        body = []
        nn = p.n_nodes
        for k in range(nn):
            body.append(" ".join(str(int(g)) for g in self.genes[3 * k:3 * k + 3]))
        body.append(" ".join(str(int(g)) for g in self.genes[3 * nn:]))
        return head + "\n" + "\n".join(body) + "\n"

    @classmethod
    def from_text(cls, text: str, gamma: GateSet | None = None) -> "Genome":
        tokens = text.split()
        if len(tokens) < 7 or tokens[0] != "cgp":
            raise ValueError("not a genome file: header must be 'cgp n_i n_o r c n_a |Γ|'")
        n_i, n_o, r, c, n_a, n_fn = (int(t) for t in tokens[1:7])
        gamma = DEFAULT_GATES if gamma is None else gamma
        if len(gamma) != n_fn:
            raise ValueError(f"genome declares |Γ|={n_fn} but gate set has {len(gamma)} entries")
        params = CgpParams(n_i, n_o, r, c, n_a, gamma)
        return cls(params, [int(t) for t in tokens[7:]])

    def save(self, path, write_gates: bool = True) -> None:
        path = Path(path)
        path.write_text(self.to_text())
        if write_gates:
            self.params.gamma.to_csv(gates_sidecar(path))

    @classmethod
    def load(cls, path) -> "Genome":
        path = Path(path)
        side = gates_sidecar(path)
        gamma = GateSet.from_csv(side) if side.exists() else None
        return cls.from_text(path.read_text(), gamma)


def gates_sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".gates.csv")


def validate(genome: Genome) -> list[int]:
    """Indices of every gene that breaks the genome invariants (empty when valid)."""
    p = genome.params
    if genome.genes.size != genome_size(p):
        raise GenomeLengthError(f"expected {genome_size(p)} genes, got {genome.genes.size}")
    hi = p.gene_bounds()
    g = genome.genes
    bad = np.nonzero((g < 0) | (g >= hi))[0]
    return [int(i) for i in bad]


@dataclass(frozen=True)
class Gate:
    address: int
    fn: GateFn
    fanin: tuple[int, ...]


@dataclass(frozen=True)
class Netlist:
    """Active gates only, topologically ordered by address."""

    n_i: int
    gates: tuple[Gate, ...]
    outputs: tuple[int, ...]
    gamma: GateSet = field(default=DEFAULT_GATES, compare=False, repr=False)

    @property
    def n_o(self) -> int:
        return len(self.outputs)

    @property
    def active_count(self) -> int:
        return len(self.gates)

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(f"x{k}" for k in range(self.n_i))

    def compact(self) -> "Netlist":
        """Renumber gate addresses densely (n_i, n_i+1, ...) keeping order."""
        remap = {a: a for a in range(self.n_i)}
        gates = []
        for k, g in enumerate(self.gates):
            remap[g.address] = self.n_i + k
            gates.append(Gate(self.n_i + k, g.fn, tuple(remap[a] for a in g.fanin)))
        return Netlist(self.n_i, tuple(gates), tuple(remap[a] for a in self.outputs), self.gamma)

    def to_genome(self, spare: int = 0) -> Genome:
        """Re-encode as a single-row genome; `spare` unused nodes are appended."""
        net = self.compact()
        n = max(1, net.active_count + spare)
        params = CgpParams(self.n_i, self.n_o, 1, n, N_A, self.gamma)
        genes = []
        for g in net.gates:
            a = g.fanin[0]
            b = g.fanin[1] if len(g.fanin) > 1 else a
            genes += [a, b, g.fn.id]
        for _ in range(n - net.active_count):
            genes += [0, 0, 0]
        genes += list(net.outputs)
        return Genome(params, genes)


def active_mask(genome: Genome) -> np.ndarray:
    p = genome.params
    g = genome.genes
    arity = [fn.arity for fn in p.gamma]
    mark = np.zeros(p.n_nodes, dtype=bool)
    for a in genome.output_genes:
        if a >= p.n_i:
            mark[a - p.n_i] = True
    for nd in range(p.n_nodes - 1, -1, -1):
        if not mark[nd]:
            continue
        a, b, f = g[3 * nd:3 * nd + 3]
        if a >= p.n_i:
            mark[a - p.n_i] = True
        if arity[f] == 2 and b >= p.n_i:
            mark[b - p.n_i] = True
    return mark


def decode(genome: Genome) -> Netlist:
    bad = validate(genome)
    if bad:
        raise InvalidGenomeError(bad)
    p = genome.params
    mark = active_mask(genome)
    gates = []
    for nd in np.nonzero(mark)[0]:
        a, b, f = (int(v) for v in genome.node_genes(nd))
        fn = p.gamma[f]
        fanin = (a,) if fn.arity == 1 else (a, b)
        gates.append(Gate(p.n_i + int(nd), fn, fanin))
    outs = tuple(int(a) for a in genome.output_genes)
    return Netlist(p.n_i, tuple(gates), outs, p.gamma)


def gate_counts(netlist: Netlist) -> np.ndarray:
    counts = np.zeros(len(netlist.gamma), dtype=np.int64)
    for g in netlist.gates:
        counts[g.fn.id] += 1
    return counts


def area(netlist: Netlist) -> float:
    """Sum of cell costs over active gates.

    Summed per gate type in id order so equal gate multisets give identical
    floats regardless of netlist order.
    """
    counts = gate_counts(netlist)
    total = 0.0
    for fn, n in zip(netlist.gamma, counts):
        total += float(n) * fn.cost
    return total
