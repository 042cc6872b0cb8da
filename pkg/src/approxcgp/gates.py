"""Gate function set and the relative cell-area table."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Boolean opcodes understood by the simulators. Gate sets map ids onto these.
OP_BUF, OP_INV, OP_AND, OP_NAND, OP_OR, OP_NOR, OP_XOR, OP_XNOR = range(8)

OPCODES = {
    "BUF": OP_BUF,
    "INV": OP_INV,
    "AND2": OP_AND,
    "NAND2": OP_NAND,
    "OR2": OP_OR,
    "NOR2": OP_NOR,
    "XOR2": OP_XOR,
    "XNOR2": OP_XNOR,
}

# lower-case aliases as they appear in textbook CGP function sets
_ALIASES = {
    "buf": "BUF",
    "not": "INV",
    "not_1": "INV",
    "inv": "INV",
    "and": "AND2",
    "nand": "NAND2",
    "or": "OR2",
    "nor": "NOR2",
    "xor": "XOR2",
    "xnor": "XNOR2",
}


def canonical_name(name: str) -> str:
    if name in OPCODES:
        return name
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown gate function {name!r}") from None


@dataclass(frozen=True)
class GateFn:
    id: int
    name: str
    arity: int
    cost: float

    @property
    def opcode(self) -> int:
        return OPCODES[canonical_name(self.name)]

    def __call__(self, a: int, b: int = 0) -> int:
        return eval_op(self.opcode, a, b)


def eval_op(op: int, a: int, b: int) -> int:
    """Evaluate one opcode on single bits (0/1). Reference semantics."""
    if op == OP_BUF:
        return a
    if op == OP_INV:
        return 1 - a
    if op == OP_AND:
        return a & b
    if op == OP_NAND:
        return 1 - (a & b)
    if op == OP_OR:
        return a | b
    if op == OP_NOR:
        return 1 - (a | b)
    if op == OP_XOR:
        return a ^ b
    if op == OP_XNOR:
        return 1 - (a ^ b)
    raise ValueError(f"bad opcode {op}")


class GateSet(tuple):
    """Ordered function set; position in the tuple is the gene value."""

    def __new__(cls, fns):
        fns = tuple(fns)
        for k, fn in enumerate(fns):
            if fn.id != k:
                raise ValueError(f"gate ids must be 0..{len(fns) - 1} in order, got {fn.id} at {k}")
            if fn.arity not in (1, 2):
                raise ValueError(f"{fn.name}: arity must be 1 or 2")
            if fn.cost < 0:
                raise ValueError(f"{fn.name}: negative cost")
            canonical_name(fn.name)
        return super().__new__(cls, fns)

    def by_name(self, name: str) -> GateFn:
        want = canonical_name(name)
        for fn in self:
            if canonical_name(fn.name) == want:
                return fn
        raise KeyError(name)

    def arrays(self):
        """(arity, opcode, cost) as numpy arrays for the compiled kernels."""
        arity = np.array([fn.arity for fn in self], dtype=np.int64)
        opcode = np.array([fn.opcode for fn in self], dtype=np.int64)
        cost = np.array([fn.cost for fn in self], dtype=np.float64)
        return arity, opcode, cost

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["id", "name", "arity", "cost"])
            for fn in self:
                wr.writerow([fn.id, fn.name, fn.arity, repr(fn.cost)])

    @classmethod
    def from_csv(cls, path) -> "GateSet":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        fns = [GateFn(int(r["id"]), r["name"], int(r["arity"]), float(r["cost"])) for r in rows]
        return cls(sorted(fns, key=lambda f: f.id))


# Relative cell areas in NAND2 equivalents.
DEFAULT_GATES = GateSet([
    GateFn(0, "BUF", 1, 0.6),
    GateFn(1, "INV", 1, 0.6),
    GateFn(2, "AND2", 2, 1.4),
    GateFn(3, "NAND2", 2, 1.0),
    GateFn(4, "OR2", 2, 1.4),
    GateFn(5, "NOR2", 2, 1.0),
    GateFn(6, "XOR2", 2, 2.2),
    GateFn(7, "XNOR2", 2, 2.2),
])


def load_gate_set(path: str | Path | None) -> GateSet:
    if path is None:
        return DEFAULT_GATES
    return GateSet.from_csv(path)
