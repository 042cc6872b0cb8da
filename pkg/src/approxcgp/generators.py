"""Seed circuits and conventional approximate baselines, emitted as genomes.

Multipliers are carry-save (Braun) arrays followed by a ripple-carry merge.
Signed multipliers use the Baugh-Wooley partial-product set. Partial-product
terms are dropped for truncation and broken-array variants, and the builder
folds the resulting constants away, so those variants come out strictly
smaller. Operand ``a`` occupies input bits 0..w-1 and ``b`` bits w..2w-1.
"""
from __future__ import annotations

import math
import random

from .cgp import CgpParams, Genome
from .gates import DEFAULT_GATES, GateSet

SPARE_FRACTION = 0.2


class _Const:
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __repr__(self):
        return f"C{self.v}"


C0 = _Const(0)
C1 = _Const(1)


def _is_const(x):
    return isinstance(x, _Const)


class NetBuilder:
    """Gate-level builder with constant folding and structural hashing."""

    def __init__(self, n_i: int, gamma: GateSet = DEFAULT_GATES):
        self.n_i = n_i
        self.gamma = gamma
        self.nodes: list[tuple[int, int, int]] = []
        self._cache: dict = {}
        self._ids = {name: gamma.by_name(name).id for name in
                     ("BUF", "INV", "AND2", "NAND2", "OR2", "NOR2", "XOR2", "XNOR2")}

    def _gate(self, name, a, b=None):
        commutative = b is not None
        key = (name, a, b) if not commutative else (name, min(a, b), max(a, b))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        addr = self.n_i + len(self.nodes)
        self.nodes.append((a, a if b is None else b, self._ids[name]))
        self._cache[key] = addr
        return addr

    def inv(self, a):
        if _is_const(a):
            return C1 if a.v == 0 else C0
        return self._gate("INV", a)

    def and_(self, a, b):
        if _is_const(a):
            a, b = b, a
        if _is_const(b):
            return b if b.v == 0 else a
        if a == b:
            return a
        return self._gate("AND2", a, b)

    def or_(self, a, b):
        if _is_const(a):
            a, b = b, a
        if _is_const(b):
            return a if b.v == 0 else C1
        if a == b:
            return a
        return self._gate("OR2", a, b)

    def nand(self, a, b):
        if _is_const(a):
            a, b = b, a
        if _is_const(b):
            return C1 if b.v == 0 else self.inv(a)
        return self._gate("NAND2", a, b)

    def xor(self, a, b):
        if _is_const(a):
            a, b = b, a
        if _is_const(b):
            return a if b.v == 0 else self.inv(a)
        if a == b:
            return C0
        return self._gate("XOR2", a, b)

    def xnor(self, a, b):
        if _is_const(a):
            a, b = b, a
        if _is_const(b):
            return self.inv(a) if b.v == 0 else a
        if a == b:
            return C1
        return self._gate("XNOR2", a, b)

    def full_adder(self, a, b, c):
        """(sum, carry) of three nets, simplified for constant inputs."""
        var = [x for x in (a, b, c) if not _is_const(x)]
        k = sum(x.v for x in (a, b, c) if _is_const(x))
        if not var:
            return (C1 if k & 1 else C0), (C1 if k >= 2 else C0)
        if len(var) == 1:
            x = var[0]
            if k == 0:
                return x, C0
            if k == 1:
                return self.inv(x), x
            return x, C1
        if len(var) == 2:
            x, y = var
            if k == 0:
                return self.xor(x, y), self.and_(x, y)
            return self.xnor(x, y), self.or_(x, y)
        t = self.xor(a, b)
        return self.xor(t, c), self.or_(self.and_(a, b), self.and_(c, t))

    def materialize(self, net):
        """Real address for a net; constants become INV+NOR / INV+NAND pairs."""
        if not _is_const(net):
            return net
        x = 0
        nx = self.inv(x)
        return self._gate("NOR2", x, nx) if net.v == 0 else self._gate("NAND2", x, nx)

    def genome(self, outputs, spare_fraction: float = SPARE_FRACTION) -> Genome:
        outs = [self.materialize(o) for o in outputs]
        used = len(self.nodes)
        total = max(1, math.ceil(used * (1.0 + spare_fraction)))
        n_spare = total - used
        # unused slots get pseudo-random legal genes (fixed stream, reproducible)
        rng = random.Random(0x5EED)
        # interleave spare slots evenly so every region of the grid has room
        slots = set()
        if n_spare:
            step = total / n_spare
            slots = {int(step * s + step / 2) for s in range(n_spare)}
        remap = {a: a for a in range(self.n_i)}
        genes = []
        old = 0
        for pos in range(total):
            addr = self.n_i + pos
            if pos in slots:
                genes += [rng.randrange(addr), rng.randrange(addr),
                          rng.randrange(len(self.gamma))]
                continue
            a, b, f = self.nodes[old]
            remap[self.n_i + old] = addr
            genes += [remap[a], remap[b], f]
            old += 1
        genes += [remap[a] for a in outs]
        params = CgpParams(self.n_i, len(outs), 1, total, 2, self.gamma)
        return Genome(params, genes)


# --- partial-product sets -------------------------------------------------------

def _pp_rows(bld: NetBuilder, w: int, signed: bool):
    """Rows of (column, net) partial-product terms; row j belongs to b_j.

    For signed operands the Baugh-Wooley constants occupy a final extra row.
    """
    a = list(range(w))
    b = list(range(w, 2 * w))
    rows = []
    for j in range(w):
        row = []
        for i in range(w):
            if signed and (i == w - 1) != (j == w - 1):
                row.append((i + j, ("nand", a[i], b[j])))
            else:
                row.append((i + j, ("and", a[i], b[j])))
        rows.append(row)
    if signed:
        consts = [(w, ("one",))]
        if 2 * w - 1 != w:
            consts.append((2 * w - 1, ("one",)))
        else:
            consts.append((w, ("one",)))
        rows.append(consts)
    return rows


def _term_net(bld: NetBuilder, term):
    if term[0] == "and":
        return bld.and_(term[1], term[2])
    if term[0] == "nand":
        return bld.nand(term[1], term[2])
    return C1


def _array_multiplier(w: int, signed: bool, keep, gamma: GateSet) -> Genome:
    if not 1 <= w <= 12:
        raise ValueError("operand width must be in 1..12")
    bld = NetBuilder(2 * w, gamma)
    n_cols = 2 * w
    S = [C0] * n_cols
    C = [C0] * n_cols
    for r, row in enumerate(_pp_rows(bld, w, signed)):
        terms = {}
        for col, term in row:
            if keep(r, col):
                terms.setdefault(col, []).append(term)
        # two constant-ones in one column (w == 1 corner) carry upwards
        extra = [[] for _ in range(n_cols + 1)]
        for col in range(n_cols):
            for term in terms.get(col, []):
                extra[col].append(_term_net(bld, term))
        newS = list(S)
        newC = [C0] * n_cols
        for col in range(n_cols):
            x = extra[col][0] if extra[col] else C0
            s, cy = bld.full_adder(S[col], C[col], x)
            for y in extra[col][1:]:
                s, cy2 = bld.full_adder(s, y, C0)
                if col + 1 < n_cols:
                    extra[col + 1].append(cy2)
            newS[col] = s
            if col + 1 < n_cols:
                newC[col + 1] = cy
        S, C = newS, newC
    out = []
    carry = C0
    for col in range(n_cols):
        s, carry = bld.full_adder(S[col], C[col], carry)
        out.append(s)
    return bld.genome(out)


def _signed_flag(signedness) -> bool:
    if signedness in ("signed", True):
        return True
    if signedness in ("unsigned", False, None):
        return False
    raise ValueError(f"signedness must be 'signed' or 'unsigned', got {signedness!r}")


def gen_exact_multiplier(w: int, signedness="unsigned", gamma: GateSet = DEFAULT_GATES) -> Genome:
    return _array_multiplier(w, _signed_flag(signedness), lambda r, c: True, gamma)


def gen_truncated_multiplier(w: int, k: int, signedness="unsigned",
                             gamma: GateSet = DEFAULT_GATES) -> Genome:
    """Array multiplier without any partial product in the k lowest columns."""
    if not 0 <= k < 2 * w:
        raise ValueError("k must satisfy 0 <= k < 2w")
    return _array_multiplier(w, _signed_flag(signedness), lambda r, c: c >= k, gamma)


def gen_broken_array_multiplier(w: int, hbl: int, vbl: int, signedness="unsigned",
                                gamma: GateSet = DEFAULT_GATES) -> Genome:
    """Broken-array multiplier: cells above the horizontal break line (rows
    b_0..b_{hbl-1}) and right of the vertical break line (columns < vbl)
    are omitted together with their partial products."""
    if not (0 <= hbl <= w and 0 <= vbl <= w):
        raise ValueError("break levels must satisfy 0 <= hbl, vbl <= w")
    return _array_multiplier(w, _signed_flag(signedness),
                             lambda r, c: not (r < hbl and c < vbl), gamma)


def gen_adder(w: int, gamma: GateSet = DEFAULT_GATES) -> Genome:
    """Ripple-carry adder a + b with carry-out: 2w inputs, w+1 outputs."""
    if w < 1:
        raise ValueError("w must be >= 1")
    bld = NetBuilder(2 * w, gamma)
    out = []
    carry = C0
    for i in range(w):
        s, carry = bld.full_adder(i, w + i, carry)
        out.append(s)
    out.append(carry)
    return bld.genome(out)


GENERATORS = {
    "exact-mult": gen_exact_multiplier,
    "trunc-mult": gen_truncated_multiplier,
    "bam-mult": gen_broken_array_multiplier,
    "adder": gen_adder,
}
