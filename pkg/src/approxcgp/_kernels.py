# Compiled inner loops. Truth tables are packed 64 vectors per int64 word;
# vector k sets input i to bit i of k.
from __future__ import annotations

import numpy as np
from numba import njit

WORD = 64

_PATTERNS = np.array([
    0xAAAAAAAAAAAAAAAA,
    0xCCCCCCCCCCCCCCCC,
    0xF0F0F0F0F0F0F0F0,
    0xFF00FF00FF00FF00,
    0xFFFF0000FFFF0000,
    0xFFFFFFFF00000000,
], dtype=np.uint64).view(np.int64)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)


def n_words(n_i: int) -> int:
    return max(1, (1 << n_i) // WORD)


# --- counter-based RNG (splitmix64) -------------------------------------------

@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, nogil=True)
def stream_state(seed, gen, idx, st):
    s = _mix64(np.uint64(seed) + _GOLDEN)
    s = _mix64(s ^ np.uint64(gen))
    s = _mix64(s ^ (np.uint64(idx) * _GOLDEN))
    st[0] = s


@njit(cache=True, nogil=True)
def next_u64(st):
    st[0] = st[0] + _GOLDEN
    return _mix64(st[0])


@njit(cache=True, nogil=True)
def randbelow(st, n):
    # top 32 bits scaled into [0, n); n < 2**32
    u = next_u64(st) >> _S32
    return np.int64((u * np.uint64(n)) >> _S32)


# --- structure -----------------------------------------------------------------

@njit(cache=True, nogil=True)
def active_nodes(genes, n_i, n_o, n_nodes, arity, mark, act):
    """Mark nodes reachable from outputs; fill `act` in address order, return count."""
    for nd in range(n_nodes):
        mark[nd] = False
    base = 3 * n_nodes
    for o in range(n_o):
        a = genes[base + o]
        if a >= n_i:
            mark[a - n_i] = True
    for nd in range(n_nodes - 1, -1, -1):
        if mark[nd]:
            g = 3 * nd
            a = genes[g]
            if a >= n_i:
                mark[a - n_i] = True
            if arity[genes[g + 2]] == 2:
                b = genes[g + 1]
                if b >= n_i:
                    mark[b - n_i] = True
    n = 0
    for nd in range(n_nodes):
        if mark[nd]:
            act[n] = nd
            n += 1
    return n


@njit(cache=True, nogil=True)
def active_area(genes, act, n_act, cost, counts):
    for f in range(counts.shape[0]):
        counts[f] = 0
    for q in range(n_act):
        counts[genes[3 * act[q] + 2]] += 1
    total = 0.0
    for f in range(counts.shape[0]):
        total += float(counts[f]) * cost[f]
    return total


# --- simulation ----------------------------------------------------------------

@njit(cache=True, nogil=True)
def load_inputs(n_i, vals, word0, nw):
    for i in range(n_i):
        if i < 6:
            pat = _PATTERNS[i]
            for t in range(nw):
                vals[i, t] = pat
        else:
            sh = i - 6
            for t in range(nw):
                vals[i, t] = -1 if ((word0 + t) >> sh) & 1 else 0


@njit(cache=True, nogil=True)
def sim_block(genes, n_i, opcode, act, n_act, vals, word0, nw):
    load_inputs(n_i, vals, word0, nw)
    for q in range(n_act):
        nd = act[q]
        g = 3 * nd
        a = genes[g]
        b = genes[g + 1]
        op = opcode[genes[g + 2]]
        d = n_i + nd
        if op == 0:
            for t in range(nw):
                vals[d, t] = vals[a, t]
        elif op == 1:
            for t in range(nw):
                vals[d, t] = ~vals[a, t]
        elif op == 2:
            for t in range(nw):
                vals[d, t] = vals[a, t] & vals[b, t]
        elif op == 3:
            for t in range(nw):
                vals[d, t] = ~(vals[a, t] & vals[b, t])
        elif op == 4:
            for t in range(nw):
                vals[d, t] = vals[a, t] | vals[b, t]
        elif op == 5:
            for t in range(nw):
                vals[d, t] = ~(vals[a, t] | vals[b, t])
        elif op == 6:
            for t in range(nw):
                vals[d, t] = vals[a, t] ^ vals[b, t]
        else:
            for t in range(nw):
                vals[d, t] = ~(vals[a, t] ^ vals[b, t])


@njit(cache=True, nogil=True)
def sim_tables(genes, n_i, n_o, n_nodes, arity, opcode, word0, nw, out):
    """Output words for vectors [64*word0, 64*(word0+nw)) into out[n_o, nw]."""
    mark = np.zeros(n_nodes, dtype=np.bool_)
    act = np.empty(n_nodes, dtype=np.int64)
    n_act = active_nodes(genes, n_i, n_o, n_nodes, arity, mark, act)
    vals = np.empty((n_i + n_nodes, nw), dtype=np.int64)
    sim_block(genes, n_i, opcode, act, n_act, vals, word0, nw)
    base = 3 * n_nodes
    for o in range(n_o):
        src = genes[base + o]
        for t in range(nw):
            out[o, t] = vals[src, t]


@njit(cache=True, nogil=True)
def unpack_values(tables, n_vec, out_signed):
    """Integer value of the n_o output bits for each vector (output 0 = LSB)."""
    n_o = tables.shape[0]
    res = np.zeros(n_vec, dtype=np.int64)
    for o in range(n_o):
        bit = np.int64(1) << o
        for k in range(n_vec):
            if (tables[o, k >> 6] >> (k & 63)) & 1:
                res[k] |= bit
    if out_signed:
        half = np.int64(1) << (n_o - 1)
        full = np.int64(1) << n_o
        for k in range(n_vec):
            if res[k] >= half:
                res[k] -= full
    return res


# --- error accounting ------------------------------------------------------------

@njit(cache=True, nogil=True)
def accumulate_errors(genes, n_nodes, n_o, vals, word0, nw, n_vec, w, exact, out_signed, S, buf):
    base_out = 3 * n_nodes
    mask = (np.int64(1) << w) - 1
    half = np.int64(1) << (n_o - 1)
    full = np.int64(1) << n_o
    for t in range(nw):
        base = (word0 + t) * 64
        nb = n_vec - base
        if nb > 64:
            nb = 64
        for b in range(nb):
            buf[b] = 0
        for o in range(n_o):
            x = vals[genes[base_out + o], t]
            if x == 0:
                continue
            bit = np.int64(1) << o
            for b in range(nb):
                if (x >> b) & 1:
                    buf[b] |= bit
        for b in range(nb):
            v = buf[b]
            if out_signed and v >= half:
                v -= full
            k = base + b
            e = exact[k] - v
            if e < 0:
                e = -e
            S[k & mask] += e


@njit(cache=True, nogil=True)
def weighted_total(p, S, w, in_signed):
    """sum_value p[value] * S[value] in ascending operand-value order."""
    n = np.int64(1) << w
    mask = n - 1
    lo = -(n >> 1) if in_signed else 0
    tot = 0.0
    for idx in range(n):
        tot += p[idx] * float(S[(lo + idx) & mask])
    return tot


@njit(cache=True, nogil=True)
def score(genes, n_i, n_o, n_nodes, opcode, act, n_act, n_vec, nwords, w, exact,
          in_signed, out_signed, p, thr, early, block, order, vals, S, buf):
    """Weighted error total; stops as soon as the running total exceeds thr when early."""
    for k in range(S.shape[0]):
        S[k] = 0
    nblocks = order.shape[0]
    for bi in range(nblocks):
        word0 = order[bi] * block
        nw = nwords - word0
        if nw > block:
            nw = block
        sim_block(genes, n_i, opcode, act, n_act, vals, word0, nw)
        accumulate_errors(genes, n_nodes, n_o, vals, word0, nw, n_vec, w, exact, out_signed, S, buf)
        if early and bi + 1 < nblocks:
            # float sums of non-negative terms are monotone, so the early
            # decision matches the full-sum decision exactly
            if weighted_total(p, S, w, in_signed) > thr:
                return weighted_total(p, S, w, in_signed), False
    return weighted_total(p, S, w, in_signed), True


# --- variation -------------------------------------------------------------------

@njit(cache=True, nogil=True)
def mutate(parent, child, st, h, n_i, r, n_nodes, n_o, n_fn, arity, mark, touched):
    """Copy parent into child and give 1..h distinct random genes a new legal value.

    Returns True when an active node or an output gene changed value, i.e.
    when the phenotype may differ from the parent's.
    """
    S = parent.shape[0]
    for k in range(S):
        child[k] = parent[k]
    m = 1 + randbelow(st, h)
    if m > S:
        m = S
    for q in range(m):
        # distinct positions
        while True:
            pos = randbelow(st, S)
            dup = False
            for u in range(q):
                if touched[u] == pos:
                    dup = True
            if not dup:
                break
        touched[q] = pos
        if pos < 3 * n_nodes:
            nd = pos // 3
            slot = pos - 3 * nd
            if slot == 2:
                hi = n_fn
            else:
                hi = n_i + (nd // r) * r
        else:
            hi = n_i + r * n_nodes
        if hi > 1:
            v = randbelow(st, hi - 1)
            if v >= child[pos]:
                v += 1
            child[pos] = v
    for q in range(m):
        pos = touched[q]
        if child[pos] == parent[pos]:
            continue
        if pos >= 3 * n_nodes:
            return True
        nd = pos // 3
        if not mark[nd]:
            continue
        slot = pos - 3 * nd
        g = 3 * nd
        if slot == 1 and arity[parent[g + 2]] == 1 and arity[child[g + 2]] == 1:
            continue
        return True
    return False


@njit(cache=True, nogil=True)
def evolve_loop(parent0, n_i, n_o, r, n_nodes, arity, opcode, cost, n_vec, nwords, w, exact,
                in_signed, out_signed, p, thr, lam, h, iterations, seed, block, order,
                log_fit, log_total, log_active):
    S_len = parent0.shape[0]
    n_fn = arity.shape[0]
    parent = parent0.copy()
    children = np.empty((lam, S_len), dtype=np.int64)
    marks = np.zeros((lam, n_nodes), dtype=np.bool_)
    acts = np.empty((lam, n_nodes), dtype=np.int64)
    n_acts = np.zeros(lam, dtype=np.int64)
    pmark = np.zeros(n_nodes, dtype=np.bool_)
    pact = np.empty(n_nodes, dtype=np.int64)
    counts = np.zeros(n_fn, dtype=np.int64)
    vals = np.empty((n_i + n_nodes, block), dtype=np.int64)
    S = np.zeros(np.int64(1) << w, dtype=np.int64)
    buf = np.zeros(64, dtype=np.int64)
    st = np.zeros(1, dtype=np.uint64)
    touched = np.zeros(h, dtype=np.int64)

    pn = active_nodes(parent, n_i, n_o, n_nodes, arity, pmark, pact)
    parea = active_area(parent, pact, pn, cost, counts)
    ptotal, _ = score(parent, n_i, n_o, n_nodes, opcode, pact, pn, n_vec, nwords, w, exact,
                      in_signed, out_signed, p, thr, False, block, order, vals, S, buf)
    pover = ptotal - thr if ptotal > thr else 0.0
    evals = 0

    for gen in range(iterations):
        best_k = -1
        best_over = np.inf
        best_area = np.inf
        best_total = 0.0
        best_neutral = False
        feasible_parent = pover == 0.0
        for k in range(lam):
            stream_state(seed, gen, k, st)
            changed = mutate(parent, children[k], st, h, n_i, r, n_nodes, n_o, n_fn,
                             arity, pmark, touched)
            if not changed:
                c_over = pover
                c_area = parea
                c_total = ptotal
            else:
                na = active_nodes(children[k], n_i, n_o, n_nodes, arity, marks[k], acts[k])
                n_acts[k] = na
                c_area = active_area(children[k], acts[k], na, cost, counts)
                if feasible_parent:
                    if c_area > parea:
                        continue
                    evals += 1
                    c_total, done = score(children[k], n_i, n_o, n_nodes, opcode, acts[k], na,
                                          n_vec, nwords, w, exact, in_signed, out_signed, p,
                                          thr, True, block, order, vals, S, buf)
                    if not done or c_total > thr:
                        continue
                    c_over = 0.0
                else:
                    evals += 1
                    c_total, _ = score(children[k], n_i, n_o, n_nodes, opcode, acts[k], na,
                                       n_vec, nwords, w, exact, in_signed, out_signed, p,
                                       thr, False, block, order, vals, S, buf)
                    c_over = c_total - thr if c_total > thr else 0.0
            if c_over < best_over or (c_over == best_over and c_area < best_area):
                best_k = k
                best_over = c_over
                best_area = c_area
                best_total = c_total
                best_neutral = not changed
        if best_k >= 0 and (best_over < pover or (best_over == pover and best_area <= parea)):
            for q in range(S_len):
                parent[q] = children[best_k, q]
            if not best_neutral:
                for q in range(n_nodes):
                    pmark[q] = marks[best_k, q]
                pn = n_acts[best_k]
                for q in range(pn):
                    pact[q] = acts[best_k, q]
            parea = best_area
            ptotal = best_total
            pover = best_over
        log_fit[gen] = parea if pover == 0.0 else np.inf
        log_total[gen] = ptotal
        log_active[gen] = pn
    return parent, evals
