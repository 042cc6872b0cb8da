"""(1 + lambda) search for small circuits under a WMED ceiling, and Pareto sweeps."""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from .cgp import Genome, InvalidGenomeError, area, decode, validate
from .metrics import Pmf, wmed
from .sim import as_function, simulate_all

INFEASIBLE = math.inf
BLOCK_WORDS = 16


class RngStream:
    """Deterministic random stream keyed by (seed, generation, index).

    Offspring k of generation g always uses stream (seed, g, k), so the
    offspring sequence does not depend on evaluation order.
    """

    def __init__(self, seed: int, generation: int = 0, index: int = 0):
        if not 0 <= seed < 2 ** 63:
            raise ValueError("rng seed must be in [0, 2**63)")
        self.key = (seed, generation, index)
        self.state = np.zeros(1, dtype=np.uint64)
        K.stream_state(seed, generation, index, self.state)

    def randbelow(self, n: int) -> int:
        return int(K.randbelow(self.state, n))


def mutate(parent: Genome, h: int, rng: RngStream) -> Genome:
    """Regenerate between 1 and h randomly chosen genes within their legal ranges."""
    if h < 1:
        raise ValueError("h must be >= 1")
    p = parent.params
    arity, _, _ = p.gamma.arrays()
    child = np.empty_like(parent.genes)
    mark = np.zeros(p.n_nodes, dtype=np.bool_)
    act = np.empty(p.n_nodes, dtype=np.int64)
    genes = np.ascontiguousarray(parent.genes)
    K.active_nodes(genes, p.n_i, p.n_o, p.n_nodes, arity, mark, act)
    touched = np.zeros(h, dtype=np.int64)
    K.mutate(genes, child, rng.state, h, p.n_i, p.r, p.n_nodes, p.n_o, len(p.gamma),
             arity, mark, touched)
    return Genome(p, child)


def _check_multiplier(genome: Genome, pmf: Pmf):
    p = genome.params
    if p.n_i != 2 * pmf.w or p.n_o != 2 * pmf.w:
        raise ValueError(f"genome with {p.n_i} inputs/{p.n_o} outputs is not a "
                         f"{pmf.w}-bit multiplier")


def candidate_wmed(candidate: Genome, pmf: Pmf) -> float:
    """WMED of a multiplier genome via decode -> simulate -> metric."""
    _check_multiplier(candidate, pmf)
    table = as_function(simulate_all(candidate), pmf.signedness)
    return wmed(table, pmf.w, pmf.signedness, pmf)


def fitness(candidate: Genome, pmf: Pmf, target_error: float) -> float:
    """Area when WMED <= target (inclusive), otherwise infinity."""
    net = decode(candidate)
    if candidate_wmed(candidate, pmf) <= target_error:
        return area(net)
    return INFEASIBLE


@dataclass
class EvoConfig:
    seed_genome: Genome
    pmf: Pmf
    target_error: float
    lam: int = 4
    h: int = 5
    iterations: int = 10 ** 6
    rng_seed: int = 42

    def __post_init__(self):
        if self.lam < 1 or self.h < 1 or self.iterations < 1:
            raise ValueError("lambda, h and iterations must all be >= 1")
        if not self.target_error >= 0:
            raise ValueError("target error must be >= 0")
        _check_multiplier(self.seed_genome, self.pmf)

    def describe(self) -> dict:
        p = self.seed_genome.params
        return {
            "lambda": self.lam, "h": self.h, "iterations": self.iterations,
            "target_error": self.target_error, "rng_seed": self.rng_seed,
            "w": self.pmf.w, "signedness": self.pmf.signedness,
            "grid": {"n_i": p.n_i, "n_o": p.n_o, "r": p.r, "c": p.c},
        }


@dataclass
class RunLog:
    best_fitness: np.ndarray
    best_wmed: np.ndarray
    active: np.ndarray
    final: Genome
    final_wmed: float
    final_area: float
    evaluations: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def generations(self) -> int:
        return int(self.best_fitness.size)

    def records(self, every: int = 1):
        n = self.generations
        for g in range(n):
            if g % every and g != n - 1:
                continue
            fit = float(self.best_fitness[g])
            yield {
                "generation": g,
                "best_fitness": fit if math.isfinite(fit) else None,
                "best_wmed": float(self.best_wmed[g]),
                "active": int(self.active[g]),
            }

    def to_jsonl(self, path, every: int = 1) -> None:
        with open(path, "w") as fh:
            for rec in self.records(every):
                fh.write(json.dumps(rec) + "\n")


class _Problem:
    """Compiled-kernel inputs shared by every run on one (seed grid, pmf)."""

    def __init__(self, genome: Genome, pmf: Pmf):
        p = genome.params
        self.params = p
        self.arity, self.opcode, self.cost = p.gamma.arrays()
        w = pmf.w
        self.w = w
        self.signed = pmf.signed
        self.n_vec = 1 << (2 * w)
        self.nwords = K.n_words(2 * w)
        k = np.arange(self.n_vec, dtype=np.int64)
        mask = (1 << w) - 1
        i = k & mask
        j = k >> w
        if pmf.signed:
            i = np.where(i >= 1 << (w - 1), i - (1 << w), i)
            j = np.where(j >= 1 << (w - 1), j - (1 << w), j)
        self.exact = i * j
        self.p = np.ascontiguousarray(pmf.p, dtype=np.float64)
        self.block = min(BLOCK_WORDS, self.nwords)
        nblocks = -(-self.nwords // self.block)
        bits = max(1, (nblocks - 1).bit_length())
        rev = [int(format(b, f"0{bits}b")[::-1], 2) for b in range(1 << bits)]
        self.order = np.array([b for b in rev if b < nblocks], dtype=np.int64)
        self.scale = float(1 << (2 * w))

    def threshold(self, target_error: float) -> float:
        return target_error * self.scale

    def run(self, genes, target_error, lam, h, iterations, seed):
        fit = np.empty(iterations, dtype=np.float64)
        tot = np.empty(iterations, dtype=np.float64)
        act = np.empty(iterations, dtype=np.int64)
        p = self.params
        final, evals = K.evolve_loop(
            np.ascontiguousarray(genes, dtype=np.int64), p.n_i, p.n_o, p.r, p.n_nodes,
            self.arity, self.opcode, self.cost, self.n_vec, self.nwords, self.w, self.exact,
            self.signed, self.signed, self.p, self.threshold(target_error), lam, h,
            iterations, seed, self.block, self.order, fit, tot, act)
        return final, int(evals), fit, tot / self.scale, act


def evolve(config: EvoConfig) -> tuple[Genome, RunLog]:
    seed = config.seed_genome
    bad = validate(seed)
    if bad:
        raise InvalidGenomeError(bad)
    prob = _Problem(seed, config.pmf)
    t0 = time.perf_counter()
    genes, evals, fit, wm, act = prob.run(seed.genes, config.target_error, config.lam,
                                          config.h, config.iterations, config.rng_seed)
    wall = time.perf_counter() - t0
    best = Genome(seed.params, genes)
    # independent recheck through decode/simulate/metric
    final_wmed = candidate_wmed(best, config.pmf)
    final_area = area(decode(best))
    if math.isfinite(fit[-1]):
        if final_wmed > config.target_error or final_area != fit[-1]:
            raise AssertionError("evolved genome failed the post-run feasibility recheck")
    log = RunLog(fit, wm, act, best, final_wmed, final_area, evals, wall)
    return best, log


# --- Pareto sweeps ------------------------------------------------------------------------

@dataclass
class ParetoPoint:
    target: float
    wmed: float
    area: float
    genome: Genome
    repeat: int = 0
    rng_seed: int = 0


def derive_seed(base: int, target: float, repeat: int) -> int:
    """Per-run seed keyed by the target value itself, so a target's result
    does not depend on its position in the sweep list."""
    key = int(np.float64(target).view(np.int64))
    st = np.zeros(1, dtype=np.uint64)
    K.stream_state(base, key, repeat, st)
    return int(K.next_u64(st) >> np.uint64(1))


def non_dominated(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Drop dominated points and exact (wmed, area) duplicates; sort by wmed."""
    keep = []
    for a in points:
        dominated = any(
            (b.wmed <= a.wmed and b.area <= a.area) and (b.wmed < a.wmed or b.area < a.area)
            for b in points)
        if dominated:
            continue
        if any(b.wmed == a.wmed and b.area == a.area for b in keep):
            continue
        keep.append(a)
    return sorted(keep, key=lambda q: (q.wmed, q.area, q.target))


class ParetoSet(list):
    """Non-dominated (WMED, area) points, ordered by WMED."""

    def to_csv(self, path, genome_dir=None) -> None:
        path = Path(path)
        genome_dir = Path(genome_dir) if genome_dir is not None else path.parent
        genome_dir.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["target", "wmed", "area", "genome_path"])
            for k, pt in enumerate(self):
                gpath = genome_dir / f"pareto_{k:03d}.cgp"
                pt.genome.save(gpath)
                try:
                    rel = gpath.relative_to(path.parent)
                except ValueError:
                    rel = gpath
                wr.writerow([repr(pt.target), repr(pt.wmed), repr(pt.area), str(rel)])


def pareto_sweep(targets, base: EvoConfig, repeats: int = 1, workers: int = 1,
                 logs: list | None = None) -> ParetoSet:
    """Evolve once per (distinct target, repeat); keep the smallest circuit per
    target, then filter to the non-dominated set.

    ``logs`` receives (target index, repeat, RunLog) with targets indexed in
    ascending order.
    """
    targets = sorted(set(float(t) for t in targets))
    if not targets:
        raise ValueError("at least one target is required")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    jobs = [(ti, t, r) for ti, t in enumerate(targets) for r in range(repeats)]

    def run(job):
        ti, t, r = job
        cfg = EvoConfig(base.seed_genome, base.pmf, t, base.lam, base.h, base.iterations,
                        derive_seed(base.rng_seed, t, r))
        g, log = evolve(cfg)
        return ti, t, r, cfg.rng_seed, g, log

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    if logs is not None:
        logs.extend((ti, r, log) for ti, t, r, s, g, log in results)

    best: dict[int, ParetoPoint] = {}
    for ti, t, r, s, g, log in results:
        if not math.isfinite(log.best_fitness[-1]):
            continue
        pt = ParetoPoint(t, log.final_wmed, log.final_area, g, r, s)
        cur = best.get(ti)
        if cur is None or (pt.area, pt.wmed) < (cur.area, cur.wmed):
            best[ti] = pt
    return ParetoSet(non_dominated([best[ti] for ti in sorted(best)]))
