"""Command-line front end.

Every command writes its outputs plus a ``manifest.json`` holding the full
configuration, the rng seed and the tool version, so a run can be repeated
from the manifest alone. WMED thresholds are given in percent.

Exit codes: 0 ok, 1 usage, 2 I/O, 3 invariant violation, 4 resource guard.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path


from . import __version__
from .cgp import Genome, GenomeLengthError, InvalidGenomeError, area, decode, validate
from .evolution import EvoConfig, evolve, pareto_sweep
from .generators import (gen_adder, gen_broken_array_multiplier, gen_exact_multiplier,
                         gen_truncated_multiplier)
from .metrics import (Pmf, error_report, heatmap_image, heatmap_to_csv, pmf_from_histogram,
                      pmf_gaussian, pmf_preset, pmf_uniform)
from .sim import MAX_INPUTS, ResourceGuardError, as_function, simulate_all

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT, EXIT_RESOURCE = 0, 1, 2, 3, 4
DEFAULT_RNG = 42


class UsageError(Exception):
    pass


class DataError(Exception):
    """A file could not be read or parsed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def data_path(*parts) -> Path:
    return Path(str(resources.files("approxcgp").joinpath("data", *parts)))


def _load(fn, path, *args):
    try:
        return fn(path, *args)
    except (OSError, ValueError, KeyError, UnicodeDecodeError, GenomeLengthError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _manifest(out_dir: Path, args, extra=None) -> None:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {"tool": "approxcgp", "version": __version__, "command": args.command,
           "config": cfg, "rng_seed": getattr(args, "rng", None)}
    if extra:
        doc.update(extra)
    _write_json(out_dir / "manifest.json", doc)


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _percent(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError("WMED targets must be >= 0")
    return v / 100.0


def _percent_list(text: str) -> list[float]:
    return [_percent(t) for t in text.split(",") if t.strip()]


def _signedness(args) -> str:
    return "signed" if getattr(args, "signed", False) else "unsigned"


def _resolve_pmf(args, w: int) -> Pmf:
    """--pmf FILE wins; otherwise --dist preset at the multiplier width."""
    if getattr(args, "pmf", None):
        pmf = _load(Pmf.from_csv, args.pmf)
        if pmf.w != w:
            raise UsageError(f"pmf width {pmf.w} does not match multiplier width {w}")
        return pmf
    return pmf_preset(args.dist, w, _signedness(args))


def _multiplier_width(genome: Genome) -> int:
    p = genome.params
    if p.n_i > MAX_INPUTS:
        raise ResourceGuardError(f"exhaustive evaluation limited to {MAX_INPUTS} inputs, "
                                 f"genome has {p.n_i}")
    if p.n_i % 2 or p.n_o != p.n_i:
        raise UsageError("genome is not a w x w -> 2w multiplier")
    return p.n_i // 2


def _load_genome(path) -> Genome:
    g = _load(Genome.load, path)
    bad = validate(g)
    if bad:
        raise InvalidGenomeError(bad)
    return g


def _load_mult(path, signedness):
    from .bench.lut import load_lut
    return _load(load_lut, path, signedness)


# --- commands ------------------------------------------------------------------------------

def cmd_gen_seed(args) -> int:
    s = _signedness(args)
    if args.kind == "exact-mult":
        g = gen_exact_multiplier(args.w, s)
    elif args.kind == "trunc-mult":
        g = gen_truncated_multiplier(args.w, args.k, s)
    elif args.kind == "bam-mult":
        g = gen_broken_array_multiplier(args.w, args.hbl, args.vbl, s)
    else:
        g = gen_adder(args.w)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    g.save(out)
    net = decode(g)
    _manifest(out.parent, args, {"grid": {"n_i": g.params.n_i, "n_o": g.params.n_o,
                                          "r": g.params.r, "c": g.params.c},
                                 "active_gates": net.active_count, "area": area(net)})
    print(f"{out}: c={g.params.c} active={net.active_count} area={area(net):.1f}")
    return EXIT_OK


def cmd_pmf(args) -> int:
    s = _signedness(args)
    if args.kind == "uniform":
        pmf = pmf_uniform(args.w, s)
    elif args.kind == "gaussian":
        if args.sigma is None or args.mean is None:
            raise UsageError("gaussian pmf needs --mean and --sigma")
        pmf = pmf_gaussian(args.w, args.mean, args.sigma, args.half, s)
    elif args.kind in ("d1", "d2"):
        pmf = pmf_preset(args.kind, args.w, s)
    else:
        from .bench.mlp import QuantMlp, weights_histogram
        model = _load(QuantMlp.load, args.model or data_path("mnist_mlp.qmlp"))
        pmf = pmf_from_histogram(weights_histogram(model), "signed")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    pmf.to_csv(out)
    _manifest(out.parent, args)
    print(f"{out}: w={pmf.w} {pmf.signedness}")
    return EXIT_OK


def cmd_eval(args) -> int:
    g = _load_genome(args.genome)
    w = _multiplier_width(g)
    pmf = _resolve_pmf(args, w)
    table = as_function(simulate_all(g, workers=args.workers), pmf.signedness)
    rep = error_report(table, w, pmf.signedness, pmf)
    net = decode(g)
    doc = rep.to_dict()
    doc.update(area=area(net), active_gates=net.active_count, w=w, signedness=pmf.signedness)
    out = _out_dir(args.out_dir)
    _write_json(out / "report.json", doc)
    _manifest(out, args)
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK


def cmd_heatmap(args) -> int:
    from .bench.images import GrayImage, write_pgm
    g = _load_genome(args.genome)
    w = _multiplier_width(g)
    pmf = _resolve_pmf(args, w)
    table = as_function(simulate_all(g, workers=args.workers), pmf.signedness)
    rep = error_report(table, w, pmf.signedness, pmf, with_heatmap=True)
    out = _out_dir(args.out_dir)
    heatmap_to_csv(rep.heatmap, out / "heatmap.csv")
    write_pgm(GrayImage.from_array(heatmap_image(rep.heatmap)), out / "heatmap.pgm")
    _manifest(out, args, {"wce": rep.wce, "wmed": rep.wmed})
    print(f"{out / 'heatmap.pgm'}: wce={rep.wce}")
    return EXIT_OK


def _evo_base(args, target) -> EvoConfig:
    seed = _load_genome(args.seed)
    pmf = _resolve_pmf(args, _multiplier_width(seed))
    return EvoConfig(seed, pmf, target, args.lam, args.h, args.iterations, args.rng)


def cmd_evolve(args) -> int:
    cfg = _evo_base(args, args.target)
    best, log = evolve(cfg)
    out = _out_dir(args.out_dir)
    best.save(out / "best.cgp")
    log.to_jsonl(out / "run.jsonl", args.log_every)
    _manifest(out, args, {"evolution": cfg.describe(), "evaluations": log.evaluations,
                          "final_wmed": log.final_wmed, "final_area": log.final_area})
    feasible = log.final_wmed <= cfg.target_error
    print(f"wmed={100 * log.final_wmed:.6f}% area={log.final_area:.1f} "
          f"{'feasible' if feasible else 'INFEASIBLE'}")
    return EXIT_OK


def cmd_pareto(args) -> int:
    base = _evo_base(args, args.targets[0])
    logs = []
    front = pareto_sweep(args.targets, base, args.repeats, args.workers, logs)
    out = _out_dir(args.out_dir)
    front.to_csv(out / "pareto.csv", out / "genomes")
    runs = _out_dir(out / "runs")
    for ti, r, log in sorted(logs, key=lambda t: (t[0], t[1])):
        log.to_jsonl(runs / f"target{ti:02d}_rep{r:02d}.jsonl", args.log_every)
    _manifest(out, args, {"evolution": base.describe(), "points": len(front)})
    for pt in front:
        print(f"target={100 * pt.target:g}% wmed={100 * pt.wmed:.6f}% area={pt.area:.1f}")
    return EXIT_OK


def cmd_filter_bench(args) -> int:
    from .bench.images import filter_bench, load_fixture_set
    mult = _load_mult(args.mult, "unsigned")
    fixtures = _load(load_fixture_set, args.images or data_path("images"))
    if not fixtures:
        raise DataError("no <name>.pgm / <name>_noisy.pgm pairs found")
    res = filter_bench(mult, fixtures)
    out = _out_dir(args.out_dir)
    _write_json(out / "filter.json", res)
    _manifest(out, args)
    print(f"mean PSNR {res['mean_psnr']:.4f} dB over {len(fixtures)} images")
    return EXIT_OK


def cmd_nn_bench(args) -> int:
    from .bench.mlp import QuantMlp, load_test_set, nn_bench
    mult = _load_mult(args.mult, "signed")
    model = _load(QuantMlp.load, args.model or data_path("mnist_mlp.qmlp"))
    images, labels = _load(load_test_set, args.test_set or data_path("mnist_test.npz"))
    res = nn_bench(model, images, labels, mult)
    out = _out_dir(args.out_dir)
    _write_json(out / "nn.json", res)
    _manifest(out, args)
    print(f"accuracy {100 * res['accuracy']:.2f}% (exact {100 * res['accuracy_exact']:.2f}%, "
          f"delta {100 * res['delta']:+.2f} pp)")
    return EXIT_OK


# --- parser --------------------------------------------------------------------------------

def _add_pmf_opts(p):
    p.add_argument("--pmf", help="pmf CSV (value,probability); overrides --dist")
    p.add_argument("--dist", default="du", choices=["du", "d1", "d2"],
                   help="preset distribution when no --pmf is given (default du)")
    p.add_argument("--signed", action="store_true", help="two's-complement operands")


def _add_common(p):
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)


def _add_evo_opts(p):
    p.add_argument("--seed", required=True, help="seed genome file")
    _add_pmf_opts(p)
    p.add_argument("--lam", type=int, default=4, help="offspring per generation")
    p.add_argument("--h", type=int, default=5, help="max mutated genes per offspring")
    p.add_argument("--iterations", type=int, default=10 ** 6)
    p.add_argument("--rng", type=int, default=DEFAULT_RNG)
    p.add_argument("--log-every", type=int, default=1)
    _add_common(p)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="approxcgp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"approxcgp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-seed", help="write a conventional circuit as a genome")
    p.add_argument("--kind", default="exact-mult",
                   choices=["exact-mult", "trunc-mult", "bam-mult", "adder"])
    p.add_argument("--w", type=int, default=8)
    p.add_argument("--signed", action="store_true")
    p.add_argument("--k", type=int, default=0, help="truncated columns")
    p.add_argument("--hbl", type=int, default=0, help="horizontal break level")
    p.add_argument("--vbl", type=int, default=0, help="vertical break level")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_seed)

    p = sub.add_parser("pmf", help="write an operand distribution as CSV")
    p.add_argument("--kind", default="uniform",
                   choices=["uniform", "gaussian", "d1", "d2", "weights"])
    p.add_argument("--w", type=int, default=8)
    p.add_argument("--signed", action="store_true")
    p.add_argument("--mean", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--half", action="store_true", help="half-normal with mode at --mean")
    p.add_argument("--model", help="quantised model for --kind weights (default: shipped)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pmf)

    for name, fn, text in (("eval", cmd_eval, "error report for a multiplier genome"),
                           ("heatmap", cmd_heatmap, "per-pair error matrix as CSV and PGM")):
        p = sub.add_parser(name, help=text)
        p.add_argument("genome")
        _add_pmf_opts(p)
        _add_common(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("evolve", help="one (1+lambda) run under a WMED ceiling")
    p.add_argument("--target", type=_percent, required=True, help="WMED ceiling in percent")
    _add_evo_opts(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("pareto", help="sweep several WMED targets into a Pareto set")
    p.add_argument("--targets", type=_percent_list, required=True,
                   help="comma-separated WMED targets in percent")
    p.add_argument("--repeats", type=int, default=1)
    _add_evo_opts(p)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("filter-bench", help="Gaussian filter PSNR with a multiplier")
    p.add_argument("--mult", required=True, help="genome file or raw LUT")
    p.add_argument("--images", help="fixture directory (default: shipped set)")
    _add_common(p)
    p.set_defaults(func=cmd_filter_bench)

    p = sub.add_parser("nn-bench", help="MNIST accuracy with a signed 8-bit multiplier")
    p.add_argument("--mult", required=True, help="genome file or raw LUT")
    p.add_argument("--model")
    p.add_argument("--test-set")
    _add_common(p)
    p.set_defaults(func=cmd_nn_bench)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        if getattr(args, "log_every", 1) < 1:
            raise UsageError("--log-every must be >= 1")
        if getattr(args, "targets", None) == []:
            raise UsageError("--targets needs at least one value")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ResourceGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidGenomeError, AssertionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
