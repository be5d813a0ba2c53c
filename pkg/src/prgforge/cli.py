"""`forge` command line: compile, sample, certify, attack, check, run.

Exit codes: 0 success, 1 user error (bad arguments, invalid config, refused
certificate), 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from fractions import Fraction
from pathlib import Path

from .errors import ForgeError, UserInputError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise UserInputError(f"cannot parse {text!r} as a rational") from e


def _dims(text: str) -> tuple:
    try:
        dims = tuple(int(p) for p in text.split(","))
    except ValueError as e:
        raise UserInputError(f"cannot parse dims {text!r}") from e
    if not dims or any(v < 1 for v in dims):
        raise UserInputError("dims must be positive integers")
    return dims


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_samples(ss, args, stem: str) -> Path:
    out = _out_dir(args)
    if args.format == "csv":
        path = out / f"{stem}.csv"
        ss.save(path, fmt="csv")
    else:
        path = out / f"{stem}.json"
        doc = {"schema": "samples/1", "meta": ss.meta,
               "data": ss.data.tolist()}
        path.write_text(json.dumps(doc, sort_keys=True))
    return path


def build_parser() -> _Parser:
    p = _Parser(prog="forge",
                description="local-PRG generators, exact ReLU compilation, "
                            "certificates, and distinguisher attacks")
    p.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for compiled kernels")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="sample artifact format (csv or binary+json sidecar)")
    sub = p.add_subparsers(dest="command", required=True)

    cp = sub.add_parser("compile-predicate",
                        help="compile a +-1 truth table to an exact ReLU net")
    src = cp.add_mutually_exclusive_group(required=True)
    src.add_argument("--tsa", action="store_true",
                     help="use the arity-5 tri-sum-and predicate")
    src.add_argument("--table", help="JSON file with a +-1 truth table")
    cp.set_defaults(func=cmd_compile_predicate)

    cc = sub.add_parser("compile-circuit",
                        help="compile a threshold circuit to an exact ReLU net")
    cc.add_argument("--circuit", required=True,
                    help="JSON gate list (ltf-circuit/1)")
    cc.add_argument("--xi-prime", default="auto",
                    help="clamp scale as a rational, or 'auto' for margin/2")
    cc.set_defaults(func=cmd_compile_circuit)

    prg = sub.add_parser("prg", help="sample hypergraphs, evaluate PRGs")
    prg_sub = prg.add_subparsers(dest="prg_command", required=True)
    ps = prg_sub.add_parser("sample", help="sample a random hypergraph")
    ps.add_argument("--m", type=int, required=True)
    ps.add_argument("--d", type=int, required=True)
    ps.add_argument("--k", type=int, default=5)
    ps.set_defaults(func=cmd_prg_sample)
    pe = prg_sub.add_parser("eval", help="evaluate the PRG on seeds")
    pe.add_argument("--graph", required=True)
    pe.add_argument("--seeds", help="sample file of +-1 seed rows")
    pe.add_argument("--n", type=int, help="draw this many random seeds")
    pe.set_defaults(func=cmd_prg_eval)

    gen = sub.add_parser("gen", help="build and sample generators")
    gen_sub = gen.add_subparsers(dest="gen_command", required=True)
    gb = gen_sub.add_parser("build", help="assemble a full generator")
    gb.add_argument("--m", type=int, default=16, help="PRG seed length")
    gb.add_argument("--epsilon", type=_fraction, default=Fraction(1, 8))
    gb.add_argument("--seed-kind", choices=("bits", "gaussian", "box"),
                    default="bits")
    gb.add_argument("--dims", type=_dims, default=(4,),
                    help="target layer dims, e.g. 20,24,30 (single = cube)")
    gb.add_argument("--lambda-leak", type=_fraction, default=Fraction(1, 4))
    gb.add_argument("--graph", help="reuse an existing hypergraph JSON")
    gb.set_defaults(func=cmd_gen_build)
    gs = gen_sub.add_parser("sample", help="draw samples from a saved generator")
    gs.add_argument("--gen", required=True, help="generator directory")
    gs.add_argument("--n", type=int, default=1024)
    gs.set_defaults(func=cmd_gen_sample)

    ce = sub.add_parser("certify",
                        help="diversity certificate for a sampled leaky target")
    ce.add_argument("--dims", type=_dims, required=True)
    ce.add_argument("--lambda-leak", type=_fraction, default=Fraction(1, 4))
    ce.add_argument("--r0", type=_fraction, default=Fraction(1, 3))
    ce.set_defaults(func=cmd_certify)

    at = sub.add_parser("attack",
                        help="distinguish PRG outputs from uniform bits")
    at.add_argument("--method", choices=("scan", "mlp"), required=True)
    at.add_argument("--graph", required=True, help="hypergraph JSON")
    at.add_argument("--depth", type=int, default=2,
                    help="hidden layers for the mlp method")
    at.add_argument("--steps", type=int, default=20000)
    at.add_argument("--n", type=int, default=100000,
                    help="samples per side (scan) / final eval (mlp)")
    at.set_defaults(func=cmd_attack)

    hd = sub.add_parser("hardness", help="range-membership hardness checks")
    hd_sub = hd.add_subparsers(dest="hardness_command", required=True)
    hc = hd_sub.add_parser("check", help="verify the agreement bound exactly")
    hc.add_argument("--m", type=int, required=True)
    hc.add_argument("--d", type=int, required=True)
    hc.add_argument("--k", type=int, default=5)
    hc.add_argument("--test", choices=("constant", "random-ltf"),
                    default="random-ltf")
    hc.set_defaults(func=cmd_hardness_check)

    rn = sub.add_parser("run", help="run a config-driven experiment")
    rn.add_argument("--config", required=True)
    rn.add_argument("--dry-run", action="store_true",
                    help="validate and print the plan without writing")
    rn.set_defaults(func=cmd_run)
    return p


# -- commands --------------------------------------------------------------------------


def cmd_compile_predicate(args) -> int:
    from .compiler import compile_predicate
    from .prg import tsa_predicate

    if args.tsa:
        pred = tsa_predicate()
    else:
        doc = json.loads(Path(args.table).read_text())
        table = doc["table"] if isinstance(doc, dict) else doc
        from .compiler import Predicate
        k = (len(table) - 1).bit_length()
        pred = Predicate(k, table)
    net = compile_predicate(pred)
    path = _out_dir(args) / "predicate_net.json"
    net.save(path)
    pr = net.profile
    print(f"compiled arity-{pred.k} predicate: L={pr.L} S={pr.S} "
          f"tau={pr.tau} lambda={pr.lam:.6g}")
    print(f"wrote {path}")
    return 0


def cmd_compile_circuit(args) -> int:
    from .circuits import LtfCircuit, layer_circuit, ltf_to_relu

    circ = LtfCircuit.load(args.circuit)
    if not circ.is_layered():
        circ = layer_circuit(circ)
        print(f"layered circuit: size {circ.size}, depth {circ.depth}")
    if args.xi_prime == "auto":
        margin, method = circ.min_margin()
        if margin == 0:
            raise UserInputError("zero margin: circuit cannot be compiled")
        xi = margin / 2
        print(f"margin {margin} ({method}); using xi_prime = {xi}")
    else:
        xi = _fraction(args.xi_prime)
    net = ltf_to_relu(circ, xi)
    path = _out_dir(args) / "circuit_net.json"
    net.save(path)
    pr = net.profile
    print(f"compiled circuit: L={pr.L} S={pr.S} tau={pr.tau} "
          f"lambda={pr.lam:.6g}")
    print(f"wrote {path}")
    return 0


def cmd_prg_sample(args) -> int:
    from .prg import sample_hypergraph

    graph = sample_hypergraph(args.m, args.d, args.k, args.seed)
    path = _out_dir(args) / "hypergraph.json"
    graph.save(path)
    print(f"sampled hypergraph m={args.m} d={args.d} k={args.k} "
          f"(multiplicity {graph.multiplicity()})")
    print(f"wrote {path}")
    return 0


def cmd_prg_eval(args) -> int:
    import numpy as np

    from .prg import Hypergraph, LocalPrg, tsa_predicate
    from .samples import SampleSet, make_rng, sample_seeds

    graph = Hypergraph.load(args.graph)
    prg = LocalPrg(graph, tsa_predicate())
    if args.seeds:
        seeds = SampleSet.load(args.seeds).data
        if not np.all(np.abs(seeds) == 1):
            raise UserInputError("seed file must contain +-1 entries")
        seeds = seeds.astype(np.int8)
    elif args.n:
        seeds = sample_seeds("bits", args.n, prg.m,
                             make_rng(args.seed)).astype(np.int8)
    else:
        raise UserInputError("provide --seeds FILE or --n N")
    outs = prg.evaluate_batch(seeds).astype(np.float64)
    ss = SampleSet(outs, meta={"kind": "prg-output", "m": prg.m, "d": prg.d})
    path = _save_samples(ss, args, "prg_outputs")
    print(f"evaluated {len(ss)} seeds; wrote {path}")
    return 0


def cmd_gen_build(args) -> int:
    from .pipeline import (assemble, bits_per_coordinate, sample_target,
                           save_generator)
    from .prg import Hypergraph, LocalPrg, sample_hypergraph, tsa_predicate
    from .samples import make_rng

    rng = make_rng(args.seed)
    target = sample_target(args.dims, args.lambda_leak, rng)
    n_bits = bits_per_coordinate(args.epsilon)
    needed = target.r * n_bits
    if args.graph:
        graph = Hypergraph.load(args.graph)
    else:
        graph = sample_hypergraph(args.m, needed, 5, rng)
    prg = LocalPrg(graph, tsa_predicate())
    spec = assemble(prg, target, args.seed_kind, args.epsilon)
    gen_dir = _out_dir(args) / "generator"
    save_generator(spec, gen_dir)
    pr = spec.network.profile
    print(f"generator: m={spec.m} d={spec.d} seeds={spec.seed_kind} "
          f"eps={args.epsilon}")
    print(f"profile: L={pr.L} S={pr.S} tau={pr.tau} lambda={pr.lam:.6g}")
    for name, claim in sorted(spec.claims["identities"].items()):
        print(f"claim {name}: {claim['value']} "
              f"({'holds' if claim['holds'] else 'VIOLATED'})")
    print(f"wrote {gen_dir}")
    return 0


def cmd_gen_sample(args) -> int:
    from .pipeline import load_generator, sample_generator

    spec = load_generator(args.gen)
    ss = sample_generator(spec, args.n, args.seed)
    path = _save_samples(ss, args, "samples")
    print(f"drew {args.n} samples of dim {ss.dim}; wrote {path}")
    return 0


def cmd_certify(args) -> int:
    from .diversity import certify_leaky_target
    from .pipeline import sample_target
    from .samples import make_rng

    target = sample_target(args.dims, args.lambda_leak, make_rng(args.seed))
    cert = certify_leaky_target(target, r0=args.r0)
    path = _out_dir(args) / "certificate.json"
    cert.save(path)
    for step in cert.trace:
        print(f"  {step}")
    print(f"certificate: N={cert.N} beta={cert.beta:.6g}")
    print(f"wrote {path}")
    return 0


def cmd_attack(args) -> int:
    from .attack import TrainConfig, threshold_scan, train_discriminator
    from .experiment import _bit_sampler, _prg_sampler, _stage_rng
    from .prg import Hypergraph, LocalPrg, tsa_predicate

    graph = Hypergraph.load(args.graph)
    prg = LocalPrg(graph, tsa_predicate())
    out = _out_dir(args)
    if args.method == "scan":
        gen = _prg_sampler(prg, _stage_rng(args.seed, "attack", "scan-gen"))
        tgt = _bit_sampler(prg.d, _stage_rng(args.seed, "attack",
                                             "scan-target"))
        report = threshold_scan(gen(args.n).sum(axis=1),
                                tgt(args.n).sum(axis=1))
        report.details["statistic"] = "coordinate-sum"
        path = out / "attack_scan.json"
        report.save(path)
        print(f"scan advantage {report.advantage:.4f} "
              f"[{report.ci_low:.4f}, {report.ci_high:.4f}]")
        print(f"wrote {path}")
        return 0
    cfg = TrainConfig(hidden_layers=args.depth, steps=args.steps,
                      rng=args.seed, final_eval_n=args.n)
    gen = _prg_sampler(prg, _stage_rng(args.seed, "attack", "gen"))
    tgt = _bit_sampler(prg.d, _stage_rng(args.seed, "attack", "tgt"))
    _, report = train_discriminator(cfg, gen, tgt)
    jpath = out / f"attack_mlp_depth{args.depth}.json"
    cpath = out / f"loss_depth{args.depth}.csv"
    report.save(jpath)
    report.curve_csv(cpath)
    print(f"mlp depth {args.depth}: advantage {report.advantage:.4f} "
          f"[{report.ci_low:.4f}, {report.ci_high:.4f}], "
          f"final loss {report.details.get('final_test_loss', float('nan')):.4f}")
    print(f"wrote {jpath} and {cpath}")
    return 0


def cmd_hardness_check(args) -> int:
    from .experiment import _stage_hardness

    section = {"m": args.m, "d": args.d, "k": args.k, "test": args.test}
    out = _out_dir(args)
    _stage_hardness(section, args.seed, out, {})
    doc = json.loads((out / "hardness.json").read_text())
    print(f"m={doc['m']} d={doc['d']} image={doc['image_size']} "
          f"injective={doc['injective']}")
    print(f"lhs={doc['lhs_float']:.6f} rhs={doc['rhs_float']:.6f} "
          f"holds={doc['holds']}")
    print(f"wrote {out / 'hardness.json'}")
    return 0


def cmd_run(args) -> int:
    from .experiment import load_config, run_experiment

    cfg = load_config(args.config)
    out = args.out if args.out != "." else cfg.get("out", ".")
    status, manifest = run_experiment(cfg, out_dir=out, dry_run=args.dry_run)
    if args.dry_run:
        print(f"config ok (sha256 {manifest['config_sha256'][:16]}); plan:")
        for stage in manifest["plan"]:
            print(f"  {stage}")
        return 0
    print(f"ran {len(manifest['plan'])} stages; "
          f"{len(manifest['artifacts'])} artifacts in {out}")
    return status


def _apply_threads(threads):
    if threads is None:
        return
    if threads < 1:
        raise UserInputError("--threads must be >= 1")
    try:
        import numba
        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_threads(args.threads)
        return args.func(args)
    except UserInputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ForgeError as e:
        print(f"refused: {e}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
