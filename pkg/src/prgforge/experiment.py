"""Config-driven experiment runner behind `forge run`.

A config is one JSON object with a master seed plus optional named sections
(prg, generator, certify, attack, hardness), executed in that order.  All
randomness is derived from the master seed through numpy SeedSequence spawn
keys fixed per stage and role, so a rerun with the same config writes
byte-identical artifacts; the manifest records the config hash, package
versions, and the derivation rule.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ForgeError, UserInputError

_POSINT = {"type": "integer", "minimum": 1}
_PROB = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_PROB_OR_FRACTION = {
    "oneOf": [_PROB, {"type": "string", "pattern": r"^[1-9]\d*/[1-9]\d*$"}],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["seed"],
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "prg": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m", "d"],
            "properties": {
                "m": _POSINT,
                "d": _POSINT,
                "k": _POSINT,
                "predicate": {"enum": ["tsa"]},
            },
        },
        "generator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["epsilon", "seed_kind", "dims"],
            "properties": {
                "epsilon": _PROB_OR_FRACTION,
                "seed_kind": {"enum": ["bits", "gaussian", "box"]},
                "dims": {"type": "array", "items": _POSINT, "minItems": 1},
                "lambda_leak": _PROB,
                "sample_n": _POSINT,
            },
        },
        "certify": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dims"],
            "properties": {
                "dims": {"type": "array", "items": _POSINT, "minItems": 1},
                "lambda_leak": _PROB,
                "r0": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "attack": {
            "type": "object",
            "additionalProperties": False,
            "required": ["method"],
            "properties": {
                "method": {"enum": ["mlp", "scan"]},
                "depths": {"type": "array", "items":
                           {"type": "integer", "minimum": 1, "maximum": 4},
                           "minItems": 1},
                "steps": _POSINT,
                "width": _POSINT,
                "lr": {"type": "number", "exclusiveMinimum": 0},
                "batch": _POSINT,
                "eval_every": _POSINT,
                "eval_n": _POSINT,
                "final_eval_n": _POSINT,
                "scan_n": _POSINT,
                "control": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["bias"],
                    "properties": {"bias": _PROB,
                                   "depth": {"type": "integer",
                                             "minimum": 1, "maximum": 4}},
                },
            },
        },
        "hardness": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m", "d"],
            "properties": {
                "m": _POSINT,
                "d": _POSINT,
                "k": _POSINT,
                "test": {"enum": ["constant", "random-ltf"]},
            },
        },
    },
}

STAGE_ORDER = ("prg", "generator", "certify", "attack", "hardness")


def _line_of(source_text: str | None, path_keys) -> int | None:
    """Best-effort line number of the deepest named key in a JSON path."""
    if not source_text:
        return None
    names = [p for p in path_keys if isinstance(p, str)]
    if not names:
        return None
    needle = f'"{names[-1]}"'
    for i, line in enumerate(source_text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def validate_config(doc, source_text: str | None = None) -> dict:
    import jsonschema

    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(p) for p in e.path) or "<root>"
            ln = _line_of(source_text, list(e.path))
            loc = f" (line {ln})" if ln else ""
            lines.append(f"config error at {where}{loc}: {e.message}")
        raise UserInputError("\n".join(lines))
    if "attack" in doc and "prg" not in doc:
        raise UserInputError("config error at attack: requires a prg section")
    return doc


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise UserInputError(
            f"config is not valid JSON: line {e.lineno} column {e.colno}: "
            f"{e.msg}") from e
    return validate_config(doc, text)


def config_digest(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _stage_rng(master: int, stage: str, role: str):
    role_key = int.from_bytes(hashlib.sha256(role.encode()).digest()[:4],
                              "big")
    seq = np.random.SeedSequence(master, spawn_key=(
        STAGE_ORDER.index(stage), role_key))
    return np.random.Generator(np.random.Philox(seq))


def _plan(cfg: dict) -> list:
    plan = []
    for stage in STAGE_ORDER:
        if stage in cfg:
            plan.append(stage)
    return plan


def run_experiment(cfg: dict, out_dir=None, dry_run: bool = False):
    """Returns (exit_status, manifest dict); artifacts land in out_dir."""
    validate_config(cfg)
    out = Path(out_dir) if out_dir is not None else Path(cfg.get("out", "."))
    master = int(cfg["seed"])
    manifest = {
        "schema": "experiment-manifest/1",
        "name": cfg.get("name", "experiment"),
        "config": cfg,
        "config_sha256": config_digest(cfg),
        "versions": _versions(),
        "seeds": {"master": master,
                  "derivation": "SeedSequence(master, spawn_key=(stage_index,"
                                " hash(role))) per stage and role"},
        "plan": _plan(cfg),
        "artifacts": [],
        "status": "ok",
    }
    if dry_run:
        return 0, manifest

    out.mkdir(parents=True, exist_ok=True)
    state: dict = {}
    try:
        for stage in manifest["plan"]:
            runner = _STAGES[stage]
            manifest["artifacts"].extend(
                runner(cfg[stage], master, out, state))
    except ForgeError as e:
        manifest["status"] = "failed"
        manifest["failed_stage"] = stage
        manifest["error"] = str(e)
        _write_manifest(out, manifest)
        raise
    _write_manifest(out, manifest)
    return 0, manifest


def _write_manifest(out: Path, manifest: dict):
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)


def _versions() -> dict:
    import importlib.metadata as md

    import numpy
    import scipy

    try:
        pkg = md.version("prgforge")
    except md.PackageNotFoundError:
        pkg = "unknown"
    versions = {"prgforge": pkg, "numpy": numpy.__version__,
                "scipy": scipy.__version__}
    try:
        import numba
        versions["numba"] = numba.__version__
    except ImportError:
        versions["numba"] = None
    return versions


# -- stages ---------------------------------------------------------------------------


def _build_prg(section: dict, master: int):
    from .prg import LocalPrg, sample_hypergraph, tsa_predicate

    pred = tsa_predicate()
    k = section.get("k", pred.k)
    if k != pred.k:
        raise UserInputError("only the arity-5 predicate is bundled; "
                             "use the library API for custom predicates")
    graph = sample_hypergraph(section["m"], section["d"], k,
                              _stage_rng(master, "prg", "hypergraph"))
    return LocalPrg(graph, pred)


def _stage_prg(section, master, out: Path, state) -> list:
    prg = _build_prg(section, master)
    state["prg"] = prg
    path = out / "hypergraph.json"
    prg.graph.save(path)
    return [path.name]


def _stage_generator(section, master, out: Path, state) -> list:
    from .pipeline import (assemble, sample_generator, sample_target,
                           save_generator)

    dims = tuple(section["dims"])
    leak = section.get("lambda_leak", 0.25)
    target = sample_target(dims, leak, _stage_rng(master, "generator",
                                                  "target"))
    if "prg" not in state:
        raise UserInputError("generator stage requires the prg stage")
    eps = section["epsilon"]
    if isinstance(eps, str):
        eps = Fraction(eps)
    spec = assemble(state["prg"], target, section["seed_kind"], eps)
    state["generator"] = spec
    gen_dir = out / "generator"
    save_generator(spec, gen_dir)
    artifacts = [str(Path("generator") / p.name)
                 for p in sorted(gen_dir.iterdir())]
    if "sample_n" in section:
        ss = sample_generator(spec, section["sample_n"],
                              _stage_rng(master, "generator", "samples"))
        ss.save(out / "generator_samples.csv")
        artifacts.append("generator_samples.csv")
    return artifacts


def _stage_certify(section, master, out: Path, state) -> list:
    from .diversity import certify_leaky_target
    from .pipeline import sample_target

    dims = tuple(section["dims"])
    leak = section.get("lambda_leak", 0.25)
    target = sample_target(dims, leak, _stage_rng(master, "certify", "target"))
    kwargs = {}
    if "r0" in section:
        kwargs["r0"] = Fraction(section["r0"]).limit_denominator(10 ** 9)
    cert = certify_leaky_target(target, **kwargs)
    path = out / "certificate.json"
    cert.save(path)
    return [path.name]


def _bit_sampler(d: int, rng, p_plus: float = 0.5):
    def draw(n: int) -> np.ndarray:
        bits = rng.random(size=(n, d)) < p_plus
        return np.where(bits, 1.0, -1.0)
    return draw


def _prg_sampler(prg, rng):
    def draw(n: int) -> np.ndarray:
        seeds = (2 * rng.integers(0, 2, size=(n, prg.m)) - 1).astype(np.int8)
        return prg.evaluate_batch(seeds).astype(np.float64)
    return draw


def _stage_attack(section, master, out: Path, state) -> list:
    from .attack import TrainConfig, threshold_scan, train_discriminator

    prg = state["prg"]
    artifacts = []
    if section["method"] == "scan":
        n = section.get("scan_n", 100000)
        rng_g = _stage_rng(master, "attack", "scan-gen")
        rng_t = _stage_rng(master, "attack", "scan-target")
        gen = _prg_sampler(prg, rng_g)(n).sum(axis=1)
        tgt = _bit_sampler(prg.d, rng_t)(n).sum(axis=1)
        report = threshold_scan(gen, tgt)
        report.details["statistic"] = "coordinate-sum"
        path = out / "attack_scan.json"
        report.save(path)
        return [path.name]

    for depth in section.get("depths", [1, 2, 3, 4]):
        cfg = TrainConfig(
            hidden_layers=depth,
            width=section.get("width", 200),
            lr=section.get("lr", 1e-3),
            batch=section.get("batch", 128),
            steps=section.get("steps", 20000),
            rng=master + depth,
            eval_every=section.get("eval_every", 500),
            eval_n=section.get("eval_n", 16384),
            final_eval_n=section.get("final_eval_n", 100000),
        )
        gen = _prg_sampler(prg, _stage_rng(master, "attack", f"gen{depth}"))
        tgt = _bit_sampler(prg.d, _stage_rng(master, "attack", f"tgt{depth}"))
        _, report = train_discriminator(cfg, gen, tgt)
        jpath = out / f"attack_mlp_depth{depth}.json"
        cpath = out / f"loss_depth{depth}.csv"
        report.save(jpath)
        report.curve_csv(cpath)
        artifacts += [jpath.name, cpath.name]

    if "control" in section:
        ctrl = section["control"]
        depth = ctrl.get("depth", 2)
        cfg = TrainConfig(
            hidden_layers=depth,
            width=section.get("width", 200),
            lr=section.get("lr", 1e-3),
            batch=section.get("batch", 128),
            steps=section.get("steps", 20000),
            rng=master + 100 + depth,
            eval_every=section.get("eval_every", 500),
            eval_n=section.get("eval_n", 16384),
            final_eval_n=section.get("final_eval_n", 100000),
        )
        gen = _bit_sampler(prg.d, _stage_rng(master, "attack", "ctl-gen"),
                           p_plus=ctrl["bias"])
        tgt = _bit_sampler(prg.d, _stage_rng(master, "attack", "ctl-tgt"))
        _, report = train_discriminator(cfg, gen, tgt)
        report.details["control_bias"] = ctrl["bias"]
        jpath = out / "control_mlp.json"
        cpath = out / "loss_control.csv"
        report.save(jpath)
        report.curve_csv(cpath)
        artifacts += [jpath.name, cpath.name]
    return artifacts


def _stage_hardness(section, master, out: Path, state) -> list:
    from .circuits import Gate, LtfCircuit
    from .hardness import hardness_report
    from .prg import LocalPrg, sample_hypergraph, tsa_predicate

    pred = tsa_predicate()
    graph = sample_hypergraph(section["m"], section["d"],
                              section.get("k", pred.k),
                              _stage_rng(master, "hardness", "hypergraph"))
    prg = LocalPrg(graph, pred)
    if section.get("test", "random-ltf") == "constant":
        f = LtfCircuit(prg.d, [Gate((), (), Fraction(-1))])
    else:
        rng = _stage_rng(master, "hardness", "ltf")
        ws = tuple(Fraction(int(v)) for v in rng.integers(-3, 4, size=prg.d))
        bias = Fraction(int(rng.integers(-prg.d, prg.d)) * 2 + 1, 2)
        f = LtfCircuit(prg.d, [Gate(tuple(range(prg.d)), ws, bias)])
    report = hardness_report(f, prg)
    path = out / "hardness.json"
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
    return [path.name]


_STAGES = {
    "prg": _stage_prg,
    "generator": _stage_generator,
    "certify": _stage_certify,
    "attack": _stage_attack,
    "hardness": _stage_hardness,
}
