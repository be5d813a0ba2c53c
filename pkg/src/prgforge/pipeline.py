"""Assembly of the hard generators: pushforward . decoder . PRG . frontend.

The full map is G(x) = H(J(G0(h_xi(x)))) where h_xi clamps a continuous seed
onto near-bits, G0 is the local PRG realized as ReLU nets, J decodes blocks of
n = ceil(log2(1/eps)) bits into [0, 1] coordinates, and H is the target
pushforward.  With bit-valued seeds the frontend is skipped.  Each junction is
an exact network composition; the assembled profile is recorded together with
the compositional identities it must satisfy, both as computed values and as
formula strings, so a report never silently relies on an unchecked bound.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .compiler import affine_net, clamp_net, compose, leaky_to_relu, stack_outputs
from .errors import UserInputError
from .prg import LocalPrg
from .relunet import ComplexityProfile, ReluNet
from .samples import SampleSet, make_rng, sample_seeds

POLY_CAP = 1 << 20  # sanity cap on latent/output dims
SEED_KINDS = ("bits", "gaussian", "box")


def bits_per_coordinate(epsilon: float) -> int:
    if not 0 < epsilon < 1:
        raise UserInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    return max(1, math.ceil(math.log2(1.0 / epsilon)))


def build_bit_decoder(s: int, epsilon: float) -> ReluNet:
    """Linear decoder J: R^s -> R^r, r = s / n with n = ceil(log2(1/eps)).

    Coordinate i reads its n-bit block y as <w, y + 1> with
    w = (1/4, ..., 1/2^(n+1)), mapping {+-1}^n onto the uniform grid
    {0, 1/2^n, ..., 1 - 1/2^n}; W1 to the uniform interval is exactly
    2^(-n-1) per coordinate.
    """
    n = bits_per_coordinate(epsilon)
    if s < 1 or s % n != 0:
        raise UserInputError(
            f"bit width {s} is not a positive multiple of n={n}; "
            f"trim the input to a multiple (the assembler drops trailing bits)")
    r = s // n
    W = np.zeros((r, s), dtype=object)
    b = np.empty(r, dtype=object)
    bias = sum(Fraction(1, 1 << (j + 2)) for j in range(n))
    for i in range(r):
        for j in range(n):
            W[i, i * n + j] = Fraction(1, 1 << (j + 2))
        b[i] = bias
    net = affine_net(W, b)
    net.meta.update({"kind": "bit-decoder", "n_bits": n, "blocks": r,
                     "w1_per_coordinate": Fraction(1, 1 << (n + 1))})
    return net


def build_frontend(m: int, epsilon: float, lambda_downstream: float,
                   d_downstream: int = 1) -> ReluNet:
    """Entrywise clamp h_xi sized for the downstream stages.

    xi' = eps / (lam'' * sqrt((2/pi) m^3 d)) and xi = 1/ceil(1/xi'), so the
    clamp misfires on a gaussian seed with probability at most
    m xi sqrt(2/pi) per the coupling argument (at most m xi for a box seed).
    """
    if not 0 < epsilon < 1:
        raise UserInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    if lambda_downstream <= 0 or d_downstream < 1:
        raise UserInputError("downstream Lipschitz bound and dim must be positive")
    xi_prime = epsilon / (lambda_downstream
                          * math.sqrt((2.0 / math.pi) * m ** 3 * d_downstream))
    q = max(1, math.ceil(1.0 / xi_prime))
    net = clamp_net(Fraction(1, q), m)
    net.meta.update({
        "kind": "frontend",
        "xi_prime": xi_prime,
        "xi": Fraction(1, q),
        "exception_prob_gaussian": m * (1.0 / q) * math.sqrt(2.0 / math.pi),
        "exception_prob_box": m * (1.0 / q),
    })
    return net


@dataclass
class TargetModel:
    """A target pushforward H with the data needed to certify its diversity."""

    H: ReluNet
    r: int
    d: int
    dims: tuple
    leak: Fraction | None
    weights: list = field(default_factory=list)      # raw float64 matrices
    sigma_mins: list = field(default_factory=list)   # per-matrix smallest s.v.
    diversity: object | None = None

    def __post_init__(self):
        if self.r > POLY_CAP or self.d > POLY_CAP:
            raise UserInputError("latent/output dims exceed the configured cap")
        if self.H.d_in != self.r or self.H.d_out != self.d:
            raise UserInputError("H profile disagrees with declared dims")


def sample_target(dims, lambda_leak, rng) -> TargetModel:
    """Random expanding leaky-ReLU target: W_i entries are N(0, 1/k_i).

    dims = (k_0, ..., k_L) must expand by a factor >= 1.1 per layer; sigma_min
    of every W_i is computed and stored, since diversity certification uses
    the measured value in place of the probabilistic smallest-singular-value
    event.  dims of length 1 yield the identity target.
    """
    dims = tuple(int(v) for v in dims)
    if not dims or any(v < 1 for v in dims):
        raise UserInputError("dims must be positive")
    rng = make_rng(rng)
    if len(dims) == 1:
        r = dims[0]
        eye = np.zeros((r, r), dtype=object)
        for i in range(r):
            eye[i, i] = 1
        H = affine_net(eye, lam=1.0)
        H.meta["kind"] = "identity-target"
        return TargetModel(H=H, r=r, d=r, dims=dims, leak=None)
    lam = Fraction(lambda_leak) if isinstance(lambda_leak, int) \
        else lambda_leak if isinstance(lambda_leak, Fraction) \
        else Fraction(float(lambda_leak))
    if not 0 < lam <= Fraction(1, 2):
        raise UserInputError(f"lambda_leak must lie in (0, 1/2], got {lambda_leak}")
    for a, b in zip(dims, dims[1:]):
        if b < 1.1 * a:
            raise UserInputError(
                f"expansion violated: {a} -> {b} is below the 1.1 factor")
    weights = []
    sigma_mins = []
    for a, b in zip(dims, dims[1:]):
        W = rng.standard_normal((b, a)) / math.sqrt(b)
        weights.append(W)
        sigma_mins.append(float(np.linalg.svd(W, compute_uv=False)[-1]))
    H = leaky_to_relu(weights, lam)
    H.meta["kind"] = "leaky-target"
    return TargetModel(H=H, r=dims[0], d=dims[-1], dims=dims, leak=lam,
                       weights=weights, sigma_mins=sigma_mins)


@dataclass
class GeneratorSpec:
    m: int
    d: int
    epsilon: float
    seed_kind: str
    stages: list            # (role, ReluNet) pairs, seed side first
    network: ReluNet        # the composed generator
    claims: dict


def _projection_net(m: int, s: int) -> ReluNet:
    W = np.zeros((s, m), dtype=object)
    for i in range(s):
        W[i, i] = 1
    net = affine_net(W, lam=1.0)
    net.meta["kind"] = "seed-projection"
    return net


def assemble(prg: LocalPrg | None, target: TargetModel, seed_kind: str,
             epsilon: float) -> GeneratorSpec:
    """Compose the stages into one network with checked profile identities.

    Needs target.r * ceil(log2(1/eps)) PRG output bits; when the PRG falls
    short but the seed itself is long enough, the PRG stage degenerates to a
    projection of the seed bits (enough raw randomness, no stretch needed).
    """
    if seed_kind not in SEED_KINDS:
        raise UserInputError(f"unknown seed kind {seed_kind!r}")
    n = bits_per_coordinate(epsilon)
    s = target.r * n
    stages = []
    if prg is not None and s <= prg.d:
        m = prg.m
        coord_nets = prg.realize_networks()[:s]
        prg_stage = stack_outputs(coord_nets)
        prg_stage.meta.update({"kind": "prg-stage", "used_outputs": s,
                               "dropped_outputs": prg.d - s})
        stages.append(("prg", prg_stage))
    elif prg is not None and s <= prg.m:
        m = prg.m
        stages.append(("projection", _projection_net(m, s)))
    elif prg is None:
        raise UserInputError("assembly without a PRG instance is not defined")
    else:
        raise UserInputError(
            f"need {s} bits but the PRG yields {prg.d} and the seed only {prg.m}")

    stages.append(("decoder", build_bit_decoder(s, epsilon)))
    stages.append(("pushforward", target.H))

    # junction shift = how far below zero the producing stage may output:
    # bit stages emit +-1 (shift 1), the decoder emits [0, 1] (shift 0)
    output_floor_shift = {"prg": 1, "projection": 1, "decoder": 0}
    core = stages[0][1]
    producer = stages[0][0]
    junction_dims = []
    for role, net in stages[1:]:
        junction_dims.append(net.d_in)
        core = compose([core], net, shift=output_floor_shift[producer])
        producer = role

    if seed_kind in ("gaussian", "box"):
        frontend = build_frontend(m, epsilon, lambda_downstream=core.profile.lam,
                                  d_downstream=core.d_out)
        stages.insert(0, ("frontend", frontend))
        junction_dims.insert(0, m)
        core = compose([frontend], core, shift=1)

    claims = _profile_claims(stages, junction_dims, core)
    if seed_kind == "gaussian":
        claims["exception_prob_bound"] = stages[0][1].meta["exception_prob_gaussian"]
    elif seed_kind == "box":
        claims["exception_prob_bound"] = stages[0][1].meta["exception_prob_box"]
    return GeneratorSpec(m=m, d=target.d, epsilon=float(epsilon),
                         seed_kind=seed_kind, stages=stages, network=core,
                         claims=claims)


def _profile_claims(stages, junction_dims, net: ReluNet) -> dict:
    profs = [stage.profile for _, stage in stages]
    L_sum = sum(p.L for p in profs)
    S_sum = sum(p.S for p in profs) + sum(junction_dims)
    tau_max = max(p.tau for p in profs)
    lam_prod = 1.0
    for p in profs:
        lam_prod *= p.lam
    for r in junction_dims:
        lam_prod *= math.sqrt(r)
    p = net.profile
    return {
        "profile": p.to_dict(),
        "stage_profiles": [{"role": role, **stage.profile.to_dict()}
                           for role, stage in stages],
        "identities": {
            "L": {"computed": p.L, "formula": "sum_i L_i", "value": L_sum,
                  "holds": p.L == L_sum},
            "S": {"computed": p.S, "formula": "sum_i S_i + sum_j r_j",
                  "value": S_sum, "holds": p.S == S_sum},
            "tau": {"computed": p.tau, "formula": "max_i tau_i",
                    "value": tau_max, "holds": p.tau == tau_max},
            "lambda": {"computed": p.lam,
                       "formula": "prod_i lam_i * prod_j sqrt(r_j)",
                       "value": lam_prod,
                       "holds": bool(math.isclose(p.lam, lam_prod,
                                                  rel_tol=1e-9))},
        },
        "junction_dims": junction_dims,
    }


def sample_generator(spec: GeneratorSpec, n: int, rng) -> SampleSet:
    """n i.i.d. seed draws pushed through the assembled network."""
    if n < 1:
        raise UserInputError("need n >= 1")
    seed_val = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = make_rng(rng)
    seeds = sample_seeds(spec.seed_kind, n, spec.m, gen)
    data = spec.network.eval_float_batch(seeds)
    meta = {"source": "generator", "seed_kind": spec.seed_kind, "n": n,
            "rng_seed": seed_val, "m": spec.m, "d": spec.d,
            "epsilon": spec.epsilon}
    return SampleSet(data, meta)


def spec_digest(spec: GeneratorSpec) -> str:
    payload = json.dumps({"m": spec.m, "d": spec.d, "epsilon": spec.epsilon,
                          "seed_kind": spec.seed_kind,
                          "claims": _jsonable(spec.claims)},
                         sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return [obj.numerator, obj.denominator]
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    return obj


def save_generator(spec: GeneratorSpec, out_dir: str) -> str:
    """Write the spec as a JSON index referencing per-stage network files."""
    os.makedirs(out_dir, exist_ok=True)
    stage_files = []
    for i, (role, net) in enumerate(spec.stages):
        fname = f"stage_{i}_{role}.json"
        net.save(os.path.join(out_dir, fname))
        stage_files.append({"role": role, "file": fname})
    spec.network.save(os.path.join(out_dir, "network.json"))
    index = {"schema": "generator-spec/1", "m": spec.m, "d": spec.d,
             "epsilon": spec.epsilon, "seed_kind": spec.seed_kind,
             "stages": stage_files, "network": "network.json",
             "claims": _jsonable(spec.claims), "digest": spec_digest(spec)}
    path = os.path.join(out_dir, "generator.json")
    with open(path, "w") as fh:
        json.dump(index, fh, sort_keys=True, indent=1)
    return path


def load_generator(path: str) -> GeneratorSpec:
    if os.path.isdir(path):
        path = os.path.join(path, "generator.json")
    with open(path) as fh:
        index = json.load(fh)
    if index.get("schema") != "generator-spec/1":
        raise UserInputError(f"unsupported schema {index.get('schema')!r}")
    base = os.path.dirname(path)
    stages = [(ent["role"], ReluNet.load(os.path.join(base, ent["file"])))
              for ent in index["stages"]]
    network = ReluNet.load(os.path.join(base, index["network"]))
    return GeneratorSpec(m=index["m"], d=index["d"], epsilon=index["epsilon"],
                         seed_kind=index["seed_kind"], stages=stages,
                         network=network, claims=index["claims"])
