"""Goldreich's candidate local pseudorandom generator.

An instance is a hypergraph of d size-k index sets over a seed space
{+-1}**m together with a k-ary predicate P; the generator is

    G(x) = (P(x restricted to S_1), ..., P(x restricted to S_d)).

Sets are unordered; the predicate is applied to the selected coordinates in
sorted index order, and distinct output coordinates may draw the same set
(multiplicity is recorded, never deduplicated).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .compiler import Predicate, compile_predicate, embed_inputs
from .errors import UserInputError
from .relunet import ReluNet

IMAGE_ENUM_CAP = 20  # largest m for which we enumerate all 2**m seeds


@dataclass(frozen=True)
class Hypergraph:
    m: int
    sets: np.ndarray  # (d, k) sorted index rows into range(m)
    rng_seed: int | None = None

    def __post_init__(self):
        sets = np.asarray(self.sets, dtype=np.int64)
        if sets.ndim != 2:
            raise UserInputError("sets must be a (d, k) array")
        d, k = sets.shape
        if d < 1 or self.m < 1:
            raise UserInputError("d and m must be positive")
        if k < 1 or k > self.m:
            raise UserInputError(f"set size {k} must lie in 1..m={self.m}")
        if sets.min(initial=0) < 0 or sets.max(initial=0) >= self.m:
            raise UserInputError("set indices must lie in range(m)")
        for row in sets:
            if len(set(row.tolist())) != k:
                raise UserInputError(f"set {row.tolist()} has repeated indices")
        sets = np.sort(sets, axis=1)
        sets.flags.writeable = False
        object.__setattr__(self, "sets", sets)

    @property
    def d(self) -> int:
        return int(self.sets.shape[0])

    @property
    def k(self) -> int:
        return int(self.sets.shape[1])

    def multiplicity(self) -> int:
        """Number of output coordinates sharing a set with another one."""
        seen: dict[tuple, int] = {}
        for row in self.sets:
            key = tuple(row.tolist())
            seen[key] = seen.get(key, 0) + 1
        return sum(c for c in seen.values() if c > 1)

    def to_json_dict(self) -> dict:
        return {"schema": "hypergraph/1", "m": self.m,
                "sets": self.sets.tolist(), "rng_seed": self.rng_seed}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Hypergraph":
        if d.get("schema") != "hypergraph/1":
            raise UserInputError(f"unsupported schema {d.get('schema')!r}")
        return cls(m=d["m"], sets=np.asarray(d["sets"], dtype=np.int64),
                   rng_seed=d.get("rng_seed"))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)

    @classmethod
    def load(cls, path) -> "Hypergraph":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def sample_hypergraph(m: int, d: int, k: int, rng) -> Hypergraph:
    """d i.i.d. uniform size-k subsets of range(m), reproducible from rng."""
    if k > m:
        raise UserInputError(f"cannot pick {k} distinct indices from {m}")
    seed = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng = np.random.Generator(np.random.Philox(seed))
    sets = np.empty((d, k), dtype=np.int64)
    for i in range(d):
        sets[i] = np.sort(rng.choice(m, size=k, replace=False))
    return Hypergraph(m=m, sets=sets, rng_seed=seed)


def tsa_predicate() -> Predicate:
    """x1*x2*x3*(x4 AND x5) with AND(+1,+1)=+1 in the +-1 encoding."""
    return Predicate.from_function(
        5, lambda a, b, c, d, e: a * b * c * (1 if (d == 1 and e == 1) else -1))


@dataclass(frozen=True)
class LocalPrg:
    graph: Hypergraph
    predicate: Predicate

    def __post_init__(self):
        if self.predicate.k != self.graph.k:
            raise UserInputError(
                f"predicate arity {self.predicate.k} != set size {self.graph.k}")

    @property
    def m(self) -> int:
        return self.graph.m

    @property
    def d(self) -> int:
        return self.graph.d

    def evaluate(self, seed: Sequence[int]) -> np.ndarray:
        seed = np.asarray(seed, dtype=np.int8)
        if seed.shape != (self.m,):
            raise UserInputError(f"seed must have length {self.m}")
        if not np.all(np.abs(seed) == 1):
            raise UserInputError("seed entries must be +-1")
        return self.evaluate_batch(seed[None, :])[0]

    def evaluate_batch(self, seeds: np.ndarray) -> np.ndarray:
        seeds = np.asarray(seeds, dtype=np.int8)
        if seeds.ndim != 2 or seeds.shape[1] != self.m:
            raise UserInputError(f"expected (n, {self.m}) seeds")
        return _kernels.prg_eval_batch(seeds, self.graph.sets,
                                       self.predicate.table)

    def realize_networks(self) -> list[ReluNet]:
        """One exact ReluNet per output coordinate, reading only its k inputs."""
        base = compile_predicate(self.predicate)
        nets = []
        for row in self.graph.sets:
            net = embed_inputs(base, [int(j) for j in row], self.m)
            net.meta["selection"] = [int(j) for j in row]
            nets.append(net)
        return nets

    def image(self) -> "PrgImage":
        return enumerate_image(self)


def prg_eval(g: LocalPrg, seed) -> np.ndarray:
    return g.evaluate(seed)


# -- exhaustive image enumeration ----------------------------------------------


def enumerate_seeds(m: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Seeds for indices [start, stop): bit j of the index (MSB first) is
    coordinate j, with bit 1 -> +1 and bit 0 -> -1."""
    if stop is None:
        stop = 1 << m
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def pack_pm1_rows(Y: np.ndarray) -> np.ndarray:
    """Injective uint64 (d <= 63) or byte-string key per +-1 row."""
    d = Y.shape[1]
    bits = (Y > 0)
    if d <= 63:
        pows = (np.int64(1) << np.arange(d - 1, -1, -1, dtype=np.int64))
        return bits.astype(np.int64) @ pows
    packed = np.packbits(bits, axis=1)
    return packed.view([("", packed.dtype, packed.shape[1])]).ravel()


@dataclass(frozen=True)
class PrgImage:
    """The exact image of G over all 2**m seeds, with one witness per point."""

    m: int
    d: int
    points: np.ndarray          # (n_points, d) int8, unique +-1 rows
    witness_indices: np.ndarray  # seed index (enumerate_seeds order) per point
    keys: np.ndarray = field(repr=False)  # sorted pack_pm1_rows keys

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def is_injective(self) -> bool:
        return self.size == (1 << self.m)

    def contains_batch(self, X: np.ndarray) -> np.ndarray:
        q = pack_pm1_rows(np.asarray(X, dtype=np.int8))
        pos = np.searchsorted(self.keys, q)
        pos = np.clip(pos, 0, len(self.keys) - 1)
        return self.keys[pos] == q

    def witness_seed(self, x: np.ndarray) -> np.ndarray | None:
        """A seed y with G(y) = x, or None when x is outside the image."""
        q = pack_pm1_rows(np.asarray(x, dtype=np.int8)[None, :])[0]
        pos = int(np.searchsorted(self.keys, q))
        if pos >= len(self.keys) or self.keys[pos] != q:
            return None
        return enumerate_seeds(self.m, int(self.witness_indices[pos]),
                               int(self.witness_indices[pos]) + 1)[0]


def enumerate_image(prg: LocalPrg, chunk: int = 1 << 16) -> PrgImage:
    if prg.m > IMAGE_ENUM_CAP:
        raise UserInputError(
            f"image enumeration capped at m <= {IMAGE_ENUM_CAP}, got {prg.m}")
    total = 1 << prg.m
    keys_parts, wit_parts = [], []
    for start in range(0, total, chunk):
        seeds = enumerate_seeds(prg.m, start, min(start + chunk, total))
        Y = prg.evaluate_batch(seeds)
        keys = pack_pm1_rows(Y)
        uk, ui = np.unique(keys, return_index=True)
        keys_parts.append(uk)
        wit_parts.append(ui.astype(np.int64) + start)
    keys = np.concatenate(keys_parts)
    wit = np.concatenate(wit_parts)
    order = np.argsort(keys, kind="stable")
    keys, wit = keys[order], wit[order]
    fresh = np.ones(len(keys), dtype=bool)
    fresh[1:] = keys[1:] != keys[:-1]
    keys, wit = keys[fresh], wit[fresh]
    points = prg.evaluate_batch(_seeds_at(wit, prg.m))
    return PrgImage(m=prg.m, d=prg.d, points=points,
                    witness_indices=wit, keys=keys)


def _seeds_at(indices: np.ndarray, m: int) -> np.ndarray:
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    bits = (indices[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)
