"""Sample matrices with provenance, stored as CSV or raw float64 + sidecar.

CSV layout: provenance as leading '#' comment rows, then a header row of
coordinate names, then one sample per row.  Binary layout: little-endian
float64, C order, with a JSON sidecar (same basename + '.meta.json') holding
the shape and provenance.  Both formats round-trip bit for bit.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import UserInputError

SEED_KINDS = ("bits", "gaussian", "box")


@dataclass
class SampleSet:
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise UserInputError("samples must form an (n, d) matrix")

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])

    def __len__(self) -> int:
        return self.n

    def save(self, path: str, fmt: str | None = None) -> None:
        fmt = fmt or ("csv" if str(path).endswith(".csv") else "bin")
        if fmt == "csv":
            with open(path, "w") as fh:
                for k in sorted(self.meta):
                    fh.write(f"# {k}: {json.dumps(self.meta[k], sort_keys=True)}\n")
                fh.write(",".join(f"x{i}" for i in range(self.dim)) + "\n")
                for row in self.data:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
        elif fmt == "bin":
            self.data.astype("<f8").tofile(path)
            with open(_sidecar(path), "w") as fh:
                json.dump({"shape": list(self.data.shape), "dtype": "<f8",
                           "meta": self.meta}, fh, sort_keys=True, indent=1)
        else:
            raise UserInputError(f"unknown sample format {fmt!r}")

    @classmethod
    def load(cls, path: str) -> "SampleSet":
        if str(path).endswith(".csv"):
            meta = {}
            rows = []
            with open(path) as fh:
                for line in fh:
                    line = line.rstrip("\n")
                    if line.startswith("#"):
                        k, _, v = line[1:].partition(":")
                        try:
                            meta[k.strip()] = json.loads(v.strip())
                        except json.JSONDecodeError:
                            meta[k.strip()] = v.strip()
                    elif line.startswith("x0,") or line == "x0":
                        continue
                    elif line:
                        rows.append([float(v) for v in line.split(",")])
            return cls(np.asarray(rows, dtype=np.float64), meta)
        if not os.path.exists(_sidecar(path)):
            raise UserInputError(f"missing sidecar for {path}")
        with open(_sidecar(path)) as fh:
            side = json.load(fh)
        data = np.fromfile(path, dtype="<f8").reshape(side["shape"])
        return cls(data, side.get("meta", {}))


def _sidecar(path: str) -> str:
    return str(path) + ".meta.json"


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator so seeds produce identical streams everywhere."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def sample_seeds(kind: str, n: int, m: int, rng) -> np.ndarray:
    """Draw n seeds of the given kind: 'bits' = uniform +-1 vectors,
    'gaussian' = standard normal, 'box' = uniform on [-1, 1]^m."""
    rng = make_rng(rng)
    if n < 1 or m < 1:
        raise UserInputError("need n >= 1 and m >= 1")
    if kind == "bits":
        return (2 * rng.integers(0, 2, size=(n, m)) - 1).astype(np.float64)
    if kind == "gaussian":
        return rng.standard_normal((n, m))
    if kind == "box":
        return rng.uniform(-1.0, 1.0, size=(n, m))
    raise UserInputError(f"unknown seed kind {kind!r} (expected {SEED_KINDS})")
