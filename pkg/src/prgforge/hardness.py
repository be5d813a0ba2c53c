"""Range-membership hard functions and the agreement bound they satisfy.

Given a PRG G mapping m bits to d bits, h(x) = +1 iff x lies in the image of
G.  Against the mixture D = (uniform on the cube + pushforward of uniform
seeds)/2, no test f can agree with h much better than chance:

    Pr_{x ~ D}[f(x) = h(x)] <= 1/2 + eps/4 + 2^(m-d-1),

where eps is f's fooling advantage |E f(G(U_m)) - E f(U_d)|.  Everything here
runs at enumerable scale in exact rational arithmetic, so the inequality is
checked as a theorem, not a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuits import LtfCircuit
from .errors import UserInputError
from .prg import LocalPrg, PrgImage, enumerate_image, enumerate_seeds
from .relunet import ReluNet
from .samples import make_rng

HARD_M_CAP = 20
EXACT_D_CAP = 24
ENUM_CHUNK = 1 << 16
SLACK = Fraction(1, 1 << 50)


@dataclass(frozen=True)
class HardFunction:
    """h(x) = +1 iff x is an output of the PRG; witnesses are recoverable."""

    prg: LocalPrg
    image: PrgImage

    @property
    def m(self) -> int:
        return self.prg.m

    @property
    def d(self) -> int:
        return self.prg.d

    @property
    def positive_count(self) -> int:
        return self.image.size

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        hits = self.image.contains_batch(np.asarray(X))
        return np.where(hits, 1, -1).astype(np.int8)

    def evaluate(self, x) -> int:
        return int(self.evaluate_batch(np.asarray(x)[None, :])[0])

    def witness(self, x):
        """Seed y with G(y) = x when h(x) = +1, else None."""
        return self.image.witness_seed(np.asarray(x))

    def verify_witness(self, x, y) -> bool:
        return bool(np.array_equal(self.prg.evaluate(np.asarray(y)),
                                   np.asarray(x)))


def build_hard_function(prg: LocalPrg) -> HardFunction:
    if prg.m > HARD_M_CAP:
        raise UserInputError(f"seed length {prg.m} exceeds the "
                             f"enumeration cap {HARD_M_CAP}")
    return HardFunction(prg, enumerate_image(prg))


@dataclass(frozen=True)
class MixtureDist:
    """Half uniform cube, half PRG pushforward."""

    prg: LocalPrg
    exact: bool = True

    def __post_init__(self):
        if self.exact and self.prg.d > EXACT_D_CAP:
            raise UserInputError(f"exact enumeration capped at d <= "
                                 f"{EXACT_D_CAP}, got {self.prg.d}")

    def sample(self, n: int, rng) -> np.ndarray:
        rng = make_rng(rng)
        coins = rng.integers(0, 2, size=n).astype(bool)
        out = np.empty((n, self.prg.d), dtype=np.int8)
        n_unif = int(coins.sum())
        out[coins] = (2 * rng.integers(0, 2, size=(n_unif, self.prg.d)) - 1)
        seeds = (2 * rng.integers(0, 2, size=(n - n_unif, self.prg.m)) - 1)
        out[~coins] = self.prg.evaluate_batch(seeds.astype(np.int8))
        return out


def _sign_batch(f, X: np.ndarray) -> np.ndarray:
    """+-1 values of a test on +-1 rows, exact; sgn(0) = +1."""
    if isinstance(f, LtfCircuit):
        return f.evaluate_batch(X)
    if isinstance(f, ReluNet):
        if f.d_out != 1:
            raise UserInputError("test network must have a single output")
        Y, _ = f.eval_exact_batch(np.asarray(X, dtype=np.int64))
        vals = Y[:, 0]
        if vals.dtype == object:
            return np.array([1 if v >= 0 else -1 for v in vals], dtype=np.int8)
        return np.where(vals >= 0, 1, -1).astype(np.int8)
    out = np.asarray(f(X))
    if not np.all(np.abs(out) == 1):
        raise UserInputError("test function must return +-1 values")
    return out.astype(np.int8)


def _cube_counts(f, h: HardFunction):
    """(sum of f over the cube, number of agreements with h), exactly."""
    d = h.d
    total = 1 << d
    f_sum = 0
    agree = 0
    for start in range(0, total, ENUM_CHUNK):
        X = enumerate_seeds(d, start, min(start + ENUM_CHUNK, total))
        fv = _sign_batch(f, X)
        hv = h.evaluate_batch(X)
        f_sum += int(fv.astype(np.int64).sum())
        agree += int(np.count_nonzero(fv == hv))
    return f_sum, agree


def _seed_counts(f, prg: LocalPrg):
    """(sum of f over G(U_m), number of f=+1 outputs), exactly."""
    m = prg.m
    total = 1 << m
    f_sum = 0
    pos = 0
    for start in range(0, total, ENUM_CHUNK):
        S = enumerate_seeds(m, start, min(start + ENUM_CHUNK, total))
        fv = _sign_batch(f, prg.evaluate_batch(S))
        f_sum += int(fv.astype(np.int64).sum())
        pos += int(np.count_nonzero(fv == 1))
    return f_sum, pos


def agreement_probability(f, h: HardFunction, exact: bool = True,
                          n_samples: int = 100000, rng=0):
    """Pr_{x ~ D}[f(x) = h(x)] for the half/half mixture.

    Exact mode enumerates both mixture components and returns a Fraction;
    sampling mode returns a float estimate from n_samples mixture draws.
    """
    if exact:
        if h.d > EXACT_D_CAP:
            raise UserInputError(f"exact mode requires d <= {EXACT_D_CAP}")
        _, agree_cube = _cube_counts(f, h)
        _, agree_img = _seed_counts(f, h.prg)  # h is +1 on every G output
        return (Fraction(agree_cube, 2 ** (h.d + 1))
                + Fraction(agree_img, 2 ** (h.m + 1)))
    X = MixtureDist(h.prg, exact=False).sample(n_samples, rng)
    fv = _sign_batch(f, X)
    hv = h.evaluate_batch(X)
    return float(np.mean(fv == hv))


def fooling_advantage(f, prg: LocalPrg) -> Fraction:
    """eps = |E f(G(U_m)) - E f(U_d)| by full enumeration."""
    if prg.d > EXACT_D_CAP:
        raise UserInputError(f"exact mode requires d <= {EXACT_D_CAP}")
    h = HardFunction(prg, enumerate_image(prg))
    cube_sum, _ = _cube_counts(f, h)
    seed_sum, _ = _seed_counts(f, prg)
    return abs(Fraction(seed_sum, 2 ** prg.m) - Fraction(cube_sum, 2 ** prg.d))


def check_hardness_bound(f, prg: LocalPrg, h: HardFunction | None = None):
    """(lhs, rhs, holds): agreement vs 1/2 + eps/4 + 2^(m-d-1), exact.

    holds allows slack 2^-50; with exact Fractions on both sides the slack
    only ever matters for near-equality cases, which the constant tests hit.
    """
    if h is None:
        h = build_hard_function(prg)
    cube_sum, agree_cube = _cube_counts(f, h)
    seed_sum, agree_img = _seed_counts(f, prg)
    lhs = (Fraction(agree_cube, 2 ** (h.d + 1))
           + Fraction(agree_img, 2 ** (h.m + 1)))
    eps = abs(Fraction(seed_sum, 2 ** prg.m) - Fraction(cube_sum, 2 ** prg.d))
    rhs = Fraction(1, 2) + eps / 4 + Fraction(2 ** prg.m, 2 ** (prg.d + 1))
    return lhs, rhs, bool(lhs <= rhs + SLACK)


def hardness_report(f, prg: LocalPrg, n_witness_checks: int = 8,
                    rng=0) -> dict:
    """JSON-ready record of the bound check plus witness spot checks."""
    h = build_hard_function(prg)
    cube_sum, agree_cube = _cube_counts(f, h)
    seed_sum, agree_img = _seed_counts(f, prg)
    lhs = (Fraction(agree_cube, 2 ** (h.d + 1))
           + Fraction(agree_img, 2 ** (h.m + 1)))
    eps = abs(Fraction(seed_sum, 2 ** prg.m) - Fraction(cube_sum, 2 ** prg.d))
    rhs = Fraction(1, 2) + eps / 4 + Fraction(2 ** prg.m, 2 ** (prg.d + 1))
    holds = bool(lhs <= rhs + SLACK)
    rng = make_rng(rng)
    picks = rng.choice(h.image.size, size=min(n_witness_checks, h.image.size),
                       replace=False)
    witness_ok = []
    for idx in np.sort(picks):
        x = h.image.points[int(idx)]
        y = h.witness(x)
        witness_ok.append(y is not None and h.verify_witness(x, y))
    return {
        "schema": "hardness-report/1",
        "m": prg.m,
        "d": prg.d,
        "image_size": h.image.size,
        "injective": h.image.is_injective,
        "epsilon": [eps.numerator, eps.denominator],
        "lhs": [lhs.numerator, lhs.denominator],
        "rhs": [rhs.numerator, rhs.denominator],
        "lhs_float": float(lhs),
        "rhs_float": float(rhs),
        "holds": holds,
        "witness_checks": len(witness_ok),
        "witnesses_verified": all(witness_ok),
    }
