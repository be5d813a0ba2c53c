"""Wasserstein separation: certificates, Levy concentration, exact OT.

A distribution is (N, beta)-diverse when every distribution supported on at
most N points sits at W1 distance >= beta from it.  Certificates here come
from two routes: a separation argument (uniform target on well-spread points)
and a Levy small-ball recursion through the layers of a leaky-ReLU
pushforward.  Every certificate carries a trace: one record per derivation
step with the numbers that went in and out, so it can be recomputed.

Randomness enters only through the Monte-Carlo cross-checks; certificates
themselves are deterministic in their inputs (measured smallest singular
values included).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.spatial.distance
from fractions import Fraction

from . import _kernels
from .errors import CertificateRefused, UserInputError
from .samples import SampleSet

W1_MATCH_CAP = 2048  # assignment is cubic; larger inputs are subsampled


@dataclass(frozen=True)
class LevyBound:
    """Q_D(r) <= alpha: no radius-r ball holds more than alpha mass."""

    r: float
    alpha: float

    def __post_init__(self):
        if not self.r > 0:
            raise UserInputError("radius must be positive")
        if not 0 <= self.alpha <= 1:
            raise UserInputError("mass bound must lie in [0, 1]")


@dataclass(frozen=True)
class DiversityCertificate:
    N: int
    beta: float
    trace: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.beta < 0:
            raise UserInputError("beta must be >= 0")
        if self.N < 0:
            raise UserInputError("N must be >= 0")
        if not self.trace:
            raise UserInputError("certificate must carry a derivation trace")

    def to_json_dict(self) -> dict:
        return {"schema": "diversity-certificate/1", "N": self.N,
                "beta": self.beta, "trace": [dict(s) for s in self.trace]}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)


# -- exact optimal transport -----------------------------------------------------


def w1_empirical(p: SampleSet | np.ndarray, q: SampleSet | np.ndarray,
                 cap: int = W1_MATCH_CAP) -> float:
    """Exact W1 between two equal-size empirical measures (min-cost matching).

    Unequal counts are reduced to min(n_p, n_q, cap) by taking leading rows,
    which keeps the estimate deterministic; the subsampling is recorded by
    the caller when it matters.
    """
    P = p.data if isinstance(p, SampleSet) else np.asarray(p, dtype=np.float64)
    Q = q.data if isinstance(q, SampleSet) else np.asarray(q, dtype=np.float64)
    if P.ndim != 2 or Q.ndim != 2 or P.shape[1] != Q.shape[1]:
        raise UserInputError("sample sets must share their dimension")
    n = min(len(P), len(Q), cap)
    if n == 0:
        raise UserInputError("empty sample set")
    P, Q = P[:n], Q[:n]
    cost = scipy.spatial.distance.cdist(P, Q)
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / n)


def w1_atoms_vs_uniform01(points, masses) -> Fraction:
    """Exact W1 between a rational discrete distribution on [0,1] and I_1.

    Computed as the area between CDFs, integral of |F_p(t) - t| dt, summed
    in exact rational arithmetic segment by segment.
    """
    pts = [Fraction(x) for x in points]
    ms = [Fraction(w) for w in masses]
    if len(pts) != len(ms) or not pts:
        raise UserInputError("need matching nonempty points and masses")
    if any(w < 0 for w in ms) or sum(ms) != 1:
        raise UserInputError("masses must be nonnegative and sum to 1")
    if any(x < 0 or x > 1 for x in pts):
        raise UserInputError("atoms must lie in [0, 1]")
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    xs = [pts[i] for i in order]
    ws = [ms[i] for i in order]

    def seg(a: Fraction, b: Fraction, c: Fraction) -> Fraction:
        # integral over [a,b] of |c - t| dt
        if c <= a:
            return ((b - c) ** 2 - (a - c) ** 2) / 2
        if c >= b:
            return ((c - a) ** 2 - (c - b) ** 2) / 2
        return ((c - a) ** 2 + (b - c) ** 2) / 2

    total = Fraction(0)
    cdf = Fraction(0)
    prev = Fraction(0)
    for x, w in zip(xs, ws):
        if x > prev:
            total += seg(prev, x, cdf)
            prev = x
        cdf += w
    if prev < 1:
        total += seg(prev, Fraction(1), cdf)
    return total


def tensorize_w1(eps: float, n: int) -> float:
    """W1(p^n, q^n) <= eps * sqrt(n) for product measures."""
    if eps < 0 or n < 1:
        raise UserInputError("need eps >= 0 and n >= 1")
    return float(eps) * math.sqrt(n)


# -- certificates -----------------------------------------------------------------


def diversity_from_separation(alpha_sep: float, N: int, N_prime: int
                              ) -> DiversityCertificate:
    """Uniform target on N' points pairwise >= alpha apart: beta = alpha(1-N/N')."""
    if alpha_sep <= 0:
        raise UserInputError("separation must be positive")
    if N > N_prime:
        raise UserInputError(f"support bound N={N} exceeds target size {N_prime}")
    beta = float(alpha_sep) * (1.0 - N / N_prime)
    step = {"step": "separation", "alpha": float(alpha_sep), "N": int(N),
            "N_prime": int(N_prime), "beta": beta}
    return DiversityCertificate(N=int(N), beta=beta, trace=(step,))


def levy_box(d: int, r: float) -> LevyBound:
    """Small-ball bound for the unit box: Q(r) <= (18 r^2 / d)^(d/2)."""
    if d < 1:
        raise UserInputError("dimension must be >= 1")
    if r <= 0:
        raise UserInputError("radius must be positive")
    log_alpha = (d / 2.0) * (math.log(18.0) + 2.0 * math.log(r) - math.log(d))
    alpha = 1.0 if log_alpha >= 0 else math.exp(log_alpha)
    return LevyBound(r=float(r), alpha=min(1.0, alpha))


def levy_to_diversity(b: LevyBound, N: int) -> DiversityCertificate:
    """Q_D(r) <= alpha makes D (N, r(1 - N alpha))-diverse."""
    if N < 0:
        raise UserInputError("N must be >= 0")
    beta = max(0.0, b.r * (1.0 - N * b.alpha))
    step = {"step": "small-ball-to-diversity", "r": b.r, "alpha": b.alpha,
            "N": int(N), "beta": beta}
    return DiversityCertificate(N=int(N), beta=beta, trace=(step,))


def certify_leaky_target(target, r0: float = 1.0 / 3.0) -> DiversityCertificate:
    """Levy recursion through a random leaky-ReLU pushforward.

    Starting from the unit-box bound at radius r0, the first linear layer
    contracts the radius by its measured smallest singular value; every
    further layer first applies the leaky activation on its input width
    (radius shrinks by the leak, mass bound grows by 2**width) and then its
    own measured-sigma_min contraction.  No activation follows the last
    linear layer, so the mass bound collects 2**k only over intermediate
    widths.  The final (r_L, alpha_L) yields a certificate at
    N = floor(1/(2 alpha_L)).  Refused when a measured sigma_min falls below
    gamma/(2(1+gamma)) for that layer's expansion gamma, the threshold under
    which the contraction argument is vacuous.
    """
    dims = tuple(target.dims)
    trace = []
    b0 = levy_box(dims[0], r0)
    r_cur, a_cur = b0.r, b0.alpha
    trace.append({"step": "box-small-ball", "dim": dims[0], "r": r_cur,
                  "alpha": a_cur})
    if len(dims) > 1:
        lam = float(target.leak)
        for i, (k_in, k_out) in enumerate(zip(dims, dims[1:])):
            if i > 0:
                r_cur *= lam
                a_cur = min(1.0, a_cur * (2.0 ** k_in))
                trace.append({"step": "leaky-push", "layer": i - 1,
                              "leak": lam, "width": k_in, "r": r_cur,
                              "alpha": a_cur})
            gamma = k_out / k_in - 1.0
            threshold = gamma / (2.0 * (1.0 + gamma))
            smin = float(target.sigma_mins[i])
            if smin < threshold:
                raise CertificateRefused(
                    f"layer {i}: measured sigma_min {smin:.6g} is below the "
                    f"expansion threshold {threshold:.6g} (gamma={gamma:.3g}); "
                    "the radius contraction argument does not apply")
            r_cur *= smin
            trace.append({"step": "linear-push", "layer": i, "sigma_min": smin,
                          "threshold": threshold, "r": r_cur, "alpha": a_cur})
    N = int(1.0 / (2.0 * a_cur)) if a_cur > 0 else 10 ** 18
    final = levy_to_diversity(LevyBound(r=r_cur, alpha=a_cur), N)
    trace.extend(final.trace)
    return DiversityCertificate(N=final.N, beta=final.beta, trace=tuple(trace))


def min_pairwise_distance(X: np.ndarray) -> float:
    X = np.asarray(X, dtype=np.float64)
    if len(X) < 2:
        raise UserInputError("need at least two points")
    return float(scipy.spatial.distance.pdist(X).min())


def support_gap_lower_bound(gen_support: np.ndarray, target) -> float:
    """W1 lower bound from a generator's enumerated support.

    target is ("cube", d) for the uniform hypercube U_d, ("box", d) for the
    unit box I_d, or a SampleSet treated as a uniform target on its points.
    """
    support = np.asarray(gen_support, dtype=np.float64)
    if support.ndim != 2:
        raise UserInputError("support must be an (N, d) array")
    N = len(support)
    if N > (1 << 20):
        raise UserInputError("support too large to certify by enumeration")
    if isinstance(target, SampleSet):
        alpha = min_pairwise_distance(target.data)
        if alpha <= 0:
            raise UserInputError("target sample has duplicate points")
        return diversity_from_separation(alpha, N, len(target.data)).beta
    kind, d = target
    if kind == "cube":
        if N > (1 << d):
            return 0.0
        return diversity_from_separation(2.0, N, 1 << d).beta
    if kind == "box":
        best = 0.0
        for r in np.geomspace(1e-3, math.sqrt(d), 64):
            cert = levy_to_diversity(levy_box(d, float(r)), N)
            best = max(best, cert.beta)
        return best
    raise UserInputError(f"unknown analytic target {kind!r}")


# -- Monte-Carlo cross-checks ------------------------------------------------------


def mc_small_ball_mass(points: np.ndarray, radius: float,
                       n_centers: int = 100, rng=None) -> float:
    """Largest empirical mass found in any radius ball centered at a sample.

    Centers are drawn from the points themselves (the worst ball center for
    an empirical measure is near a sample); this is a stress test of a
    LevyBound, not a certified quantity.
    """
    points = np.asarray(points, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng(0)
    n = len(points)
    idx = rng.choice(n, size=min(n_centers, n), replace=False)
    counts = _kernels.count_within(points, points[idx], float(radius))
    return float(counts.max() / n)
