"""Optimal transport, small-ball bounds, and diversity certificates."""

import itertools
import math
import types
from fractions import Fraction

import numpy as np
import pytest

from prgforge.diversity import (DiversityCertificate, LevyBound,
                                certify_leaky_target,
                                diversity_from_separation, levy_box,
                                levy_to_diversity, mc_small_ball_mass,
                                min_pairwise_distance,
                                support_gap_lower_bound, tensorize_w1,
                                w1_atoms_vs_uniform01, w1_empirical)
from prgforge.errors import CertificateRefused, UserInputError
from prgforge.pipeline import sample_target
from prgforge.samples import SampleSet, make_rng


def brute_w1(P, Q):
    """Min-cost perfect matching by enumerating every permutation."""
    n = len(P)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = sum(np.linalg.norm(P[i] - Q[j]) for i, j in enumerate(perm))
        best = min(best, cost / n)
    return best


# -- exact empirical W1 -------------------------------------------------------------


def test_w1_empirical_matches_permutation_brute_force(rng):
    for _ in range(8):
        n = rng.integers(2, 7)
        P = rng.normal(size=(n, 3))
        Q = rng.normal(size=(n, 3))
        assert w1_empirical(P, Q) == pytest.approx(brute_w1(P, Q), rel=1e-12)


def test_w1_empirical_matches_sorted_formula_in_1d(rng):
    # in one dimension the optimal matching pairs order statistics
    P = rng.normal(size=(60, 1))
    Q = rng.normal(size=(60, 1))
    expected = np.abs(np.sort(P[:, 0]) - np.sort(Q[:, 0])).mean()
    assert w1_empirical(P, Q) == pytest.approx(expected, rel=1e-12)


def test_w1_empirical_translation_and_identity(rng):
    X = rng.normal(size=(40, 5))
    shift = np.full(5, 0.3)
    assert w1_empirical(X, X) == 0.0
    assert w1_empirical(X, X + shift) == pytest.approx(
        np.linalg.norm(shift), rel=1e-12)


def test_w1_empirical_truncates_to_cap_and_min_count(rng):
    P = rng.normal(size=(10, 2))
    Q = rng.normal(size=(7, 2))
    assert w1_empirical(P, Q) == pytest.approx(w1_empirical(P[:7], Q))
    assert w1_empirical(P, P, cap=4) == 0.0
    got = w1_empirical(P, Q, cap=4)
    assert got == pytest.approx(w1_empirical(P[:4], Q[:4]), rel=1e-12)


def test_w1_empirical_accepts_sample_sets_and_validates(rng):
    P = SampleSet(rng.normal(size=(5, 2)))
    Q = SampleSet(rng.normal(size=(5, 2)))
    assert w1_empirical(P, Q) == pytest.approx(brute_w1(P.data, Q.data))
    with pytest.raises(UserInputError):
        w1_empirical(rng.normal(size=(5, 2)), rng.normal(size=(5, 3)))
    with pytest.raises(UserInputError):
        w1_empirical(np.empty((0, 2)), np.empty((0, 2)))


# -- exact W1 against uniform on [0,1] ----------------------------------------------


def test_w1_atoms_point_masses():
    assert w1_atoms_vs_uniform01([Fraction(1, 2)], [1]) == Fraction(1, 4)
    assert w1_atoms_vs_uniform01([0], [1]) == Fraction(1, 2)
    assert w1_atoms_vs_uniform01([1], [1]) == Fraction(1, 2)


@pytest.mark.parametrize("n", [1, 2, 3, 6])
def test_w1_atoms_dyadic_grid(n):
    pts = [Fraction(i, 1 << n) for i in range(1 << n)]
    ms = [Fraction(1, 1 << n)] * (1 << n)
    assert w1_atoms_vs_uniform01(pts, ms) == Fraction(1, 1 << (n + 1))


def test_w1_atoms_matches_quadrature(rng):
    for _ in range(10):
        k = rng.integers(1, 5)
        pts = sorted(Fraction(int(rng.integers(0, 65)), 64) for _ in range(k))
        raw = [int(rng.integers(1, 10)) for _ in range(k)]
        ms = [Fraction(w, sum(raw)) for w in raw]
        exact = w1_atoms_vs_uniform01(pts, ms)
        ts = np.linspace(0, 1, 200001)
        cdf = np.zeros_like(ts)
        for x, w in zip(pts, ms):
            cdf[ts >= float(x)] += float(w)
        numeric = np.trapezoid(np.abs(cdf - ts), ts)
        assert float(exact) == pytest.approx(numeric, abs=2e-5)


def test_w1_atoms_validation():
    with pytest.raises(UserInputError):
        w1_atoms_vs_uniform01([Fraction(1, 2)], [Fraction(1, 2)])
    with pytest.raises(UserInputError):
        w1_atoms_vs_uniform01([Fraction(3, 2)], [1])
    with pytest.raises(UserInputError):
        w1_atoms_vs_uniform01([], [])
    with pytest.raises(UserInputError):
        w1_atoms_vs_uniform01([0, 1], [Fraction(3, 2), Fraction(-1, 2)])


def test_tensorize_w1_matches_product_construction():
    # coordinates i.i.d. point masses at 0 vs at c: W1 = c per axis, c*sqrt(n) joint
    c, n = 0.3, 9
    P = np.zeros((12, n))
    Q = np.full((12, n), c)
    assert tensorize_w1(c, n) == pytest.approx(c * math.sqrt(n))
    assert w1_empirical(P, Q) == pytest.approx(tensorize_w1(c, n), rel=1e-12)
    with pytest.raises(UserInputError):
        tensorize_w1(-0.1, 3)
    with pytest.raises(UserInputError):
        tensorize_w1(0.1, 0)


# -- separation and Levy certificates -----------------------------------------------


def test_certificate_and_bound_validation():
    with pytest.raises(UserInputError):
        LevyBound(r=0.0, alpha=0.5)
    with pytest.raises(UserInputError):
        LevyBound(r=1.0, alpha=1.5)
    with pytest.raises(UserInputError):
        DiversityCertificate(N=3, beta=0.1, trace=())
    with pytest.raises(UserInputError):
        DiversityCertificate(N=-1, beta=0.1, trace=({"step": "x"},))
    cert = diversity_from_separation(1.0, 2, 8)
    d = cert.to_json_dict()
    assert d["schema"].startswith("diversity-certificate/")
    assert d["N"] == 2 and d["trace"][0]["step"] == "separation"


def test_diversity_from_separation_formula():
    cert = diversity_from_separation(2.0, 1024, 1 << 20)
    assert cert.beta == 2.0 * (1.0 - 1024 / (1 << 20))
    assert cert.beta == 1.998046875
    assert diversity_from_separation(0.5, 7, 7).beta == 0.0
    with pytest.raises(UserInputError):
        diversity_from_separation(0.0, 1, 2)
    with pytest.raises(UserInputError):
        diversity_from_separation(1.0, 9, 8)


def test_levy_box_formula_and_cap():
    b = levy_box(40, 1.0)
    assert b.alpha == pytest.approx(0.45 ** 20, rel=1e-12)
    b2 = levy_box(2, 0.1)
    assert b2.alpha == pytest.approx(18.0 * 0.01 / 2.0, rel=1e-12)
    assert levy_box(1, 0.5).alpha == 1.0   # bound exceeds 1, clipped
    assert levy_box(3, 10.0).alpha == 1.0
    with pytest.raises(UserInputError):
        levy_box(0, 1.0)
    with pytest.raises(UserInputError):
        levy_box(3, 0.0)


def test_levy_to_diversity_endpoints():
    b = LevyBound(r=0.25, alpha=0.01)
    assert levy_to_diversity(b, 0).beta == 0.25
    assert levy_to_diversity(b, 100).beta == 0.0
    assert levy_to_diversity(b, 1000).beta == 0.0   # clamped, never negative
    with pytest.raises(UserInputError):
        levy_to_diversity(b, -1)


def test_levy_box_million_point_certificate():
    cert = levy_to_diversity(levy_box(40, 1.0), 10 ** 6)
    expected = 1.0 * (1.0 - 10 ** 6 * 0.45 ** 20)
    assert cert.beta == pytest.approx(expected, rel=1e-12)
    assert cert.beta >= 0.5


def oracle_leaky_chain(dims, leak, sigma_mins, r0):
    """Independent reimplementation of the certificate recursion."""
    r = r0
    log_a = (dims[0] / 2.0) * (math.log(18.0 * r0 * r0) - math.log(dims[0]))
    a = min(1.0, math.exp(log_a))
    for i in range(len(dims) - 1):
        if i > 0:
            r *= leak
            a = min(1.0, a * 2.0 ** dims[i])
        r *= sigma_mins[i]
    N = int(1.0 / (2.0 * a))
    return N, r * max(0.0, 1.0 - N * a), r, a


def test_certify_leaky_target_frozen_reference():
    target = sample_target((20, 24, 30), 0.25, make_rng(0))
    assert target.sigma_mins == pytest.approx(
        (0.13584934027830392, 0.12519599086870503), rel=1e-12)
    cert = certify_leaky_target(target)
    assert cert.N == 298
    assert cert.beta == pytest.approx(0.0007087132550443471, rel=1e-12)
    steps = [s["step"] for s in cert.trace]
    assert steps == ["box-small-ball", "linear-push", "leaky-push",
                     "linear-push", "small-ball-to-diversity"]
    assert cert.trace[0]["alpha"] == pytest.approx(1e-10, rel=1e-12)
    # mass bound only collects the intermediate width, 2**24
    assert cert.trace[-1]["alpha"] == pytest.approx((2.0 ** 24) * 1e-10,
                                                    rel=1e-12)


@pytest.mark.parametrize("seed,dims,r0", [
    (0, (20, 24, 30), 1.0 / 3.0),
    (0, (20, 24, 30), 0.15),
    (1, (10, 12, 16, 20), 1.0 / 3.0),
    (5, (16, 20), 0.2),
])
def test_certify_leaky_target_matches_oracle(seed, dims, r0):
    target = sample_target(dims, 0.25, make_rng(seed))
    cert = certify_leaky_target(target, r0=r0)
    N, beta, r_l, a_l = oracle_leaky_chain(dims, 0.25, target.sigma_mins, r0)
    assert cert.N == N
    assert cert.beta == pytest.approx(beta, rel=1e-9)
    assert cert.trace[-1]["r"] == pytest.approx(r_l, rel=1e-9)
    assert cert.trace[-1]["alpha"] == pytest.approx(a_l, rel=1e-9)


def test_certify_identity_target_is_plain_box_chain():
    target = types.SimpleNamespace(dims=(6,), leak=None, sigma_mins=())
    cert = certify_leaky_target(target, r0=0.2)
    b = levy_box(6, 0.2)
    ref = levy_to_diversity(b, int(1.0 / (2.0 * b.alpha)))
    assert (cert.N, cert.beta) == (ref.N, ref.beta)
    assert [s["step"] for s in cert.trace] == ["box-small-ball",
                                               "small-ball-to-diversity"]


def test_certify_refuses_contracted_expansion_layer():
    target = types.SimpleNamespace(dims=(4, 8), leak=0.25, sigma_mins=(0.01,))
    with pytest.raises(CertificateRefused, match="sigma_min"):
        certify_leaky_target(target)


# -- support enumeration bounds -----------------------------------------------------


def test_min_pairwise_distance_vs_brute(rng):
    X = rng.normal(size=(15, 3))
    brute = min(np.linalg.norm(X[i] - X[j])
                for i in range(15) for j in range(i + 1, 15))
    assert min_pairwise_distance(X) == pytest.approx(brute, rel=1e-12)
    with pytest.raises(UserInputError):
        min_pairwise_distance(X[:1])


def test_support_gap_cube_route():
    support = np.zeros((1024, 20))
    assert support_gap_lower_bound(support, ("cube", 20)) == 1.998046875
    # saturated support: no separation bound survives
    full = np.zeros((5, 2))
    assert support_gap_lower_bound(full, ("cube", 2)) == 0.0


def test_support_gap_box_route_beats_single_radius():
    support = np.zeros((1000, 30))
    best = support_gap_lower_bound(support, ("box", 30))
    single = levy_to_diversity(levy_box(30, 0.5), 1000).beta
    assert best >= single > 0.0


def test_support_gap_sample_target_route(rng):
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    target = SampleSet(pts)
    got = support_gap_lower_bound(np.zeros((1, 2)), target)
    assert got == pytest.approx(1.0 * (1.0 - 1.0 / 4.0))
    dup = SampleSet(np.zeros((3, 2)))
    with pytest.raises(UserInputError):
        support_gap_lower_bound(np.zeros((1, 2)), dup)


def test_support_gap_validation():
    with pytest.raises(UserInputError):
        support_gap_lower_bound(np.zeros((2, 2, 2)), ("cube", 2))
    with pytest.raises(UserInputError):
        support_gap_lower_bound(np.zeros((2, 2)), ("torus", 2))
    with pytest.raises(UserInputError):
        support_gap_lower_bound(np.zeros(((1 << 20) + 1, 1)), ("cube", 30))


# -- Monte-Carlo stress tests -------------------------------------------------------


def test_mc_small_ball_finds_planted_cluster(rng):
    cluster = np.zeros((100, 4))
    spread = rng.uniform(2.0, 50.0, size=(100, 4))
    pts = np.vstack([cluster, spread])
    assert mc_small_ball_mass(pts, 0.5, n_centers=200, rng=rng) >= 0.5


def test_mc_small_ball_respects_levy_box_bound(rng):
    # uniform box samples never concentrate beyond the analytic bound
    d, r, n = 6, 0.5, 20000
    pts = rng.uniform(0.0, 1.0, size=(n, d))
    bound = levy_box(d, r)
    got = mc_small_ball_mass(pts, r, n_centers=150, rng=rng)
    assert got <= bound.alpha


def test_random_center_ball_mass_below_levy_box(rng):
    # independent check with centers drawn fresh, not anchored at samples
    d, r, n = 8, 0.6, 20000
    pts = rng.uniform(0.0, 1.0, size=(n, d))
    centers = rng.uniform(0.0, 1.0, size=(64, d))
    alpha = levy_box(d, r).alpha
    d2 = ((pts[None, :, :] - centers[:, None, :]) ** 2).sum(axis=2)
    frac = (d2 <= r * r).mean(axis=1).max()
    sigma = math.sqrt(alpha * (1.0 - alpha) / n)
    assert frac <= alpha + 6.0 * sigma
