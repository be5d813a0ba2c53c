"""Decoder, frontend, target sampling, and full generator assembly."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from prgforge.compiler import leaky_eval_float
from prgforge.errors import UserInputError
from prgforge.pipeline import (TargetModel, assemble, bits_per_coordinate,
                               build_bit_decoder, build_frontend,
                               load_generator, sample_generator, sample_target,
                               save_generator, spec_digest)
from prgforge.prg import LocalPrg, sample_hypergraph, tsa_predicate
from prgforge.samples import make_rng


def make_prg(m, d, seed=0):
    return LocalPrg(sample_hypergraph(m, d, 5, make_rng(seed)), tsa_predicate())


# -- decoder ------------------------------------------------------------------------


def test_bits_per_coordinate():
    assert bits_per_coordinate(0.5) == 1
    assert bits_per_coordinate(0.125) == 3
    assert bits_per_coordinate(0.2) == 3
    assert bits_per_coordinate(0.9) == 1
    for bad in (0.0, 1.0, -1, 2):
        with pytest.raises(UserInputError):
            bits_per_coordinate(bad)


def test_decoder_maps_bit_blocks_onto_dyadic_grid():
    net = build_bit_decoder(3, 0.125)  # one coordinate, n = 3 bits
    seen = set()
    for bits in itertools.product((-1, 1), repeat=3):
        out = net.eval_exact(list(bits))
        assert len(out) == 1
        seen.add(out[0].as_fraction())
    assert seen == {Fraction(i, 8) for i in range(8)}
    # most-significant bit first within a block
    hi = net.eval_exact([1, -1, -1])[0].as_fraction()
    assert hi == Fraction(1, 2)


def test_decoder_two_blocks_frozen_example():
    net = build_bit_decoder(6, 0.125)
    out = [s.as_fraction() for s in net.eval_exact([1, 1, 1, -1, -1, -1])]
    assert out == [Fraction(7, 8), Fraction(0)]
    assert net.meta["w1_per_coordinate"] == Fraction(1, 16)


def test_decoder_rejects_non_multiple_widths():
    with pytest.raises(UserInputError):
        build_bit_decoder(7, 0.125)
    with pytest.raises(UserInputError):
        build_bit_decoder(0, 0.125)


# -- frontend -----------------------------------------------------------------------


def test_frontend_clamps_and_records_exception_bounds():
    net = build_frontend(4, 0.125, lambda_downstream=10.0, d_downstream=2)
    xi = net.meta["xi"]
    assert Fraction(1, xi).denominator == 1   # xi = 1/q
    q = int(1 / xi)
    assert net.meta["exception_prob_gaussian"] == pytest.approx(
        4 * (1.0 / q) * math.sqrt(2.0 / math.pi))
    assert net.meta["exception_prob_box"] == pytest.approx(4.0 / q)
    # the clamp saturates at +-1 beyond +-xi
    y = net.eval_float([1.0, -1.0, float(xi) / 2, 0.0])
    assert np.allclose(y, [1.0, -1.0, 0.5, 0.0], atol=1e-12)
    # xi' shrinks when the downstream Lipschitz bound grows
    tighter = build_frontend(4, 0.125, lambda_downstream=1000.0,
                             d_downstream=2)
    assert tighter.meta["xi"] < xi


# -- targets ------------------------------------------------------------------------


def test_sample_target_shapes_and_sigma_mins():
    t = sample_target((8, 10, 12), 0.25, make_rng(5))
    assert (t.r, t.d) == (8, 12)
    assert t.H.d_in == 8 and t.H.d_out == 12
    for W, smin in zip(t.weights, t.sigma_mins):
        grams = np.linalg.eigvalsh(W.T @ W)
        assert math.sqrt(max(grams.min(), 0.0)) == pytest.approx(smin, rel=1e-8)
    X = make_rng(0).uniform(-1, 1, (16, 8))
    assert np.allclose(t.H.eval_float_batch(X),
                       leaky_eval_float(t.weights, 0.25, X), atol=1e-9)


def test_sample_target_identity_case():
    t = sample_target((6,), 0.25, make_rng(0))
    assert t.leak is None and t.r == t.d == 6
    X = make_rng(1).standard_normal((4, 6))
    assert np.allclose(t.H.eval_float_batch(X), X)


def test_sample_target_validation():
    with pytest.raises(UserInputError):
        sample_target((10, 10), 0.25, make_rng(0))   # no expansion
    with pytest.raises(UserInputError):
        sample_target((10, 12), 0.75, make_rng(0))   # leak > 1/2
    with pytest.raises(UserInputError):
        sample_target((), 0.25, make_rng(0))


# -- assembly -----------------------------------------------------------------------


@pytest.mark.parametrize("seed_kind", ["bits", "gaussian", "box"])
def test_assemble_claims_identities_hold(seed_kind):
    prg = make_prg(10, 20)
    target = sample_target((4,), 0.25, make_rng(2))
    spec = assemble(prg, target, seed_kind, 0.125)
    idents = spec.claims["identities"]
    for name in ("L", "S", "tau", "lambda"):
        assert idents[name]["holds"], f"{name} identity violated"
    assert spec.network.d_in == 10
    assert spec.network.d_out == 4
    if seed_kind != "bits":
        assert spec.stages[0][0] == "frontend"
        assert "exception_prob_bound" in spec.claims


def test_assemble_identities_recomputed_independently():
    prg = make_prg(10, 20)
    target = sample_target((4,), 0.25, make_rng(2))
    spec = assemble(prg, target, "bits", 0.125)
    profs = [net.profile for _, net in spec.stages]
    junctions = spec.claims["junction_dims"]
    p = spec.network.profile
    assert p.L == sum(q.L for q in profs)
    assert p.S == sum(q.S for q in profs) + sum(junctions)
    assert p.tau == max(q.tau for q in profs)
    lam = 1.0
    for q in profs:
        lam *= q.lam
    for r in junctions:
        lam *= math.sqrt(r)
    assert p.lam == pytest.approx(lam, rel=1e-9)


def test_assemble_projection_fallback_and_refusal():
    # d too small for the needed bits, but the seed itself suffices
    prg = make_prg(12, 4)
    target = sample_target((4,), 0.25, make_rng(1))
    spec = assemble(prg, target, "bits", 0.125)
    assert spec.stages[0][0] == "projection"
    # neither the outputs nor the seed supply enough bits
    small = make_prg(6, 4)
    with pytest.raises(UserInputError):
        assemble(small, sample_target((4,), 0.25, make_rng(1)), "bits", 0.125)
    with pytest.raises(UserInputError):
        assemble(prg, target, "pink-noise", 0.125)


def test_bits_generator_outputs_live_on_decoder_grid():
    prg = make_prg(10, 24)
    target = sample_target((8,), 0.25, make_rng(3))
    spec = assemble(prg, target, "bits", 0.5)   # n = 1 bit per coordinate
    ss = sample_generator(spec, 64, 7)
    assert ss.data.shape == (64, 8)
    assert set(np.unique(ss.data)) <= {0.0, 0.5}


def test_sample_generator_matches_network_forward():
    from prgforge.samples import sample_seeds

    prg = make_prg(10, 20)
    target = sample_target((4,), 0.25, make_rng(2))
    spec = assemble(prg, target, "bits", 0.125)
    ss = sample_generator(spec, 32, 11)
    seeds = sample_seeds("bits", 32, 10, make_rng(11))
    assert np.allclose(ss.data, spec.network.eval_float_batch(seeds))
    assert ss.meta["rng_seed"] == 11


def test_generator_save_load_round_trip(tmp_path):
    prg = make_prg(10, 20)
    target = sample_target((4, 6), 0.25, make_rng(4))
    spec = assemble(prg, target, "bits", 0.25)
    gen_dir = tmp_path / "gen"
    save_generator(spec, str(gen_dir))
    for path in (gen_dir, gen_dir / "generator.json"):
        back = load_generator(str(path))
        X = make_rng(0).choice([-1.0, 1.0], size=(16, 10))
        assert np.allclose(back.network.eval_float_batch(X),
                           spec.network.eval_float_batch(X))
        assert [r for r, _ in back.stages] == [r for r, _ in spec.stages]
        assert spec_digest(back) == spec_digest(spec)


def test_target_model_validates_profile_dims():
    t = sample_target((4, 6), 0.25, make_rng(0))
    with pytest.raises(UserInputError):
        TargetModel(H=t.H, r=5, d=6, dims=(5, 6), leak=t.leak)
