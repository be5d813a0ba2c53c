"""Local PRG: hypergraphs, TSA predicate, batch evaluation, image enumeration.

The batch evaluator is cross-checked against a from-scratch per-row Python
loop, and the realized per-coordinate networks against the predicate itself.
"""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prgforge.compiler import Predicate, fourier_transform
from prgforge.errors import UserInputError
from prgforge.prg import (Hypergraph, LocalPrg, enumerate_image,
                          enumerate_seeds, pack_pm1_rows, sample_hypergraph,
                          tsa_predicate)
from prgforge.samples import make_rng


def brute_prg_eval(graph, pred, seeds):
    out = np.empty((len(seeds), graph.d), dtype=np.int8)
    for i, s in enumerate(seeds):
        for ell, row in enumerate(graph.sets):
            out[i, ell] = pred.evaluate([int(s[j]) for j in row])
    return out


def identity_prg(m, d=None):
    """P(x) = x with singleton edges: injective whenever d >= m distinct edges."""
    d = m if d is None else d
    pred = Predicate(1, [-1, 1])
    sets = np.array([[i % m] for i in range(d)], dtype=np.int64)
    return LocalPrg(Hypergraph(m=m, sets=sets), pred)


# -- predicate ---------------------------------------------------------------------


def test_tsa_truth_table_matches_direct_formula():
    pred = tsa_predicate()
    for x in itertools.product((-1, 1), repeat=5):
        want = x[0] * x[1] * x[2] * (1 if x[3] == 1 and x[4] == 1 else -1)
        assert pred.evaluate(x) == want


def test_tsa_is_balanced():
    pred = tsa_predicate()
    assert sum(pred.table) == 0


def test_tsa_degree_and_mass():
    F = fourier_transform(tsa_predicate())
    assert F.degree() == 5
    assert F.coefficient(()) == 0
    assert F.squared_mass() == 1


# -- hypergraph ---------------------------------------------------------------------


def test_hypergraph_validation():
    with pytest.raises(UserInputError):
        Hypergraph(m=4, sets=np.array([[0, 0]]))       # repeated index
    with pytest.raises(UserInputError):
        Hypergraph(m=4, sets=np.array([[0, 4]]))       # out of range
    with pytest.raises(UserInputError):
        Hypergraph(m=2, sets=np.array([[0, 1, 1]]))    # k > m and repeated
    g = Hypergraph(m=4, sets=np.array([[3, 1]]))
    assert g.sets.tolist() == [[1, 3]]                 # stored sorted


def test_hypergraph_multiplicity_counts_shared_sets():
    g = Hypergraph(m=5, sets=np.array([[0, 1], [0, 1], [2, 3]]))
    assert g.multiplicity() == 2
    assert Hypergraph(m=5, sets=np.array([[0, 1], [2, 3]])).multiplicity() == 0


def test_hypergraph_json_round_trip(tmp_path):
    g = sample_hypergraph(10, 7, 3, make_rng(5))
    path = tmp_path / "g.json"
    g.save(path)
    back = Hypergraph.load(path)
    assert back.m == g.m and (back.sets == g.sets).all()
    with pytest.raises(UserInputError):
        Hypergraph.from_json_dict({"schema": "nope", "m": 1, "sets": [[0]]})


def test_sample_hypergraph_is_reproducible():
    a = sample_hypergraph(12, 20, 5, 99)
    b = sample_hypergraph(12, 20, 5, 99)
    assert (a.sets == b.sets).all()
    assert a.rng_seed == 99
    assert a.sets.shape == (20, 5)
    assert (np.diff(a.sets, axis=1) > 0).all()  # sorted, distinct
    with pytest.raises(UserInputError):
        sample_hypergraph(3, 5, 4, 0)


# -- evaluation ----------------------------------------------------------------------


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_batch_evaluation_matches_python_loop(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(6, 12))
    d = int(rng.integers(1, 20))
    graph = sample_hypergraph(m, d, 5, make_rng(seed))
    prg = LocalPrg(graph, tsa_predicate())
    seeds = rng.choice([-1, 1], size=(32, m)).astype(np.int8)
    assert (prg.evaluate_batch(seeds)
            == brute_prg_eval(graph, tsa_predicate(), seeds)).all()


def test_single_seed_evaluation_and_validation():
    prg = LocalPrg(sample_hypergraph(6, 4, 5, 1), tsa_predicate())
    s = np.ones(6, dtype=np.int8)
    assert (prg.evaluate(s) == prg.evaluate_batch(s[None, :])[0]).all()
    with pytest.raises(UserInputError):
        prg.evaluate(np.zeros(6))
    with pytest.raises(UserInputError):
        prg.evaluate(np.ones(5))
    with pytest.raises(UserInputError):
        LocalPrg(sample_hypergraph(6, 4, 3, 1), tsa_predicate())


def test_realized_networks_agree_with_predicate():
    m = 7
    prg = LocalPrg(sample_hypergraph(m, 6, 5, 3), tsa_predicate())
    nets = prg.realize_networks()
    assert len(nets) == prg.d
    seeds = enumerate_seeds(m)
    outs = prg.evaluate_batch(seeds)
    for ell, net in enumerate(nets):
        assert net.d_in == m
        Y, tau_out = net.eval_exact_batch(seeds.astype(np.int64))
        got = [Fraction(int(v), 1 << tau_out) for v in Y[:, 0]]
        assert got == [Fraction(int(v)) for v in outs[:, ell]]


def test_enumerate_seeds_msb_first_order():
    X = enumerate_seeds(3)
    assert X.shape == (8, 3)
    assert X[0].tolist() == [-1, -1, -1]
    assert X[1].tolist() == [-1, -1, 1]   # least-significant bit is last coord
    assert X[4].tolist() == [1, -1, -1]
    assert X[7].tolist() == [1, 1, 1]
    part = enumerate_seeds(3, start=2, stop=5)
    assert (part == X[2:5]).all()


def test_pack_pm1_rows_is_injective_encoding():
    X = enumerate_seeds(10)
    packed = pack_pm1_rows(X)
    assert len(np.unique(packed)) == len(X)


# -- image --------------------------------------------------------------------------


def test_image_membership_and_witnesses():
    prg = LocalPrg(sample_hypergraph(8, 12, 5, 7), tsa_predicate())
    img = enumerate_image(prg)
    seeds = enumerate_seeds(8)
    outs = prg.evaluate_batch(seeds)
    # brute set of outputs == enumerated image
    brute = {tuple(r.tolist()) for r in outs}
    assert img.size == len(brute)
    assert img.contains_batch(outs).all()
    # a flipped coordinate leaves the image unless it collides by luck
    flipped = outs.copy()
    flipped[:, 0] *= -1
    inside = img.contains_batch(flipped)
    for row, ok in zip(flipped, inside):
        assert ok == (tuple(row.tolist()) in brute)
    w = img.witness_seed(outs[5])
    assert w is not None
    assert (prg.evaluate(w) == outs[5]).all()
    assert img.witness_seed(np.full(12, 1, dtype=np.int8)) is None \
        or tuple([1] * 12) in brute


def test_injectivity_detection():
    inj = identity_prg(4)  # identity map on 4 bits
    assert enumerate_image(inj).is_injective
    const_sets = np.zeros((6, 1), dtype=np.int64)
    non = LocalPrg(Hypergraph(m=3, sets=const_sets), Predicate(1, [-1, 1]))
    img = enumerate_image(non)
    assert img.size == 2
    assert not img.is_injective


def test_image_chunked_enumeration_matches_unchunked():
    prg = LocalPrg(sample_hypergraph(9, 10, 5, 11), tsa_predicate())
    a = enumerate_image(prg, chunk=64)
    b = enumerate_image(prg, chunk=1 << 16)
    assert a.size == b.size
    assert (a.points == b.points).all()
