"""SampleSet round-trips and seed-distribution sanity."""

import numpy as np
import pytest

from prgforge.errors import UserInputError
from prgforge.samples import SampleSet, make_rng, sample_seeds


def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = make_rng(3)
    data = rng.standard_normal((17, 4))
    data[0, 0] = 1e-300            # exercise repr on extreme values
    data[1, 1] = 0.1
    ss = SampleSet(data, {"kind": "test", "seed": 3})
    path = tmp_path / "s.csv"
    ss.save(path)
    back = SampleSet.load(str(path))
    assert (back.data == data).all()
    assert back.meta == {"kind": "test", "seed": 3}


def test_bin_round_trip_with_sidecar(tmp_path):
    data = make_rng(4).uniform(-1, 1, size=(9, 3))
    ss = SampleSet(data, {"kind": "box"})
    path = tmp_path / "s.bin"
    ss.save(path)
    back = SampleSet.load(str(path))
    assert (back.data == data).all()
    assert back.meta == {"kind": "box"}
    (tmp_path / "s.bin.meta.json").unlink()
    with pytest.raises(UserInputError):
        SampleSet.load(str(path))


def test_sampleset_validation_and_len():
    with pytest.raises(UserInputError):
        SampleSet(np.zeros(5))
    ss = SampleSet(np.zeros((5, 2)))
    assert len(ss) == 5 and ss.dim == 2


def test_make_rng_accepts_int_and_generator():
    a = make_rng(7)
    b = make_rng(7)
    assert (a.integers(0, 100, 8) == b.integers(0, 100, 8)).all()
    g = make_rng(1)
    assert make_rng(g) is g


def test_sample_seeds_kinds():
    bits = sample_seeds("bits", 200, 10, 0)
    assert set(np.unique(bits)) == {-1.0, 1.0}
    box = sample_seeds("box", 200, 10, 0)
    assert box.min() >= -1.0 and box.max() <= 1.0
    gauss = sample_seeds("gaussian", 20000, 5, 0)
    assert abs(gauss.mean()) < 0.05
    assert abs(gauss.std() - 1.0) < 0.05
    with pytest.raises(UserInputError):
        sample_seeds("triangle", 5, 5, 0)
    with pytest.raises(UserInputError):
        sample_seeds("bits", 0, 5, 0)


def test_sample_seeds_deterministic_per_seed():
    a = sample_seeds("gaussian", 50, 3, 42)
    b = sample_seeds("gaussian", 50, 3, 42)
    c = sample_seeds("gaussian", 50, 3, 43)
    assert (a == b).all()
    assert not (a == c).all()
