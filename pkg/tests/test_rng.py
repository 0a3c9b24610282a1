import numpy as np
import pytest

from trajlse import child_seed, substream


def test_same_labels_same_stream():
    a = substream(7, "train", 3).standard_normal(8)
    b = substream(7, "train", 3).standard_normal(8)
    assert np.array_equal(a, b)


def test_distinct_labels_distinct_streams():
    a = substream(7, "train", 3).standard_normal(8)
    b = substream(7, "train", 4).standard_normal(8)
    c = substream(7, "fresh", 3).standard_normal(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_adding_draws_preserves_prefix():
    short = substream(1, "tau").integers(0, 100, size=10)
    long = substream(1, "tau").integers(0, 100, size=50)
    assert np.array_equal(short, long[:10])


def test_child_seed_stable_and_distinct():
    assert child_seed(5, "eval", 128, 2) == child_seed(5, "eval", 128, 2)
    assert child_seed(5, "eval", 128, 2) != child_seed(5, "eval", 128, 3)
    assert child_seed(5, "eval", 128, 2) != child_seed(6, "eval", 128, 2)


def test_label_types_rejected():
    with pytest.raises(TypeError):
        substream(0, 1.5)
    with pytest.raises(ValueError):
        substream(0, -3)
