import numpy as np
import pytest

from wfdiff.data import KINDS, synth_dataset


def test_deterministic():
    a, la = synth_dataset(12, size=8, seed=4)
    b, lb = synth_dataset(12, size=8, seed=4)
    assert la == lb and all(np.array_equal(x, y) for x, y in zip(a, b))
    c, _ = synth_dataset(12, size=8, seed=5)
    assert not np.array_equal(a[0], c[0])


def test_prefix_stable():
    a, _ = synth_dataset(5, size=8, seed=1)
    b, _ = synth_dataset(9, size=8, seed=1)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


@pytest.mark.parametrize("channels", [1, 3])
def test_range_and_shape(channels):
    imgs, _ = synth_dataset(30, size=16, channels=channels)
    for im in imgs:
        assert im.shape == (channels, 16, 16)
        assert im.min() >= 0 and im.max() <= 1 and im.max() > im.min()


@pytest.mark.parametrize("count", [1, 7, 100, 384])
def test_class_histogram_balanced(count):
    _, labels = synth_dataset(count, size=4)
    hist = np.bincount(labels, minlength=len(KINDS))
    assert hist.sum() == count and hist.max() - hist.min() <= 1


def test_size_must_be_power_of_two():
    with pytest.raises(ValueError):
        synth_dataset(1, size=12)
