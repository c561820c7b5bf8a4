import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfdiff.rng import Rng, mix64

M = (1 << 64) - 1


def splitmix64(seed, n):
    # plain-integer reference implementation
    out, x = [], seed
    for _ in range(n):
        x = (x + 0x9E3779B97F4A7C15) & M
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        out.append(z ^ (z >> 31))
    return out


def test_published_vector():
    assert [int(v) for v in Rng(1234567).bits(5)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
        4593380528125082431, 16408922859458223821]
    assert int(Rng(0).bits(1)[0]) == 0xE220A8397B1DCDAF


@given(st.integers(0, M), st.integers(1, 40))
@settings(max_examples=50, deadline=None)
def test_matches_reference(seed, n):
    assert [int(v) for v in Rng(seed).bits(n)] == splitmix64(seed, n)


def test_counter_resume():
    a = Rng(9)
    a.bits(7)
    b = Rng.from_state(a.state())
    assert np.array_equal(a.bits(5), b.bits(5))
    assert a.state() == (9, 12)


def test_chunking_does_not_matter():
    a, b = Rng(3), Rng(3)
    whole = a.normal(10)
    parts = np.concatenate([b.normal(4), b.normal(6)])
    assert np.array_equal(whole, parts)


def test_spawn_is_documented_mix():
    r = Rng(5)
    child = r.spawn(2)
    assert child.state() == (mix64(5 ^ mix64(2 + 0x632BE59BD9B4E019)), 0)
    assert r.state() == (5, 0)
    assert r.spawn(1).state() != r.spawn(2).state()


def test_uniform_and_integers_ranges():
    r = Rng(11)
    u = r.uniform(10000)
    assert u.min() >= 0 and u.max() < 1
    k = r.integers(3, 7, size=10000)
    assert k.min() == 3 and k.max() == 6


def test_normal_moments():
    z = Rng(1).normal(200000)
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1) < 0.01


def test_integers_rejects_empty_range():
    with pytest.raises(ValueError):
        Rng(0).integers(4, 4)
