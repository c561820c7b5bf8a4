import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wfdiff.schedule import DiffusionSchedule, cosine_lr, cutoff_radius, make_schedule
from wfdiff.spectral import corner_radius


def test_default_lengths_and_destruction():
    s = make_schedule()
    assert s.T == 1000 and len(s.r) == 1001 and len(s.beta) == 1000 and len(s.alpha_bar) == 1001
    assert s.alpha_bar[-1] < 1e-4
    assert s.hf_signal_coef(s.T) <= 1e-2


def test_alpha_bar_is_running_product():
    s = make_schedule(T=50, beta_min=1e-3, beta_max=0.1)
    prod = 1.0
    for t in range(1, 51):
        prod *= 1.0 - s.beta[t - 1]
        assert s.alpha_bar[t] == pytest.approx(prod, rel=1e-13)
    assert np.all(np.diff(s.alpha_bar) < 0)
    assert np.all((s.beta > 0) & (s.beta < 1))


def test_linear_cutoff():
    s = make_schedule(T=4, lf_shape=(16, 16))
    rm = corner_radius(16, 16)
    assert np.allclose(s.r, [0, rm / 4, rm / 2, 3 * rm / 4, rm], rtol=0, atol=1e-15)
    assert cutoff_radius(s, 0) == 0 and cutoff_radius(s, 4) == rm and cutoff_radius(s, 2) == rm / 2
    with pytest.raises(ValueError):
        cutoff_radius(s, 5)


@pytest.mark.parametrize("direction", ["low_first", "high_first"])
def test_mask_nesting(direction):
    s = make_schedule(T=32, lf_shape=(8, 8), mask_direction=direction)
    assert not s.removed_mask(0).any()
    assert s.removed_mask(s.T).all()
    for t in range(1, s.T + 1):
        assert np.all(s.removed_mask(t - 1) <= s.removed_mask(t))


def test_low_first_removes_dc_first():
    s = make_schedule(T=16, lf_shape=(8, 8))
    m = s.removed_mask(1)
    assert m[0, 0] and m.sum() == 1
    h = make_schedule(T=16, lf_shape=(8, 8), mask_direction="high_first").removed_mask(1)
    assert h[4, 4] and not h[0, 0]


def test_cosine_lr_points():
    assert cosine_lr(0.01, 0, 100) == 0.01
    assert cosine_lr(0.01, 100, 100) == pytest.approx(0.0, abs=1e-18)
    assert cosine_lr(0.01, 50, 100) == pytest.approx(0.005)


@given(st.integers(1, 10000), st.data())
def test_cosine_lr_monotone(total, data):
    a = data.draw(st.integers(0, total))
    b = data.draw(st.integers(a, total))
    assert 0 <= cosine_lr(1.0, b, total) <= cosine_lr(1.0, a, total) <= 1.0


def test_posterior_coefficients_vp():
    s = make_schedule(T=10, beta_min=0.01, beta_max=0.3)
    for t in range(2, 11):
        c0, ct = s.hf_posterior(t)
        ab_p, ab, b = s.alpha_bar[t - 1], s.alpha_bar[t], s.beta[t - 1]
        # textbook DDPM posterior mean coefficients
        assert c0 == pytest.approx(math.sqrt(ab_p) * b / (1 - ab))
        assert ct == pytest.approx(math.sqrt(1 - b) * (1 - ab_p) / (1 - ab))
    assert s.hf_posterior(1) == (1.0, 0.0)


def test_additive_mode_variance():
    s = make_schedule(T=10, hf_mode="additive")
    assert s.hf_signal_coef(7) == 1.0
    assert s.hf_noise_std(7) == pytest.approx(math.sqrt(np.sum(s.beta[:7])))


def test_validation():
    with pytest.raises(ValueError):
        make_schedule(T=0)
    with pytest.raises(ValueError):
        make_schedule(beta_min=0.1, beta_max=0.01)
    with pytest.raises(ValueError):
        make_schedule(hf_mode="ve")
    with pytest.raises(ValueError):
        make_schedule(mask_direction="sideways")


def test_per_plane_scales():
    s = make_schedule(T=4).with_scales(2.0, [0.1, 0.2, 0.3])
    assert s.spectrum_scale == 2.0 and [s.hf_scale_at(k) for k in range(3)] == [0.1, 0.2, 0.3]
    assert make_schedule(T=4, hf_scale=0.5).hf_scale_at(2) == 0.5
    assert isinstance(s, DiffusionSchedule)
