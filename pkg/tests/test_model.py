import numpy as np
import pytest

from model_fixtures import model_grad_error, toy_model
from wfdiff import nn
from wfdiff.forward import forward_trajectory
from wfdiff.model import Condition, ModelHyper, OracleDenoiser, forward, init_model, oracle_denoiser, param_count
from wfdiff.rng import Rng
from wfdiff.schedule import make_schedule
from wfdiff.spectral import decompose, ifft2c


def test_input_channels():
    assert ModelHyper(width=32).in_channels == 5
    assert ModelHyper(channels=3).in_channels == 15


def test_param_count_closed_form():
    for hyper in [ModelHyper(), ModelHyper(width=8, time_dim=8, num_classes=0), ModelHyper(channels=3)]:
        m = init_model(hyper, make_schedule(T=4, lf_shape=(4, 4)), Rng(0))
        assert sum(p.values.size for p in m.params.values()) == param_count(hyper)
    # F=32, D=32, 3 classes, grey: counted by hand from the layer list
    fstem = 4 * 16 * 9 + 16
    wstem = 4 * 16 * 9 + 16
    tmlp = 32 * 32 + 32
    blocks = 2 * (2 * (32 * 32 * 9 + 32) + 32 * 32 + 32)
    attn = 4 * 32 * 32
    table = 4 * 32
    head = 32 * 5 * 9 + 5
    assert param_count(ModelHyper()) == fstem + wstem + tmlp + blocks + attn + table + head


def test_init_deterministic():
    a, b = toy_model(seed=3), toy_model(seed=3)
    assert all(np.array_equal(a[k], b[k]) for k in a.params)
    c = toy_model(seed=4)
    assert not np.array_equal(a["head.w"], c["head.w"])


@pytest.mark.parametrize("size", [8, 16, 32])
def test_output_shapes_and_symmetry(size):
    h = size // 2
    sched = make_schedule(T=4, lf_shape=(h, h))
    m = init_model(ModelHyper(width=8, time_dim=8), sched, Rng(0))
    img = np.random.default_rng(size).random((1, size, size))
    st = forward_trajectory(decompose(img), sched, Rng(1))[3]
    out = m.predict(st, 3, Condition.of(0))
    assert out.t == 2 and out.spectrum.shape == (1, h, h) and [p.shape for p in out.hf] == [(1, h, h)] * 3
    assert np.max(np.abs(ifft2c(out.spectrum).imag)) <= 1e-9


def test_class_changes_output():
    m = toy_model()
    sched = m.schedule
    st = forward_trajectory(decompose(np.random.default_rng(0).random((1, 8, 8))), sched, Rng(2))[5]
    a = forward(m, st, 5, Condition.of(0))
    b = forward(m, st, 5, Condition.of(2))
    c = forward(m, st, 5)
    assert np.linalg.norm(a.spectrum - b.spectrum) > 0
    assert np.linalg.norm(a.spectrum - c.spectrum) > 0


def test_bad_inputs_rejected():
    m = toy_model()
    st = forward_trajectory(decompose(np.zeros((1, 8, 8))), m.schedule, Rng(0))[2]
    with pytest.raises(ValueError):
        m.predict(st, 3, Condition())
    with pytest.raises(ValueError):
        m.predict(st, 2, Condition.of(3))


def test_batched_matches_single():
    m = toy_model()
    sts = [forward_trajectory(decompose(np.random.default_rng(i).random((1, 8, 8))), m.schedule, Rng(i))[4]
           for i in range(2)]
    from wfdiff.spectral import SpectralState
    batch = SpectralState(4, np.stack([s.spectrum for s in sts]), [np.stack(p) for p in zip(*[s.hf for s in sts])],
                          sts[0].meta)
    out = m.predict(batch, 4, Condition.of(1))
    single = m.predict(sts[1], 4, Condition.of(1))
    assert np.allclose(out.spectrum[1], single.spectrum, atol=1e-12)
    assert np.allclose(out.hf[2][1], single.hf[2], atol=1e-12)


def test_gradients_match_finite_differences():
    assert model_grad_error() <= 1e-3


def test_gradient_check_catches_broken_conv(monkeypatch):
    good = nn.conv2d_backward

    def flipped(dy, cache):
        dx, dk, db = good(dy, cache)
        return dx, -dk, db
    monkeypatch.setattr(nn, "conv2d_backward", flipped)
    assert model_grad_error(coords=20) > 0.5


def test_oracle_returns_previous_state():
    sched = make_schedule(T=4, lf_shape=(4, 4))
    traj = forward_trajectory(decompose(np.random.default_rng(0).random((1, 8, 8))), sched, Rng(0))
    prev = oracle_denoiser(traj, 3)
    assert np.array_equal(prev.spectrum, traj[2].spectrum)
    with pytest.raises(ValueError):
        OracleDenoiser(traj).predict(traj[0], 0)
    with pytest.raises(ValueError):
        OracleDenoiser(traj[:3]).predict(traj[3], 3)
