import math

import numpy as np
import pytest
import torch

from bytecomment.exceptions import MaskError, ShapeError, StepError
from bytecomment.nn import (
    Adam,
    LrSchedule,
    clip_grad_norm,
    dropout,
    grad_check,
    lstm_cell,
    masked_softmax,
    matmul,
    sigmoid,
)
from bytecomment.nn.checkpoint import load_checkpoint, save_checkpoint

D = torch.float64


def test_matmul_identity_and_oracle():
    x = torch.randn(4, 3, dtype=D)
    assert torch.equal(matmul(torch.eye(4, dtype=D), x), x)
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    got = matmul(torch.tensor(a), torch.tensor(b)).numpy()
    for i in range(3):
        for j in range(2):
            want = 0.0
            for k in range(4):
                want += a[i, k] * b[k, j]
            assert abs(got[i, j] - want) <= 1e-12
    with pytest.raises(ShapeError):
        matmul(torch.zeros(2, 3), torch.zeros(2, 3))


def test_sigmoid_zero():
    assert sigmoid(torch.tensor(0.0)).item() == 0.5


def test_softmax_cases():
    u = masked_softmax(torch.zeros(3, dtype=D))
    assert torch.allclose(u, torch.full((3,), 1 / 3, dtype=D), atol=0, rtol=1e-15)
    big = masked_softmax(torch.tensor([1000.0, 0.0], dtype=D), torch.tensor([True, True]))
    assert torch.isfinite(big).all() and big[0] == pytest.approx(1.0) and big[1] < 1e-300 + 1e-12
    x = [1.0, 2.0, 3.0]
    want = [math.exp(v) / sum(math.exp(w) for w in x) for v in x]
    got = masked_softmax(torch.tensor(x, dtype=D), torch.ones(3, dtype=torch.bool)).tolist()
    assert max(abs(g - w) for g, w in zip(got, want)) <= 1e-12


def test_softmax_mask():
    out = masked_softmax(torch.tensor([5.0, 1.0, 1.0]), torch.tensor([False, True, True]))
    assert out[0] == 0.0 and out[1:].sum().item() == pytest.approx(1.0)
    with pytest.raises(MaskError):
        masked_softmax(torch.zeros(2), torch.tensor([False, False]))


def _lstm_params(n_in, h, scale=0.3, seed=0):
    g = torch.Generator().manual_seed(seed)
    return [
        (torch.rand(*shape, generator=g, dtype=D) * 2 - 1) * scale
        for shape in [(1, n_in), (1, h), (1, h), (4 * h, n_in), (4 * h, h), (4 * h,)]
    ]


def test_lstm_zero_weights():
    h, c = lstm_cell(torch.ones(1, 3), torch.zeros(1, 2), torch.zeros(1, 2),
                     torch.zeros(8, 3), torch.zeros(8, 2), torch.zeros(8))
    assert torch.equal(h, torch.zeros(1, 2)) and torch.equal(c, torch.zeros(1, 2))


def test_lstm_output_bounded():
    for seed in range(50):
        out, _ = lstm_cell(*_lstm_params(5, 4, scale=3.0, seed=seed))
        assert (out.abs() < 1).all()
    # huge pre-activations saturate tanh to exactly 1.0 in floating point
    x, h, c, wi, wh, b = _lstm_params(5, 4, scale=10.0)
    out, _ = lstm_cell(x * 100, h, c * 50, wi, wh, b)
    assert (out.abs() <= 1).all()


def test_lstm_finite_differences():
    params = [p.requires_grad_() for p in _lstm_params(3, 4)]
    w = torch.linspace(-1, 1, 8, dtype=D).view(1, 8)

    def loss():
        h, c = lstm_cell(*params)
        return (torch.cat([h, c], -1) * w).sum()

    assert grad_check(loss, params, eps=1e-5) < 1e-4


def test_lr_schedule_values():
    lr = LrSchedule()
    assert lr(1000) == 1.25e-4
    assert lr(4000) == 5e-4
    assert lr(16000) == 2.5e-4
    with pytest.raises(StepError):
        lr(0)


def test_dropout():
    x = torch.ones(100_000, dtype=D)
    assert dropout(x, 0.0, True) is x
    assert dropout(x, 0.5, False) is x
    out = dropout(x, 0.1, True, generator=torch.Generator().manual_seed(3))
    frac = (out == 0).double().mean().item()
    assert 0.09 <= frac <= 0.11
    assert torch.allclose(out[out != 0], torch.full_like(out[out != 0], 1 / 0.9))


def test_grad_check_linear():
    g = torch.Generator().manual_seed(1)
    w = torch.randn(3, 4, generator=g, dtype=D, requires_grad=True)
    b = torch.randn(4, generator=g, dtype=D, requires_grad=True)
    x = torch.randn(5, 3, generator=g, dtype=D)
    t = torch.randn(5, 4, generator=g, dtype=D)
    assert grad_check(lambda: ((x @ w + b - t) ** 2).sum(), [w, b]) < 1e-6


class _WrongTanh(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        y = torch.tanh(x)
        ctx.save_for_backward(y)
        return y

    @staticmethod
    def backward(ctx, grad):
        (y,) = ctx.saved_tensors
        return -grad * (1 - y * y)


def test_grad_check_catches_sign_flip():
    w = torch.tensor([0.3, -0.7, 1.1], dtype=D, requires_grad=True)
    assert grad_check(lambda: _WrongTanh.apply(w).sum(), [w]) > 0.1


def test_adam_moves_against_gradient():
    p = torch.tensor([1.0, -1.0], dtype=D, requires_grad=True)
    opt = Adam({"p": p}, LrSchedule(base_lr=0.1, warmup=1))
    (p * torch.tensor([1.0, -1.0], dtype=D)).sum().backward()
    lr = opt.step()
    assert lr == 0.1 and opt.t == 1
    # first Adam step has magnitude lr regardless of gradient scale
    assert torch.allclose(p.detach(), torch.tensor([0.9, -0.9], dtype=D), atol=1e-6)
    assert torch.equal(p.grad, torch.zeros(2, dtype=D))


def test_clip_grad_norm():
    p = torch.zeros(2, dtype=D, requires_grad=True)
    p.grad = torch.tensor([30.0, 40.0], dtype=D)
    assert clip_grad_norm([p], 5.0) == pytest.approx(50.0)
    assert p.grad.norm().item() == pytest.approx(5.0, rel=1e-6)


def test_checkpoint_roundtrip_is_deterministic(tmp_path):
    tensors = {"a": torch.arange(6, dtype=D).view(2, 3), "b": torch.ones(2)}
    save_checkpoint(tmp_path / "x.ckpt", tensors, step=7, meta={"k": 1})
    save_checkpoint(tmp_path / "y.ckpt", tensors, step=7, meta={"k": 1})
    assert (tmp_path / "x.ckpt").read_bytes() == (tmp_path / "y.ckpt").read_bytes()
    got, header = load_checkpoint(tmp_path / "x.ckpt")
    assert header["step"] == 7 and header["meta"] == {"k": 1}
    assert all(torch.equal(torch.as_tensor(got[k]), tensors[k]) for k in tensors)
