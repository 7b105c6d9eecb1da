"""Numerical kernels on top of torch autograd, plus optimiser and checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import torch

from ..exceptions import MaskError, NumericFault, ShapeError, StepError

Tensor = torch.Tensor


def check_finite(x: Tensor, what: str = "tensor") -> Tensor:
    if not torch.isfinite(x).all():
        raise NumericFault(f"non-finite values in {what}")
    return x


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: {tuple(a.shape)} @ {tuple(b.shape)}")
    return a @ b


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        torch.broadcast_shapes(a.shape, b.shape)
    except RuntimeError:
        raise ShapeError(f"add: {tuple(a.shape)} + {tuple(b.shape)}") from None
    return a + b


sigmoid = torch.sigmoid
tanh = torch.tanh


def masked_softmax(x: Tensor, mask: Optional[Tensor] = None) -> Tensor:
    """Softmax over the last axis; ``mask`` False positions get exactly 0."""
    if mask is None:
        return torch.softmax(x, dim=-1)
    if mask.shape != x.shape:
        raise ShapeError(f"mask {tuple(mask.shape)} vs scores {tuple(x.shape)}")
    if not mask.any(dim=-1).all():
        raise MaskError("softmax over a fully masked row")
    scores = x.masked_fill(~mask, float("-inf"))
    scores = scores - scores.max(dim=-1, keepdim=True).values.detach()
    e = torch.exp(scores)
    return e / e.sum(dim=-1, keepdim=True)


def lstm_cell(
    x: Tensor, h: Tensor, c: Tensor, w_ih: Tensor, w_hh: Tensor, bias: Tensor
) -> Tuple[Tensor, Tensor]:
    """One LSTM step. Weights are ``(4H, in)``, ``(4H, H)``, ``(4H,)``; gate order i, f, g, o."""
    hidden = h.shape[-1]
    if w_ih.shape != (4 * hidden, x.shape[-1]) or w_hh.shape != (4 * hidden, hidden):
        raise ShapeError(
            f"lstm_cell: x{tuple(x.shape)} h{tuple(h.shape)} "
            f"w_ih{tuple(w_ih.shape)} w_hh{tuple(w_hh.shape)}"
        )
    gates = x @ w_ih.T + h @ w_hh.T + bias
    i, f, g, o = gates.chunk(4, dim=-1)
    c_new = torch.sigmoid(f) * c + torch.sigmoid(i) * torch.tanh(g)
    h_new = torch.sigmoid(o) * torch.tanh(c_new)
    return h_new, c_new


def dropout(x: Tensor, rate: float, training: bool, generator: Optional[torch.Generator] = None) -> Tensor:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = torch.rand(x.shape, generator=generator, dtype=x.dtype) >= rate
    return x * keep / (1.0 - rate)


@dataclass(frozen=True)
class LrSchedule:
    """Linear warmup to ``base_lr`` then inverse-square-root decay."""

    base_lr: float = 5e-4
    warmup: int = 4000

    def __call__(self, step: int) -> float:
        if step < 1:
            raise StepError(f"learning-rate step must be >= 1, got {step}")
        return self.base_lr * min(step / self.warmup, math.sqrt(self.warmup / step))


class Adam:
    """Adam (beta1=0.9, beta2=0.999, eps=1e-8) driven by an :class:`LrSchedule`."""

    def __init__(self, params: Mapping[str, Tensor], schedule: LrSchedule = LrSchedule()):
        self.names = list(params)
        self.params = [params[n] for n in self.names]
        self.schedule = schedule
        self.optimizer = torch.optim.Adam(
            self.params, lr=schedule(1), betas=(0.9, 0.999), eps=1e-8, foreach=False
        )
        self.t = 0

    def step(self, t: Optional[int] = None) -> float:
        """Apply one update at step ``t`` (default: next step); zeroes grads."""
        t = self.t + 1 if t is None else t
        if t < 1:
            raise StepError(f"optimizer step must be >= 1, got {t}")
        lr = self.schedule(t)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        self.optimizer.step()
        self.optimizer.zero_grad(set_to_none=False)
        self.t = t
        return lr

    def state_arrays(self) -> Dict[str, Tensor]:
        out = {}
        for name, p in zip(self.names, self.params):
            st = self.optimizer.state.get(p)
            if st:
                out[f"adam_m/{name}"] = st["exp_avg"].detach().clone()
                out[f"adam_v/{name}"] = st["exp_avg_sq"].detach().clone()
        return out

    def load_state_arrays(self, arrays: Mapping[str, Tensor], t: int) -> None:
        self.t = t
        for name, p in zip(self.names, self.params):
            if f"adam_m/{name}" in arrays:
                self.optimizer.state[p] = {
                    "step": torch.tensor(float(t)),
                    "exp_avg": arrays[f"adam_m/{name}"].clone().to(p.dtype),
                    "exp_avg_sq": arrays[f"adam_v/{name}"].clone().to(p.dtype),
                }


def adam_step(optimizer: Adam, t: int) -> float:
    return optimizer.step(t)


def clip_grad_norm(params: Iterable[Tensor], max_norm: float = 5.0) -> float:
    return float(torch.nn.utils.clip_grad_norm_(list(params), max_norm))


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-5,
    max_coords: Optional[int] = None,
    generator: Optional[torch.Generator] = None,
) -> float:
    """Max relative error between autograd and central differences.

    ``loss_fn`` must recompute a scalar loss from the current values of
    ``params`` (64-bit leaf tensors with ``requires_grad``). With
    ``max_coords`` only that many randomly chosen coordinates per parameter
    are checked.
    """
    for p in params:
        p.grad = None
    loss = loss_fn()
    if not torch.isfinite(loss):
        raise NumericFault("non-finite loss in gradient check")
    loss.backward()
    analytic = [p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p) for p in params]
    worst = 0.0
    with torch.no_grad():
        for p, g in zip(params, analytic):
            flat = p.view(-1)
            coords = range(flat.numel())
            if max_coords is not None and flat.numel() > max_coords:
                coords = torch.randperm(flat.numel(), generator=generator)[:max_coords].tolist()
            for j in coords:
                orig = flat[j].item()
                flat[j] = orig + eps
                up = loss_fn().item()
                flat[j] = orig - eps
                down = loss_fn().item()
                flat[j] = orig
                if not (math.isfinite(up) and math.isfinite(down)):
                    raise NumericFault("non-finite loss in gradient check")
                numeric = (up - down) / (2 * eps)
                worst = max(worst, relative_error(g.view(-1)[j].item(), numeric))
    return worst
