"""Bidirectional LSTM encoder, two-layer LSTM decoder, attention, copy and coverage."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import torch
from torch import nn

from ..exceptions import EmptyInput, ShapeError
from ..nn.core import check_finite, dropout, lstm_cell, masked_softmax
from .vocab import PAD, START, UNK, Vocabulary

Tensor = torch.Tensor


@dataclass
class Encoded:
    """Encoder output for a padded batch."""

    states: Tensor  # (B, L, 2H): [forward ; backward] per position
    mask: Tensor  # (B, L) True on real tokens
    ext_ids: Tensor  # (B, L) input ids over the extended vocabulary
    n_oov: int
    keys: Tensor  # (B, L, A) precomputed W_eh h_i
    final: Tensor  # (B, 2H) [last forward ; first backward]

    def select(self, index: Tensor) -> "Encoded":
        return replace(
            self,
            states=self.states[index],
            mask=self.mask[index],
            ext_ids=self.ext_ids[index],
            keys=self.keys[index],
            final=self.final[index],
        )


@dataclass
class DecodeState:
    h1: Tensor
    c1: Tensor
    h2: Tensor
    c2: Tensor
    coverage: Tensor  # (B, L) running sum of past attention

    def select(self, index: Tensor) -> "DecodeState":
        return DecodeState(*(getattr(self, f)[index] for f in ("h1", "c1", "h2", "c2", "coverage")))


class StepOutput(NamedTuple):
    p_star: Tensor  # (B, V + n_oov) final distribution
    p_vocab: Tensor  # (B, V) generation distribution
    p_gen_copy: Tensor  # (B, 1) copy-gate probability
    attention: Tensor  # (B, L)
    context: Tensor  # (B, 2H)
    state: DecodeState


class Seq2SeqNetwork(nn.Module):
    """All learnable parameters plus the forward computations.

    ``use_copy`` and ``use_coverage`` switch the copy gate and the coverage
    term off for ablations; ``force_copy_gate`` pins the gate to a constant.
    """

    def __init__(
        self,
        vocab_size: int,
        embed_dim: int = 256,
        hidden_dim: int = 256,
        dropout_rate: float = 0.1,
        use_copy: bool = True,
        use_coverage: bool = True,
        init_scale: float = 0.08,
        dtype: torch.dtype = torch.float32,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        V, E, H = vocab_size, embed_dim, hidden_dim
        A = H
        self.vocab_size, self.embed_dim, self.hidden_dim = V, E, H
        self.dropout_rate = dropout_rate
        self.use_copy = use_copy
        self.use_coverage = use_coverage
        self.force_copy_gate: Optional[float] = None
        self.dropout_generator: Optional[torch.Generator] = None

        def w(*shape):
            t = torch.empty(*shape, dtype=dtype).uniform_(-init_scale, init_scale, generator=generator)
            return nn.Parameter(t)

        def zeros(*shape):
            return nn.Parameter(torch.zeros(*shape, dtype=dtype))

        self.embedding = w(V, E)
        self.enc_fw_ih, self.enc_fw_hh, self.enc_fw_b = w(4 * H, E), w(4 * H, H), zeros(4 * H)
        self.enc_bw_ih, self.enc_bw_hh, self.enc_bw_b = w(4 * H, E), w(4 * H, H), zeros(4 * H)
        self.bridge_w, self.bridge_b = w(4 * H, 2 * H), zeros(4 * H)
        self.dec1_ih, self.dec1_hh, self.dec1_b = w(4 * H, E), w(4 * H, H), zeros(4 * H)
        self.dec2_ih, self.dec2_hh, self.dec2_b = w(4 * H, H), w(4 * H, H), zeros(4 * H)
        self.att_v = w(A)
        self.att_w_eh = w(A, 2 * H)
        self.att_w_sh = w(A, H)
        self.att_w_cv = w(A)
        self.att_b = zeros(A)
        self.out_w, self.out_b = w(V, 3 * H), zeros(V)
        self.copy_w_c, self.copy_w_s, self.copy_w_x = w(2 * H), w(H), w(E)
        self.copy_b = zeros(1)

    # -- pieces -----------------------------------------------------------

    def _drop(self, x: Tensor) -> Tensor:
        return dropout(x, self.dropout_rate, self.training, self.dropout_generator)

    def embed(self, ids: Tensor) -> Tensor:
        return self._drop(self.embedding[ids])

    def encode(self, ids: Tensor, ext_ids: Optional[Tensor] = None, n_oov: int = 0) -> Encoded:
        """Run both encoder directions over a right-padded ``(B, L)`` id batch."""
        if ids.dim() != 2:
            raise ShapeError(f"encode expects (batch, length) ids, got {tuple(ids.shape)}")
        mask = ids != PAD
        if ids.shape[1] == 0 or not mask.any(dim=1).all():
            raise EmptyInput("encoder input is empty after PAD stripping")
        B, L = ids.shape
        H = self.hidden_dim
        x = self.embed(ids)
        m = mask.unsqueeze(-1).to(x.dtype)
        h = c = x.new_zeros(B, H)
        fwd = []
        for t in range(L):
            hn, cn = lstm_cell(x[:, t], h, c, self.enc_fw_ih, self.enc_fw_hh, self.enc_fw_b)
            h = m[:, t] * hn + (1 - m[:, t]) * h
            c = m[:, t] * cn + (1 - m[:, t]) * c
            fwd.append(h)
        last_fwd = h
        h = c = x.new_zeros(B, H)
        bwd: List[Tensor] = [None] * L  # type: ignore[list-item]
        for t in range(L - 1, -1, -1):
            hn, cn = lstm_cell(x[:, t], h, c, self.enc_bw_ih, self.enc_bw_hh, self.enc_bw_b)
            h = m[:, t] * hn + (1 - m[:, t]) * h
            c = m[:, t] * cn + (1 - m[:, t]) * c
            bwd[t] = h
        states = torch.cat([torch.stack(fwd, 1), torch.stack(bwd, 1)], dim=-1)
        if ext_ids is None:
            ext_ids = ids
        return Encoded(
            states=states,
            mask=mask,
            ext_ids=ext_ids,
            n_oov=n_oov,
            keys=states @ self.att_w_eh.T,
            final=torch.cat([last_fwd, h], dim=-1),
        )

    def initial_state(self, enc: Encoded) -> DecodeState:
        h1, c1, h2, c2 = (enc.final @ self.bridge_w.T + self.bridge_b).chunk(4, dim=-1)
        return DecodeState(torch.tanh(h1), c1, torch.tanh(h2), c2, torch.zeros_like(enc.mask, dtype=enc.states.dtype))

    def attention(self, enc: Encoded, s: Tensor, coverage: Tensor) -> Tuple[Tensor, Tensor]:
        """Additive attention with coverage: returns ``(a_t, context)``."""
        feats = enc.keys
        if self.use_coverage:
            feats = coverage.unsqueeze(-1) * self.att_w_cv + feats
        feats = feats + (s @ self.att_w_sh.T).unsqueeze(1) + self.att_b
        energies = torch.tanh(feats) @ self.att_v
        a = masked_softmax(energies, enc.mask)
        context = torch.bmm(a.unsqueeze(1), enc.states).squeeze(1)
        return a, context

    def decode_step(self, y: Tensor, state: DecodeState, enc: Encoded) -> StepOutput:
        """One decoder step from the embedded previous token ``y`` (B, E)."""
        h1, c1 = lstm_cell(y, state.h1, state.c1, self.dec1_ih, self.dec1_hh, self.dec1_b)
        h2, c2 = lstm_cell(self._drop(h1), state.h2, state.c2, self.dec2_ih, self.dec2_hh, self.dec2_b)
        s = h2
        a, context = self.attention(enc, s, state.coverage)
        logits = torch.cat([self._drop(s), context], dim=-1) @ self.out_w.T + self.out_b
        p_vocab = torch.softmax(logits, dim=-1)
        B = y.shape[0]
        if enc.n_oov:
            p_vocab_ext = torch.cat([p_vocab, p_vocab.new_zeros(B, enc.n_oov)], dim=-1)
        else:
            p_vocab_ext = p_vocab
        if not self.use_copy:
            gate = p_vocab.new_zeros(B, 1)
            p_star = p_vocab_ext
        else:
            if self.force_copy_gate is not None:
                gate = p_vocab.new_full((B, 1), float(self.force_copy_gate))
            else:
                gate = torch.sigmoid(
                    context @ self.copy_w_c + s @ self.copy_w_s + y @ self.copy_w_x + self.copy_b
                ).unsqueeze(-1)
            p_star = ((1 - gate) * p_vocab_ext).scatter_add(1, enc.ext_ids, gate * a)
        new_state = DecodeState(h1, c1, h2, c2, state.coverage + a)
        return StepOutput(p_star, p_vocab, gate, a, context, new_state)

    def ablation(self) -> str:
        parts = ["atten"]
        if self.use_copy:
            parts.append("copy")
        if self.use_coverage:
            parts.append("coverage")
        return "+".join(parts)


@dataclass
class Batch:
    """Tensors for one padded batch of examples."""

    src: Tensor  # (B, L) vocabulary ids (OOV -> UNK)
    src_ext: Tensor  # (B, L) extended ids
    oovs: List[List[str]]
    n_oov: int
    dec_in: Optional[Tensor] = None  # (B, T) START + gold prefix
    target: Optional[Tensor] = None  # (B, T) extended gold ids + END
    target_mask: Optional[Tensor] = None


def make_batch(
    vocab: Vocabulary,
    sources: Sequence[Sequence[str]],
    targets: Optional[Sequence[Sequence[str]]] = None,
    enc_max_len: int = 200,
    dec_max_len: int = 50,
    use_copy: bool = True,
) -> Batch:
    """Pad and id-encode; sources are truncated from the right."""
    from .vocab import END

    srcs = [list(s)[:enc_max_len] for s in sources]
    if any(not s for s in srcs):
        raise EmptyInput("empty encoder input")
    L = max(len(s) for s in srcs)
    B = len(srcs)
    src = torch.full((B, L), PAD, dtype=torch.long)
    src_ext = torch.full((B, L), PAD, dtype=torch.long)
    oovs = []
    for b, s in enumerate(srcs):
        ext, oov = vocab.extend(s)
        src[b, : len(s)] = torch.tensor(vocab.encode(s))
        src_ext[b, : len(s)] = torch.tensor(ext)
        oovs.append(oov)
    n_oov = max((len(o) for o in oovs), default=0)
    batch = Batch(src, src_ext, oovs, n_oov)
    if targets is None:
        return batch
    tgts = [list(t)[: dec_max_len - 1] for t in targets]
    T = max(len(t) for t in tgts) + 1
    dec_in = torch.full((B, T), PAD, dtype=torch.long)
    target = torch.full((B, T), PAD, dtype=torch.long)
    tmask = torch.zeros((B, T), dtype=torch.bool)
    V = len(vocab)
    for b, t in enumerate(tgts):
        ids = vocab.encode(t)
        dec_in[b, : len(t) + 1] = torch.tensor([START] + ids)
        gold = []
        for tok, i in zip(t, ids):
            if i == UNK and use_copy and tok in oovs[b]:
                i = V + oovs[b].index(tok)
            gold.append(i)
        target[b, : len(t) + 1] = torch.tensor(gold + [END])
        tmask[b, : len(t) + 1] = True
    batch.dec_in, batch.target, batch.target_mask = dec_in, target, tmask
    return batch


class LossParts(NamedTuple):
    total: Tensor
    nll: Tensor
    coverage: Tensor
    attentions: List[Tensor]


def sequence_loss(net: Seq2SeqNetwork, batch: Batch, coverage_weight: float = 1.0) -> LossParts:
    """Teacher-forced loss: mean over sequences of NLL/T + weight * coverage loss."""
    enc = net.encode(batch.src, batch.src_ext, batch.n_oov)
    state = net.initial_state(enc)
    B, T = batch.dec_in.shape
    mask = batch.target_mask.to(enc.states.dtype)
    nll = enc.states.new_zeros(B)
    cov_loss = enc.states.new_zeros(B)
    attentions = []
    y_all = net.embed(batch.dec_in)
    for t in range(T):
        out = net.decode_step(y_all[:, t], state, enc)
        p_gold = out.p_star.gather(1, batch.target[:, t : t + 1]).squeeze(1)
        nll = nll - mask[:, t] * torch.log(p_gold.clamp_min(1e-12))
        cov_loss = cov_loss + mask[:, t] * torch.minimum(out.attention, state.coverage).sum(dim=1)
        attentions.append(out.attention)
        state = out.state
    lengths = mask.sum(dim=1)
    nll = nll / lengths
    if not net.use_coverage:
        coverage_weight = 0.0
    per_seq = nll + coverage_weight * cov_loss
    total = per_seq.mean()
    check_finite(total.detach(), "training loss")
    return LossParts(total, nll.mean(), cov_loss.mean(), attentions)
