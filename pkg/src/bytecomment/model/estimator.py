"""scikit-learn style estimator wrapping the copy/coverage encoder-decoder."""

from __future__ import annotations

import logging
import random
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import FormatError, NumericFault
from ..metrics import bleu
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..nn.core import Adam, LrSchedule, clip_grad_norm
from ..utils.validation import check_hyperparams, check_token_sequences
from .network import DecodeState, Seq2SeqNetwork, make_batch, sequence_loss
from .search import beam_search, strip_special, unk_replace
from .vocab import UNK, Vocabulary

logger = logging.getLogger(__name__)

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@contextmanager
def _threads(n: Optional[int]):
    if not n:
        yield
        return
    old = torch.get_num_threads()
    torch.set_num_threads(n)
    try:
        yield
    finally:
        torch.set_num_threads(old)


class CommentGenerator(BaseEstimator):
    """Retrieval-augmented comment generator.

    ``fit(X, y)`` takes model inputs (retrieved comment tokens, ``[SEP]``,
    CFG tokens) and gold comment tokens; ``predict(X)`` beam-decodes.
    Defaults are 256-d embeddings and hidden states, Adam peaking at 5e-4
    after 4000 warmup steps, batch 32, dropout 0.1 and 50 epochs.
    """

    def __init__(
        self,
        embed_dim: int = 256,
        hidden_dim: int = 256,
        enc_max_len: int = 200,
        dec_max_len: int = 50,
        batch_size: int = 32,
        dropout: float = 0.1,
        epochs: int = 50,
        coverage_weight: float = 1.0,
        beam_k: int = 5,
        vocab_cap: int = 30000,
        base_lr: float = 5e-4,
        warmup: int = 4000,
        clip_norm: float = 5.0,
        init_scale: float = 0.08,
        use_copy: bool = True,
        use_coverage: bool = True,
        unk_replacement: bool = True,
        eval_every: int = 1,
        eval_beam: int = 1,
        dtype: str = "float32",
        seed: int = 0,
        n_threads: Optional[int] = 1,
    ):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.enc_max_len = enc_max_len
        self.dec_max_len = dec_max_len
        self.batch_size = batch_size
        self.dropout = dropout
        self.epochs = epochs
        self.coverage_weight = coverage_weight
        self.beam_k = beam_k
        self.vocab_cap = vocab_cap
        self.base_lr = base_lr
        self.warmup = warmup
        self.clip_norm = clip_norm
        self.init_scale = init_scale
        self.use_copy = use_copy
        self.use_coverage = use_coverage
        self.unk_replacement = unk_replacement
        self.eval_every = eval_every
        self.eval_beam = eval_beam
        self.dtype = dtype
        self.seed = seed
        self.n_threads = n_threads

    # -- construction -------------------------------------------------------

    def _build(self, vocab: Vocabulary) -> None:
        gen = torch.Generator().manual_seed(self.seed)
        self.vocab_ = vocab
        self.network_ = Seq2SeqNetwork(
            len(vocab),
            self.embed_dim,
            self.hidden_dim,
            self.dropout,
            self.use_copy,
            self.use_coverage,
            self.init_scale,
            _DTYPES[self.dtype],
            generator=gen,
        )
        self.network_.dropout_generator = torch.Generator().manual_seed(self.seed + 1)
        self.optimizer_ = Adam(
            dict(self.network_.named_parameters()), LrSchedule(self.base_lr, self.warmup)
        )

    def _batch(self, X, y=None):
        return make_batch(
            self.vocab_, X, y, self.enc_max_len, self.dec_max_len, self.use_copy
        )

    # -- training -----------------------------------------------------------

    def fit(
        self,
        X: Sequence[Sequence[str]],
        y: Sequence[Sequence[str]],
        X_val: Optional[Sequence[Sequence[str]]] = None,
        y_val: Optional[Sequence[Sequence[str]]] = None,
        log: Optional[Callable[[Dict], None]] = None,
    ) -> "CommentGenerator":
        """Train with teacher forcing; keeps the epoch with best validation BLEU-4.

        Without validation data the training data is used for selection.
        On a non-finite loss the last good parameters are restored and
        :class:`NumericFault` is raised.
        """
        check_hyperparams(self)
        X = check_token_sequences(X, "X")
        y = check_token_sequences(y, "y", length=len(X))
        if X_val is None:
            X_val, y_val = X, y
        else:
            X_val = check_token_sequences(X_val, "X_val")
            y_val = check_token_sequences(y_val, "y_val", length=len(X_val))
        with _threads(self.n_threads):
            self._build(Vocabulary.build([*X, *y], self.vocab_cap))
            self.history_ = []
            self._train_loop(X, y, X_val, y_val, log or (lambda event: None))
        return self

    def _snapshot(self) -> Dict[str, torch.Tensor]:
        return {k: v.detach().clone() for k, v in self.network_.state_dict().items()}

    def _train_loop(self, X, y, X_val, y_val, log) -> None:
        net = self.network_
        order_rng = random.Random(self.seed)
        params = list(net.parameters())
        best_bleu, best = -1.0, self._snapshot()
        last_good = best
        self.best_epoch_ = -1
        idx = list(range(len(X)))
        for epoch in range(self.epochs):
            order_rng.shuffle(idx)
            net.train()
            t0 = time.perf_counter()
            epoch_loss = 0.0
            for start in range(0, len(idx), self.batch_size):
                chunk = idx[start : start + self.batch_size]
                batch = self._batch([X[i] for i in chunk], [y[i] for i in chunk])
                try:
                    parts = sequence_loss(net, batch, self.coverage_weight)
                except NumericFault:
                    net.load_state_dict(last_good)
                    self.diverged_ = True
                    log({"event": "diverged", "epoch": epoch, "step": self.optimizer_.t})
                    raise
                parts.total.backward()
                clip_grad_norm(params, self.clip_norm)
                lr = self.optimizer_.step()
                loss = parts.total.item()
                epoch_loss += loss * len(chunk)
                log({"event": "step", "epoch": epoch, "step": self.optimizer_.t, "loss": loss, "lr": lr})
            record = {
                "event": "epoch",
                "epoch": epoch,
                "step": self.optimizer_.t,
                "train_loss": epoch_loss / len(X),
                "seconds": round(time.perf_counter() - t0, 3),
            }
            last_good = self._snapshot()
            if (epoch + 1) % self.eval_every == 0 or epoch + 1 == self.epochs:
                record["val_loss"] = self.loss(X_val, y_val)
                hyps = self._decode(X_val, self.eval_beam)
                record["val_bleu4"] = sum(bleu(h, r)[3] for h, r in zip(hyps, y_val)) / len(y_val)
                if record["val_bleu4"] > best_bleu:
                    best_bleu, best = record["val_bleu4"], last_good
                    self.best_epoch_ = epoch
            self.history_.append(record)
            log(record)
            logger.info("epoch %d: %s", epoch, record)
        net.load_state_dict(best)
        self.best_val_bleu4_ = best_bleu
        self.diverged_ = False

    def loss(self, X, y) -> float:
        """Mean teacher-forced loss (no dropout, no gradient)."""
        check_is_fitted(self, "network_")
        net = self.network_
        was = net.training
        net.eval()
        total = 0.0
        with torch.no_grad():
            for start in range(0, len(X), self.batch_size):
                xb, yb = X[start : start + self.batch_size], y[start : start + self.batch_size]
                total += float(sequence_loss(net, self._batch(xb, yb), self.coverage_weight).total) * len(xb)
        net.train(was)
        return total / len(X)

    # -- inference ----------------------------------------------------------

    def _decode_one(self, source: Sequence[str], beam_k: int) -> Tuple[List[str], List[torch.Tensor], List[str]]:
        net = self.network_
        batch = self._batch([source])
        enc = net.encode(batch.src, batch.src_ext, batch.n_oov)
        V = len(self.vocab_)

        def step(states: List[DecodeState], last: List[int]):
            n = len(states)
            st = DecodeState(
                *(torch.cat([getattr(s, f) for s in states]) for f in ("h1", "c1", "h2", "c2", "coverage"))
            )
            ids = torch.tensor([t if t < V else UNK for t in last])
            out = net.decode_step(net.embed(ids), st, enc.select(torch.zeros(n, dtype=torch.long)))
            logp = torch.log(out.p_star.clamp_min(1e-12))
            return logp, [out.state.select(torch.tensor([i])) for i in range(n)], list(out.attention)

        hyps = beam_search(step, net.initial_state(enc), beam_k, self.dec_max_len)
        best = hyps[0]
        ids = strip_special(best.tokens)
        words = self.vocab_.decode(ids, batch.oovs[0])
        src = list(source)[: self.enc_max_len]
        return words, best.attentions[: len(ids)], src

    def _decode(self, X, beam_k: int) -> List[List[str]]:
        net = self.network_
        was = net.training
        net.eval()
        out = []
        with torch.no_grad():
            for source in X:
                words, attn, src = self._decode_one(source, beam_k)
                if self.unk_replacement:
                    words = unk_replace(words, [a.tolist() for a in attn], src)
                out.append(words)
        net.train(was)
        return out

    def predict(self, X: Sequence[Sequence[str]], beam_k: Optional[int] = None) -> List[List[str]]:
        """Beam-search comments for each input token sequence."""
        check_is_fitted(self, "network_")
        X = check_token_sequences(X, "X")
        with _threads(self.n_threads):
            return self._decode(X, beam_k or self.beam_k)

    def score(self, X, y) -> float:
        """Mean sentence BLEU-4 (percent) of ``predict(X)`` against ``y``."""
        hyps = self.predict(X)
        return sum(bleu(h, r)[3] for h, r in zip(hyps, y)) / len(y)

    # -- persistence ----------------------------------------------------------

    def save(self, path: Union[str, Path], **meta) -> None:
        """Checkpoint plus a sidecar vocabulary file ``<path>.vocab``."""
        check_is_fitted(self, "network_")
        tensors = dict(self.network_.state_dict())
        tensors.update(self.optimizer_.state_arrays())
        meta = {"params": self.get_params(), **meta}
        save_checkpoint(path, tensors, self.optimizer_.t, meta)
        self.vocab_.save(str(path) + ".vocab")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CommentGenerator":
        tensors, header = load_checkpoint(path)
        vocab_path = Path(str(path) + ".vocab")
        if not vocab_path.exists():
            raise FormatError(f"missing vocabulary sidecar {vocab_path}")
        est = cls(**header["meta"]["params"])
        est._build(Vocabulary.load(vocab_path))
        state = {k: v for k, v in tensors.items() if not k.startswith("adam_")}
        est.network_.load_state_dict(state)
        est.optimizer_.load_state_arrays(tensors, header["step"])
        est.checkpoint_meta_ = header["meta"]
        return est
