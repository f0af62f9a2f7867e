"""The LCR-Rot network and its four ablation variants.

A sentence is split around the target phrase; three Bi-LSTMs encode left
context, target phrase and right context separately. A two-stage rotatory
attention then runs target2context (pooled target as query, producing
attended context representations) followed by context2target (attended
contexts as queries, producing left-aware and right-aware target
representations). The four component vectors are concatenated and fed to
a softmax classifier.

Variants:
  * no_target_attention - drop context2target; the target component is
    the plain mean of target hidden states.
  * no_target_learned   - additionally drop the center Bi-LSTM; the target
    query/component is the mean of raw target word embeddings.
  * no_attention        - all three components are plain means of hidden
    states, no attention anywhere.
  * attention_reverse   - run context2target first (with pooled-context
    queries), then target2context with the attended targets as queries.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum
from typing import Iterator, Optional

import numpy as np

from . import tensor as T
from .corpus import Example
from .embeddings import EmbeddingTable
from .errors import ConfigError, DomainError
from .tensor import Tensor


class Variant(str, Enum):
    LCR_ROT = "lcr_rot"
    NO_TARGET_ATTENTION = "no_target_attention"
    NO_TARGET_LEARNED = "no_target_learned"
    NO_ATTENTION = "no_attention"
    ATTENTION_REVERSE = "attention_reverse"


ALL_VARIANTS = tuple(Variant)


@dataclass(frozen=True)
class VariantConfig:
    variant: Variant = Variant.LCR_ROT


@dataclass(frozen=True)
class Dimensions:
    d: int = 300        # word embedding size
    d_h: int = 300      # LSTM hidden size per direction
    n_classes: int = 3

    @property
    def hidden(self) -> int:
        """Bi-LSTM state size (both directions concatenated)."""
        return 2 * self.d_h


def sentence_vector_dim(variant: Variant, dims: Dimensions) -> int:
    """Dimension of the concatenated sentence representation v."""
    h = dims.hidden
    if variant in (Variant.LCR_ROT, Variant.ATTENTION_REVERSE):
        return 4 * h
    if variant in (Variant.NO_TARGET_ATTENTION, Variant.NO_ATTENTION):
        return 3 * h
    if variant is Variant.NO_TARGET_LEARNED:
        return 2 * h + dims.d
    raise ConfigError(f"unknown variant {variant}")


@dataclass
class LstmParams:
    """Per-gate weights of one LSTM direction (input, forget, output, candidate)."""
    w_i: Tensor
    w_f: Tensor
    w_o: Tensor
    w_g: Tensor
    u_i: Tensor
    u_f: Tensor
    u_o: Tensor
    u_g: Tensor
    b_i: Tensor
    b_f: Tensor
    b_o: Tensor
    b_g: Tensor


@dataclass
class BiLstmParams:
    fwd: LstmParams
    bwd: LstmParams


@dataclass
class ModelParams:
    variant: Variant
    dims: Dimensions
    left: BiLstmParams
    right: BiLstmParams
    center: Optional[BiLstmParams]
    attention: dict[str, Tensor]
    clf_w: Tensor
    clf_b: Tensor

    def named(self) -> Iterator[tuple[str, Tensor]]:
        """All trainable tensors in a fixed, deterministic order."""
        encoders = [("left", self.left), ("right", self.right)]
        if self.center is not None:
            encoders.append(("center", self.center))
        for enc_name, enc in encoders:
            for dir_name, p in (("fwd", enc.fwd), ("bwd", enc.bwd)):
                for f in fields(LstmParams):
                    yield f"{enc_name}.{dir_name}.{f.name}", getattr(p, f.name)
        for name in sorted(self.attention):
            yield f"attention.{name}", self.attention[name]
        yield "clf.w", self.clf_w
        yield "clf.b", self.clf_b

    def zero_grad(self):
        for _, t in self.named():
            t.zero_grad()


def _init_lstm(d_in: int, d_h: int, rng: np.random.Generator) -> LstmParams:
    def w():
        return Tensor(rng.uniform(-0.1, 0.1, (d_h, d_in)), requires_grad=True)

    def u():
        return Tensor(rng.uniform(-0.1, 0.1, (d_h, d_h)), requires_grad=True)

    def b():
        return Tensor(np.zeros(d_h), requires_grad=True)

    return LstmParams(w_i=w(), w_f=w(), w_o=w(), w_g=w(),
                      u_i=u(), u_f=u(), u_o=u(), u_g=u(),
                      b_i=b(), b_f=b(), b_o=b(), b_g=b())


def _init_bilstm(d_in, d_h, rng) -> BiLstmParams:
    return BiLstmParams(fwd=_init_lstm(d_in, d_h, rng), bwd=_init_lstm(d_in, d_h, rng))


def init_params(dims: Dimensions, cfg: VariantConfig,
                rng: np.random.Generator) -> ModelParams:
    """Fresh parameters: weight matrices from U(-0.1, 0.1), biases zero."""
    variant = cfg.variant
    h = dims.hidden
    left = _init_bilstm(dims.d, dims.d_h, rng)
    right = _init_bilstm(dims.d, dims.d_h, rng)
    center = None
    if variant is not Variant.NO_TARGET_LEARNED:
        center = _init_bilstm(dims.d, dims.d_h, rng)

    def mat(shape):
        return Tensor(rng.uniform(-0.1, 0.1, shape), requires_grad=True)

    def scalar():
        return Tensor(0.0, requires_grad=True)

    attention: dict[str, Tensor] = {}
    if variant in (Variant.LCR_ROT, Variant.ATTENTION_REVERSE):
        attention = {"w_cl": mat((h, h)), "w_cr": mat((h, h)),
                     "w_tl": mat((h, h)), "w_tr": mat((h, h)),
                     "b_cl": scalar(), "b_cr": scalar(),
                     "b_tl": scalar(), "b_tr": scalar()}
    elif variant is Variant.NO_TARGET_ATTENTION:
        attention = {"w_cl": mat((h, h)), "w_cr": mat((h, h)),
                     "b_cl": scalar(), "b_cr": scalar()}
    elif variant is Variant.NO_TARGET_LEARNED:
        attention = {"w_cl": mat((h, dims.d)), "w_cr": mat((h, dims.d)),
                     "b_cl": scalar(), "b_cr": scalar()}

    v_dim = sentence_vector_dim(variant, dims)
    clf_w = mat((dims.n_classes, v_dim))
    clf_b = Tensor(np.zeros(dims.n_classes), requires_grad=True)
    return ModelParams(variant=variant, dims=dims, left=left, right=right,
                       center=center, attention=attention,
                       clf_w=clf_w, clf_b=clf_b)


def lstm_step(x: Tensor, h_prev: Tensor, c_prev: Tensor,
              p: LstmParams) -> tuple[Tensor, Tensor]:
    """One LSTM cell update: sigmoid i/f/o gates, tanh candidate, no peepholes."""
    i = T.sigmoid(T.add(T.add(T.matmul(p.w_i, x), T.matmul(p.u_i, h_prev)), p.b_i))
    f = T.sigmoid(T.add(T.add(T.matmul(p.w_f, x), T.matmul(p.u_f, h_prev)), p.b_f))
    o = T.sigmoid(T.add(T.add(T.matmul(p.w_o, x), T.matmul(p.u_o, h_prev)), p.b_o))
    g = T.tanh(T.add(T.add(T.matmul(p.w_g, x), T.matmul(p.u_g, h_prev)), p.b_g))
    c = T.add(T.mul(f, c_prev), T.mul(i, g))
    h = T.mul(o, T.tanh(c))
    return h, c


def _run_direction(xs: list[Tensor], p: LstmParams, d_h: int) -> list[Tensor]:
    h = Tensor(np.zeros(d_h))
    c = Tensor(np.zeros(d_h))
    out = []
    for x in xs:
        h, c = lstm_step(x, h, c, p)
        out.append(h)
    return out


def encode_bilstm(embedded: np.ndarray, p: BiLstmParams,
                  d_h: int) -> Optional[Tensor]:
    """Encode an [n, d] embedding block into [n, 2*d_h] hidden states.

    Position i concatenates the forward state after tokens 1..i with the
    backward state after tokens n..i. Returns None for n = 0.
    """
    n = embedded.shape[0]
    if n == 0:
        return None
    xs = [Tensor(embedded[i]) for i in range(n)]
    fwd = _run_direction(xs, p.fwd, d_h)
    bwd = _run_direction(list(reversed(xs)), p.bwd, d_h)[::-1]
    return T.stack([T.concat([f, b]) for f, b in zip(fwd, bwd)])


def pool_target(hidden: Tensor) -> Tensor:
    """Average pooling over the target's hidden states."""
    if hidden is None or hidden.shape[0] < 1:
        raise DomainError("pool_target requires at least one hidden state")
    return T.mean_rows(hidden)


def attend(hidden: Optional[Tensor], query: Tensor, w: Tensor,
           b: Tensor) -> tuple[Optional[Tensor], Tensor]:
    """Bilinear attention: score_i = tanh(h_i . W . q + b), weights softmax.

    Returns (alpha, r) with r the weighted combination of hidden states.
    An empty sequence (hidden is None) yields (None, zero vector), so a
    missing context degrades gracefully instead of erroring.
    """
    if hidden is None:
        return None, Tensor(np.zeros(w.shape[0]))
    scores = T.tanh(T.add(T.matmul(hidden, T.matmul(w, query)), b))
    alpha = T.softmax(scores)
    return alpha, T.matmul(alpha, hidden)


def _mean_or_zero(hidden: Optional[Tensor], size: int) -> Tensor:
    if hidden is None:
        return Tensor(np.zeros(size))
    return T.mean_rows(hidden)


@dataclass
class AttentionRecord:
    """Attention weights and component representations from one forward pass."""
    alpha_l: Optional[np.ndarray]
    alpha_r: Optional[np.ndarray]
    alpha_tl: Optional[np.ndarray]
    alpha_tr: Optional[np.ndarray]
    r_l: np.ndarray
    r_r: np.ndarray
    r_tl: Optional[np.ndarray]
    r_tr: Optional[np.ndarray]
    r_t: Optional[np.ndarray]


@dataclass
class ForwardResult:
    probs: Tensor            # [n_classes], sums to 1
    sentence_vec: Tensor     # v, before the classifier (after dropout in train mode)
    record: AttentionRecord


def forward(ex: Example, table: EmbeddingTable, params: ModelParams,
            cfg: VariantConfig, mode: str = "eval",
            rng: Optional[np.random.Generator] = None,
            dropout_rate: float = 0.0) -> ForwardResult:
    """Run one example through the network.

    In train mode, inverted dropout is applied to the sentence vector
    before the classifier (rng required when dropout_rate > 0).
    """
    if params.variant is not cfg.variant:
        raise ConfigError(
            f"params built for {params.variant.value}, config asks {cfg.variant.value}")
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")

    variant = params.variant
    dims = params.dims
    h_size = dims.hidden
    a = params.attention

    left_emb = table.embed_sequence(ex.left)
    target_emb = table.embed_sequence(ex.target)
    right_emb = table.embed_sequence(ex.right)

    hid_l = encode_bilstm(left_emb, params.left, dims.d_h)
    hid_r = encode_bilstm(right_emb, params.right, dims.d_h)
    hid_t = None
    if params.center is not None:
        hid_t = encode_bilstm(target_emb, params.center, dims.d_h)

    alpha_l = alpha_r = alpha_tl = alpha_tr = None
    r_tl = r_tr = r_t = None

    if variant is Variant.LCR_ROT:
        r_t = pool_target(hid_t)
        alpha_l, r_l = attend(hid_l, r_t, a["w_cl"], a["b_cl"])
        alpha_r, r_r = attend(hid_r, r_t, a["w_cr"], a["b_cr"])
        alpha_tl, r_tl = attend(hid_t, r_l, a["w_tl"], a["b_tl"])
        alpha_tr, r_tr = attend(hid_t, r_r, a["w_tr"], a["b_tr"])
        v = T.concat([r_l, r_tl, r_tr, r_r])
    elif variant is Variant.NO_TARGET_ATTENTION:
        r_t = pool_target(hid_t)
        alpha_l, r_l = attend(hid_l, r_t, a["w_cl"], a["b_cl"])
        alpha_r, r_r = attend(hid_r, r_t, a["w_cr"], a["b_cr"])
        v = T.concat([r_l, r_t, r_r])
    elif variant is Variant.NO_TARGET_LEARNED:
        r_t = Tensor(target_emb.mean(axis=0))
        alpha_l, r_l = attend(hid_l, r_t, a["w_cl"], a["b_cl"])
        alpha_r, r_r = attend(hid_r, r_t, a["w_cr"], a["b_cr"])
        v = T.concat([r_l, r_t, r_r])
    elif variant is Variant.NO_ATTENTION:
        r_l = _mean_or_zero(hid_l, h_size)
        r_r = _mean_or_zero(hid_r, h_size)
        r_t = pool_target(hid_t)
        v = T.concat([r_l, r_t, r_r])
    elif variant is Variant.ATTENTION_REVERSE:
        q_left = _mean_or_zero(hid_l, h_size)
        q_right = _mean_or_zero(hid_r, h_size)
        alpha_tl, r_tl = attend(hid_t, q_left, a["w_tl"], a["b_tl"])
        alpha_tr, r_tr = attend(hid_t, q_right, a["w_tr"], a["b_tr"])
        alpha_l, r_l = attend(hid_l, r_tl, a["w_cl"], a["b_cl"])
        alpha_r, r_r = attend(hid_r, r_tr, a["w_cr"], a["b_cr"])
        v = T.concat([r_l, r_tl, r_tr, r_r])
    else:
        raise ConfigError(f"unknown variant {variant}")

    if mode == "train" and dropout_rate > 0.0:
        from .training import dropout
        v = dropout(v, dropout_rate, mode, rng)

    probs = T.softmax(T.add(T.matmul(params.clf_w, v), params.clf_b))

    def val(t):
        return None if t is None else np.array(t.data)

    record = AttentionRecord(
        alpha_l=val(alpha_l), alpha_r=val(alpha_r),
        alpha_tl=val(alpha_tl), alpha_tr=val(alpha_tr),
        r_l=np.array(r_l.data), r_r=np.array(r_r.data),
        r_tl=val(r_tl), r_tr=val(r_tr), r_t=val(r_t),
    )
    return ForwardResult(probs=probs, sentence_vec=v, record=record)
