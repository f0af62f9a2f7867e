"""Loss, SGD-with-momentum, dropout, the epoch loop and checkpointing.

Loss per instance is cross entropy against the one-hot label plus an L2
penalty over the full trainable parameter set (embeddings excluded; the
penalty covers biases by default, with a flag for the conventional
weights-only variant). Batch loss is the mean cross entropy over the
batch plus the penalty added once.

Checkpoint format: a JSON document with fields ``format_version``,
``variant``, ``hyperparams``, ``dims`` and ``params`` (a name -> {shape,
values} map, values as row-major float lists). Python serializes floats
with shortest round-trip precision (up to 17 significant digits), so the
round trip is bit-exact.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from . import tensor as T
from .corpus import Example
from .embeddings import EmbeddingTable
from .errors import CheckpointError, DomainError, ShapeError
from .model import (Dimensions, ModelParams, Variant, VariantConfig, forward,
                    init_params)
from .tensor import Tensor

CHECKPOINT_VERSION = 1
LOG_EPS = 1e-12  # floor inside log() so a saturated softmax cannot yield -inf


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    l2_weight: float = 1e-5
    dropout_rate: float = 0.5
    momentum: float = 0.9
    batch_size: int = 25
    max_epochs: int = 20
    seed: int = 1
    regularize_biases: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")


class OptimizerState:
    """Per-parameter velocity tensors for classical (heavy-ball) momentum."""

    def __init__(self, params: ModelParams):
        self.velocity = {name: np.zeros(t.data.shape) for name, t in params.named()}


def cross_entropy(probs: Tensor, label_index: int) -> Tensor:
    """-log p_true with the probability floored at LOG_EPS."""
    return T.scale(T.log(T.clip_min(T.index(probs, label_index), LOG_EPS)), -1.0)


def l2_penalty(params: ModelParams, lam: float,
               include_biases: bool = True) -> Tensor:
    total = Tensor(0.0)
    for name, t in params.named():
        if not include_biases and (".b_" in name or name.endswith(".b")):
            continue
        total = T.add(total, T.sumsq(t))
    return T.scale(total, lam)


def loss(probs: Tensor, label_index: int, params: ModelParams, lam: float,
         include_biases: bool = True) -> Tensor:
    """Single-instance loss: cross entropy + lam * ||Theta||^2."""
    return T.add(cross_entropy(probs, label_index),
                 l2_penalty(params, lam, include_biases))


def batch_loss(prob_list, label_indices, params: ModelParams, lam: float,
               include_biases: bool = True) -> Tensor:
    ces = [cross_entropy(p, y) for p, y in zip(prob_list, label_indices)]
    return T.add(T.tmean(T.stack(ces)), l2_penalty(params, lam, include_biases))


def dropout(v: Tensor, rate: float, mode: str,
            rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout: identity in eval mode, mask + rescale in train mode."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return v
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    mask = (rng.random(v.data.shape) >= rate) / (1.0 - rate)
    return T.mul(v, Tensor(mask))


def sgd_momentum_step(params: ModelParams, state: OptimizerState,
                      lr: float, momentum: float):
    """vel <- mu*vel - lr*grad; theta <- theta + vel. Missing grads count as zero."""
    for name, t in params.named():
        grad = t.grad if t.grad is not None else np.zeros(t.data.shape)
        if grad.shape != t.data.shape:
            raise ShapeError(
                f"{name}: gradient shape {grad.shape} != parameter shape {t.data.shape}")
        vel = state.velocity[name]
        vel *= momentum
        vel -= lr * grad
        t.data = t.data + vel


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_acc: float
    dev_acc: Optional[float] = None

    def as_line(self) -> str:
        cols = [str(self.epoch), repr(self.train_loss), repr(self.train_acc)]
        if self.dev_acc is not None:
            cols.append(repr(self.dev_acc))
        return "\t".join(cols)


def evaluate_accuracy(examples, table, params, cfg) -> float:
    correct = 0
    for ex in examples:
        res = forward(ex, table, params, cfg, mode="eval")
        if int(np.argmax(res.probs.data)) == ex.label_index:
            correct += 1
    return correct / len(examples)


def train(examples: list[Example], table: EmbeddingTable, cfg: VariantConfig,
          hp: Hyperparams, dims: Dimensions,
          dev_examples: Optional[list[Example]] = None,
          log: Optional[Callable[[str], None]] = None,
          stop_at_train_acc: Optional[float] = None,
          ) -> tuple[ModelParams, list[EpochMetrics]]:
    """Run the full training loop; deterministic given inputs and seed.

    Examples are reshuffled every epoch with the seeded generator and
    processed in mini-batches (the last batch may be smaller). When a dev
    set is given, the best-dev-accuracy epoch's parameters are returned;
    otherwise the final parameters. ``stop_at_train_acc`` ends training
    early once the epoch's training accuracy reaches the threshold.
    """
    if not examples:
        raise DomainError("training on an empty corpus")
    # Embed everything up front: fixes the OOV draw order and freezes the table.
    for ex in examples + (dev_examples or []):
        table.embed_sequence(ex.left)
        table.embed_sequence(ex.target)
        table.embed_sequence(ex.right)

    rng = np.random.Generator(np.random.PCG64(hp.seed))
    params = init_params(dims, cfg, rng)
    state = OptimizerState(params)

    metrics: list[EpochMetrics] = []
    best_dev = -1.0
    best_params = None
    order = np.arange(len(examples))

    for epoch in range(hp.max_epochs):
        rng.shuffle(order)
        total_ce = 0.0
        for start in range(0, len(order), hp.batch_size):
            batch = [examples[i] for i in order[start:start + hp.batch_size]]
            probs = []
            labels = []
            for ex in batch:
                res = forward(ex, table, params, cfg, mode="train", rng=rng,
                              dropout_rate=hp.dropout_rate)
                probs.append(res.probs)
                labels.append(ex.label_index)
            bl = batch_loss(probs, labels, params, hp.l2_weight,
                            include_biases=hp.regularize_biases)
            params.zero_grad()
            bl.backward()
            sgd_momentum_step(params, state, hp.learning_rate, hp.momentum)
            total_ce += float(bl.data) * len(batch)

        # accuracy measured at epoch end in eval mode, so `eval` on the same
        # corpus reports the same number as the final metrics line
        m = EpochMetrics(epoch=epoch,
                         train_loss=total_ce / len(examples),
                         train_acc=evaluate_accuracy(examples, table, params, cfg))
        if dev_examples:
            m.dev_acc = evaluate_accuracy(dev_examples, table, params, cfg)
            if m.dev_acc > best_dev:
                best_dev = m.dev_acc
                best_params = copy_params(params)
        metrics.append(m)
        if log is not None:
            log(m.as_line())
        if stop_at_train_acc is not None and m.train_acc >= stop_at_train_acc:
            break

    if best_params is not None:
        params = best_params
    return params, metrics


def copy_params(params: ModelParams) -> ModelParams:
    out = copy.deepcopy(params)
    for _, t in out.named():
        t.zero_grad()
    return out


def save_checkpoint(params: ModelParams, cfg: VariantConfig, hp: Hyperparams,
                    path):
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "variant": cfg.variant.value,
        "hyperparams": asdict(hp),
        "dims": asdict(params.dims),
        "params": {
            name: {"shape": list(t.data.shape),
                   "values": t.data.ravel().tolist()}
            for name, t in params.named()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path, expect_variant: Optional[Variant] = None,
                    ) -> tuple[ModelParams, VariantConfig, Hyperparams]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {doc.get('format_version')!r}")
    try:
        variant = Variant(doc["variant"])
    except (KeyError, ValueError):
        raise CheckpointError(f"unknown variant {doc.get('variant')!r}") from None
    if expect_variant is not None and variant is not expect_variant:
        raise CheckpointError(
            f"checkpoint holds {variant.value}, expected {expect_variant.value}")
    cfg = VariantConfig(variant=variant)
    hp = Hyperparams(**doc["hyperparams"])
    dims = Dimensions(**doc["dims"])
    # rebuild the parameter skeleton, then overwrite every tensor
    params = init_params(dims, cfg, np.random.Generator(np.random.PCG64(0)))
    stored = doc["params"]
    for name, t in params.named():
        if name not in stored:
            raise CheckpointError(f"checkpoint missing parameter {name}")
        entry = stored[name]
        arr = np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        if arr.shape != t.data.shape:
            raise CheckpointError(
                f"{name}: stored shape {arr.shape} != expected {t.data.shape}")
        t.data = arr
    return params, cfg, hp
