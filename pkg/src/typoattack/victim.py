"""Built-in trainable victim classifier with analytic embedding gradients.

Architecture: embedding lookup, a per-component sinh layer, mean pooling
over components, then a linear softmax head. The choice of nonlinearity
is load-bearing. Without one, every component of a sentence receives the
same loss gradient and saliency-ranked target selection is meaningless.
The loss gradient reaching component i is gated by f'(z_i), so for
gradient norms to surface informative components the gate must grow with
activation magnitude in both directions. Saturating activations fail
this: tanh's gate 1 - tanh(z)^2 shrinks as |z| grows, handing the
smallest norms to exactly the strongly-activated components that carry
the label. One-sided rectifiers fail it on the negative side: softplus
gates by sigmoid(z), so components encoding negative evidence rank below
neutral ones. sinh's gate cosh(z) is even, at least 1, and strictly
increasing in |z|, and sinh is smooth everywhere, which the
central-difference verification of the analytic gradients relies on.

The gradient of the loss with respect to each component's embedding
vector (not the shared vocabulary row) is computed in closed form, so
per-component saliency norms are exact and cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .wordpiece import Vocab, WordSpan, pretokenize, tokenize_word

CHECKPOINT_MAGIC = "typoattack-model"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: int


@dataclass(frozen=True, eq=False)
class Prediction:
    """Argmax label and the full probability vector."""

    label: int
    probs: np.ndarray


@dataclass(frozen=True, eq=False)
class GradientReport:
    """Per-component L2 gradient norms of the gold-label loss."""

    component_norms: np.ndarray
    loss: float


@dataclass(frozen=True, eq=False)
class SaliencyView:
    """Norms mapped onto whitespace tokens, the unit the attack edits.

    ``words`` are the whitespace-delimited tokens of the text (punctuation
    attached); ``component_word[i]`` is the index of the word that owns
    subword component i.
    """

    words: tuple[WordSpan, ...]
    component_word: tuple[int, ...]
    norms: np.ndarray
    loss: float


@dataclass(frozen=True)
class Hyperparams:
    embed_dim: int = 64
    hidden_dim: int = 64
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 32
    seed: int = 13
    init_scale: float = 0.1

    def to_dict(self) -> dict:
        return {
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "init_scale": self.init_scale,
        }


def whitespace_spans(text: str) -> tuple[WordSpan, ...]:
    """Whitespace-delimited tokens with character spans."""
    spans = []
    start = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if start is not None:
                spans.append(WordSpan(len(spans), text[start:i], start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        spans.append(WordSpan(len(spans), text[start:], start, len(text)))
    return tuple(spans)


class BuiltinModel:
    """The trainable victim. Immutable once trained; queries are pure."""

    def __init__(
        self,
        vocab: Vocab,
        num_classes: int,
        hp: Hyperparams,
        embeddings: np.ndarray,
        hidden_w: np.ndarray,
        hidden_b: np.ndarray,
        out_w: np.ndarray,
        out_b: np.ndarray,
        train_accuracy: float | None = None,
    ) -> None:
        self.vocab = vocab
        self.num_classes = num_classes
        self.hp = hp
        self.embeddings = embeddings
        self.hidden_w = hidden_w
        self.hidden_b = hidden_b
        self.out_w = out_w
        self.out_b = out_b
        self.train_accuracy = train_accuracy
        self._word_ids: dict[str, tuple[int, ...]] = {}

    @classmethod
    def initialized(
        cls, vocab: Vocab, num_classes: int, hp: Hyperparams, rng: np.random.Generator
    ) -> "BuiltinModel":
        s = hp.init_scale
        return cls(
            vocab,
            num_classes,
            hp,
            embeddings=rng.uniform(-s, s, (len(vocab), hp.embed_dim)),
            hidden_w=rng.uniform(-s, s, (hp.embed_dim, hp.hidden_dim)),
            hidden_b=np.zeros(hp.hidden_dim),
            out_w=rng.uniform(-s, s, (hp.hidden_dim, num_classes)),
            out_b=np.zeros(num_classes),
        )

    @classmethod
    def zeros(cls, vocab: Vocab, num_classes: int, hp: Hyperparams) -> "BuiltinModel":
        return cls(
            vocab,
            num_classes,
            hp,
            embeddings=np.zeros((len(vocab), hp.embed_dim)),
            hidden_w=np.zeros((hp.embed_dim, hp.hidden_dim)),
            hidden_b=np.zeros(hp.hidden_dim),
            out_w=np.zeros((hp.hidden_dim, num_classes)),
            out_b=np.zeros(num_classes),
        )

    # -- segmentation ---------------------------------------------------

    def word_ids(self, word: str) -> tuple[int, ...]:
        """Token ids of one pre-split word, cached by word string."""
        ids = self._word_ids.get(word)
        if ids is None:
            ids = tuple(self.vocab.id_of(t) for t in tokenize_word(word, self.vocab))
            self._word_ids[word] = ids
        return ids

    def segment(self, text: str) -> tuple[tuple[WordSpan, ...], list[int], list[int]]:
        """Whitespace tokens, component token ids, and component→word map."""
        words = whitespace_spans(text)
        ids: list[int] = []
        comp_word: list[int] = []
        wi = 0
        for piece in pretokenize(text):
            while not (
                words[wi].char_start <= piece.char_start < words[wi].char_end
            ):
                wi += 1
            for tid in self.word_ids(piece.text):
                ids.append(tid)
                comp_word.append(wi)
        return words, ids, comp_word

    # -- forward / backward ---------------------------------------------

    def _forward_embeddings(self, e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pre-activations and logits for one sentence's embedding matrix."""
        z = e @ self.hidden_w + self.hidden_b
        logits = np.sinh(z).mean(axis=0) @ self.out_w + self.out_b
        return z, logits

    def _probs(self, logits: np.ndarray) -> np.ndarray:
        shifted = logits - logits.max()
        exp = np.exp(shifted)
        return exp / exp.sum()

    def _ids_or_raise(self, text: str) -> list[int]:
        _, ids, _ = self.segment(text)
        if not ids:
            raise DataError(f"empty input: {text!r} has no components")
        return ids

    def predict(self, text: str) -> Prediction:
        ids = self._ids_or_raise(text)
        _, logits = self._forward_embeddings(self.embeddings[ids])
        probs = self._probs(logits)
        return Prediction(int(np.argmax(probs)), probs)

    def _embedding_grads(
        self, e: np.ndarray, gold: int
    ) -> tuple[np.ndarray, float]:
        """Loss and dL/de for one sentence given its embedding matrix."""
        z, logits = self._forward_embeddings(e)
        probs = self._probs(logits)
        loss = -float(np.log(max(probs[gold], 1e-300)))
        dlogits = probs.copy()
        dlogits[gold] -= 1.0
        dpooled = self.out_w @ dlogits
        dz = np.cosh(z) * (dpooled / e.shape[0])
        return dz @ self.hidden_w.T, loss

    def grad_norms(self, text: str, gold: int) -> GradientReport:
        if not 0 <= gold < self.num_classes:
            raise ValueError(f"gold label {gold} out of range [0, {self.num_classes})")
        ids = self._ids_or_raise(text)
        de, loss = self._embedding_grads(self.embeddings[ids], gold)
        return GradientReport(np.linalg.norm(de, axis=1), loss)

    def saliency_view(self, text: str, gold: int) -> SaliencyView:
        if not 0 <= gold < self.num_classes:
            raise ValueError(f"gold label {gold} out of range [0, {self.num_classes})")
        words, ids, comp_word = self.segment(text)
        if not ids:
            raise DataError(f"empty input: {text!r} has no components")
        de, loss = self._embedding_grads(self.embeddings[ids], gold)
        return SaliencyView(words, tuple(comp_word), np.linalg.norm(de, axis=1), loss)

    # -- persistence ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        header = {
            "format": CHECKPOINT_MAGIC,
            "version": CHECKPOINT_VERSION,
            "num_classes": self.num_classes,
            "vocab_sha256": self.vocab.sha256,
            "train_accuracy": self.train_accuracy,
            "hyperparams": self.hp.to_dict(),
        }
        with open(path, "wb") as f:
            f.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
            for arr in (self.embeddings, self.hidden_w, self.hidden_b, self.out_w, self.out_b):
                np.save(f, arr)


def load_model(path: str | Path, vocab: Vocab) -> BuiltinModel:
    with open(path, "rb") as f:
        try:
            header = json.loads(f.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DataError(f"{path}: not a model checkpoint ({exc})") from exc
        if header.get("format") != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: bad checkpoint magic {header.get('format')!r}")
        if header.get("version") != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {header.get('version')!r}")
        if header["vocab_sha256"] != vocab.sha256:
            raise DataError(
                f"{path}: checkpoint was built against a different vocabulary "
                f"({header['vocab_sha256'][:12]}… != {vocab.sha256[:12]}…)"
            )
        arrays = [np.load(f) for _ in range(5)]
    hp = Hyperparams(**header["hyperparams"])
    return BuiltinModel(
        vocab,
        int(header["num_classes"]),
        hp,
        *arrays,
        train_accuracy=header["train_accuracy"],
    )


# -- training -------------------------------------------------------------


def _encode_corpus(
    corpus: list[LabeledExample], model: BuiltinModel
) -> tuple[list[np.ndarray], np.ndarray]:
    encoded = []
    for i, ex in enumerate(corpus):
        _, ids, _ = model.segment(ex.text)
        if not ids:
            raise DataError(f"example {i} has no components: {ex.text!r}")
        encoded.append(np.array(ids, dtype=np.intp))
    return encoded, np.array([ex.label for ex in corpus], dtype=np.intp)


def train(
    corpus: list[LabeledExample],
    vocab: Vocab,
    hp: Hyperparams | None = None,
    num_classes: int | None = None,
) -> BuiltinModel:
    """Minibatch SGD on cross-entropy; deterministic under a fixed seed."""
    hp = hp or Hyperparams()
    if not corpus:
        raise DataError("training corpus is empty")
    present = {ex.label for ex in corpus}
    if min(present) < 0:
        raise DataError(f"negative label {min(present)}")
    if len(present) < 2:
        raise DataError("training corpus has a single class; need at least two")
    num_classes = num_classes or max(present) + 1

    rng = np.random.default_rng(hp.seed)
    model = BuiltinModel.initialized(vocab, num_classes, hp, rng)
    encoded, labels = _encode_corpus(corpus, model)
    n = len(encoded)
    lengths = np.array([len(ids) for ids in encoded], dtype=np.intp)

    for _ in range(hp.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, hp.batch_size):
            batch = order[lo : lo + hp.batch_size]
            _sgd_step(model, encoded, labels, lengths, batch)

    correct = sum(
        1
        for ids, label in zip(encoded, labels)
        if _argmax_from_ids(model, ids) == label
    )
    model.train_accuracy = correct / n
    return model


def _argmax_from_ids(model: BuiltinModel, ids: np.ndarray) -> int:
    _, logits = model._forward_embeddings(model.embeddings[ids])
    return int(np.argmax(logits))


def _sgd_step(
    model: BuiltinModel,
    encoded: list[np.ndarray],
    labels: np.ndarray,
    lengths: np.ndarray,
    batch: np.ndarray,
) -> None:
    b = len(batch)
    nmax = int(lengths[batch].max())
    ids = np.zeros((b, nmax), dtype=np.intp)
    mask = np.zeros((b, nmax))
    for row, j in enumerate(batch):
        k = lengths[j]
        ids[row, :k] = encoded[j]
        mask[row, :k] = 1.0
    counts = mask.sum(axis=1, keepdims=True)

    e = model.embeddings[ids]
    z = e @ model.hidden_w + model.hidden_b
    pooled = (np.sinh(z) * mask[:, :, None]).sum(axis=1) / counts
    logits = pooled @ model.out_w + model.out_b
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)

    dlogits = probs
    dlogits[np.arange(b), labels[batch]] -= 1.0
    dlogits /= b
    d_out_w = pooled.T @ dlogits
    d_out_b = dlogits.sum(axis=0)
    dpooled = dlogits @ model.out_w.T
    dz = np.cosh(z) * (dpooled / counts)[:, None, :] * mask[:, :, None]
    d_hidden_w = e.reshape(-1, e.shape[-1]).T @ dz.reshape(-1, dz.shape[-1])
    d_hidden_b = dz.sum(axis=(0, 1))
    de = dz @ model.hidden_w.T
    d_emb = np.zeros_like(model.embeddings)
    np.add.at(d_emb, ids[mask > 0], de[mask > 0])

    lr = model.hp.learning_rate
    model.embeddings -= lr * d_emb
    model.hidden_w -= lr * d_hidden_w
    model.hidden_b -= lr * d_hidden_b
    model.out_w -= lr * d_out_w
    model.out_b -= lr * d_out_b


# -- verification -----------------------------------------------------------


def finite_diff_check(
    model: BuiltinModel, text: str, gold: int, epsilon: float = 1e-4
) -> float:
    """Worst relative disagreement between analytic and central-difference
    gradients over every embedding coordinate of the text's components.

    Relative error uses a 1e-8 denominator floor so exactly-zero
    coordinates compare as zero rather than dividing by zero.
    """
    ids = model._ids_or_raise(text)
    e = model.embeddings[ids]
    analytic, _ = model._embedding_grads(e, gold)

    def loss_at(em: np.ndarray) -> float:
        _, logits = model._forward_embeddings(em)
        probs = model._probs(logits)
        return -float(np.log(max(probs[gold], 1e-300)))

    worst = 0.0
    for i in range(e.shape[0]):
        for j in range(e.shape[1]):
            up = e.copy()
            up[i, j] += epsilon
            down = e.copy()
            down[i, j] -= epsilon
            fd = (loss_at(up) - loss_at(down)) / (2.0 * epsilon)
            an = analytic[i, j]
            rel = abs(fd - an) / max(abs(an), abs(fd), 1e-8)
            worst = max(worst, rel)
    return worst
