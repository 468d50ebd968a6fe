"""Self-attention sentiment classifier and its serving wrapper.

The served gradient report is the L2 norm of the loss gradient with
respect to each input token's embedding vector, taken after the lookup
(before the positional term), matching the convention gradient-guided
attacks expect.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import torch
import torch.nn.functional as F
from torch import nn

from .tokenizer import WordPieceTokenizer

CHECKPOINT_MAGIC = "typoserver-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 128
    max_len: int = 128
    dropout: float = 0.1
    num_classes: int = 2


class TransformerClassifier(nn.Module):
    """[CLS]-pooled transformer encoder over WordPiece embeddings."""

    def __init__(self, vocab_size: int, config: ModelConfig):
        super().__init__()
        self.config = config
        self.tok = nn.Embedding(vocab_size, config.d_model)
        self.pos = nn.Embedding(config.max_len, config.d_model)
        layer = nn.TransformerEncoderLayer(
            config.d_model, config.n_heads, config.d_ff, config.dropout,
            activation="gelu", batch_first=True, norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, config.n_layers, enable_nested_tensor=False
        )
        self.final_norm = nn.LayerNorm(config.d_model)
        self.head = nn.Linear(config.d_model, config.num_classes)

    def forward_from_embeddings(
        self, tok_embeds: torch.Tensor, pad_mask: torch.Tensor | None = None
    ) -> torch.Tensor:
        # tok_embeds: [batch, seq, d_model]; pad_mask True where padded
        seq_len = tok_embeds.shape[1]
        positions = torch.arange(seq_len, device=tok_embeds.device)
        x = tok_embeds + self.pos(positions)
        h = self.encoder(x, src_key_padding_mask=pad_mask)
        return self.head(self.final_norm(h[:, 0]))

    def forward(
        self, ids: torch.Tensor, pad_mask: torch.Tensor | None = None
    ) -> torch.Tensor:
        return self.forward_from_embeddings(self.tok(ids), pad_mask)


class ServedModel:
    """Deterministic inference wrapper: eval mode, no dropout, CPU."""

    def __init__(
        self,
        tokenizer: WordPieceTokenizer,
        module: TransformerClassifier,
        *,
        checkpoint_name: str = "in-memory",
        train_accuracy: float | None = None,
        max_len: int | None = None,
    ):
        self.tokenizer = tokenizer
        self.module = module.eval()
        self.config = module.config
        self.checkpoint_name = checkpoint_name
        self.train_accuracy = train_accuracy
        self.max_len = min(max_len or self.config.max_len, self.config.max_len)
        self.num_classes = self.config.num_classes

    @classmethod
    def load(cls, path: str | Path, *, max_len: int | None = None) -> "ServedModel":
        bundle = torch.load(path, map_location="cpu", weights_only=True)
        if not isinstance(bundle, dict) or bundle.get("format") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a server checkpoint")
        if bundle.get("version") != CHECKPOINT_VERSION:
            raise ValueError(
                f"{path}: unsupported checkpoint version {bundle.get('version')!r}"
            )
        tokenizer = WordPieceTokenizer(bundle["vocab"])
        config = ModelConfig(**bundle["config"])
        module = TransformerClassifier(len(tokenizer), config)
        module.load_state_dict(bundle["state_dict"])
        return cls(
            tokenizer, module,
            checkpoint_name=Path(path).name,
            train_accuracy=bundle.get("train_accuracy"),
            max_len=max_len,
        )

    def save(self, path: str | Path) -> None:
        torch.save(
            {
                "format": CHECKPOINT_MAGIC,
                "version": CHECKPOINT_VERSION,
                "vocab": list(self.tokenizer.tokens),
                "config": asdict(self.config),
                "state_dict": self.module.state_dict(),
                "train_accuracy": self.train_accuracy,
            },
            path,
        )

    def predict(self, text: str) -> tuple[list[float], int]:
        enc = self.tokenizer.encode(text, self.max_len)
        ids = torch.tensor([enc.ids])
        with torch.no_grad():
            logits = self.module(ids)
            probs = F.softmax(logits[0], dim=-1)
        return probs.tolist(), int(probs.argmax())

    def grad_norms(
        self, text: str, gold: int
    ) -> tuple[list[str], list[int], list[float], float]:
        if not 0 <= gold < self.num_classes:
            raise ValueError(f"gold label {gold} out of range")
        enc = self.tokenizer.encode(text, self.max_len)
        ids = torch.tensor([enc.ids])
        embeds = self.module.tok(ids).detach().requires_grad_(True)
        logits = self.module.forward_from_embeddings(embeds)
        loss = F.cross_entropy(logits, torch.tensor([gold]))
        loss.backward()
        norms = embeds.grad[0].norm(dim=-1).tolist()
        return list(enc.tokens), list(enc.word_index), norms, loss.item()
