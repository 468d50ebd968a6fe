"""Deterministic training on tab-separated sentence/label corpora."""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn.functional as F

from .model import ModelConfig, ServedModel, TransformerClassifier
from .tokenizer import WordPieceTokenizer


def load_tsv(path: str | Path) -> list[tuple[str, int]]:
    """One 'sentence<TAB>label' example per line."""
    examples = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        text, sep, label = line.rpartition("\t")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected sentence<TAB>label")
        examples.append((text, int(label)))
    if not examples:
        raise ValueError(f"{path}: empty corpus")
    return examples


def _batches(encoded, labels, batch_size, pad_id, generator):
    order = torch.randperm(len(encoded), generator=generator)
    for start in range(0, len(order), batch_size):
        picks = order[start : start + batch_size]
        rows = [encoded[i] for i in picks]
        width = max(len(r) for r in rows)
        ids = torch.full((len(rows), width), pad_id, dtype=torch.long)
        pad_mask = torch.ones((len(rows), width), dtype=torch.bool)
        for j, row in enumerate(rows):
            ids[j, : len(row)] = torch.tensor(row)
            pad_mask[j, : len(row)] = False
        yield ids, pad_mask, torch.tensor([labels[i] for i in picks])


def train_model(
    train_path: str | Path,
    vocab_path: str | Path,
    *,
    config: ModelConfig = ModelConfig(),
    seed: int = 7,
    epochs: int = 6,
    batch_size: int = 32,
    learning_rate: float = 1e-3,
    label_smoothing: float = 0.05,
) -> ServedModel:
    torch.manual_seed(seed)
    tokenizer = WordPieceTokenizer.from_vocab_file(vocab_path)
    examples = load_tsv(train_path)
    num_classes = max(label for _, label in examples) + 1
    if num_classes > config.num_classes:
        raise ValueError(
            f"corpus has {num_classes} classes, config allows {config.num_classes}"
        )
    encoded = [
        list(tokenizer.encode(text, config.max_len).ids) for text, _ in examples
    ]
    labels = [label for _, label in examples]
    module = TransformerClassifier(len(tokenizer), config)
    optimizer = torch.optim.AdamW(module.parameters(), lr=learning_rate)
    generator = torch.Generator().manual_seed(seed)
    module.train()
    for _ in range(epochs):
        for ids, pad_mask, gold in _batches(
            encoded, labels, batch_size, tokenizer.pad_id, generator
        ):
            optimizer.zero_grad()
            logits = module(ids, pad_mask)
            loss = F.cross_entropy(logits, gold, label_smoothing=label_smoothing)
            loss.backward()
            optimizer.step()
    module.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(encoded), 256):
            rows = encoded[start : start + 256]
            width = max(len(r) for r in rows)
            ids = torch.full((len(rows), width), tokenizer.pad_id, dtype=torch.long)
            pad_mask = torch.ones((len(rows), width), dtype=torch.bool)
            for j, row in enumerate(rows):
                ids[j, : len(row)] = torch.tensor(row)
                pad_mask[j, : len(row)] = False
            preds = module(ids, pad_mask).argmax(dim=-1)
            gold = torch.tensor(labels[start : start + 256])
            correct += int((preds == gold).sum())
    return ServedModel(
        tokenizer, module, train_accuracy=correct / len(encoded)
    )
