"""Train the served sentiment transformer and write its checkpoint.

Deterministic given the seed: fixed torch seed, seeded shuffling,
single-threaded math. The committed checkpoint under server/data/ was
produced by running this script with its defaults.

Run from the repository root:
    python3 server/scripts/train_server_model.py
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import torch

from typoserver.training import load_tsv, train_model

REPO = Path(__file__).resolve().parent.parent.parent


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--train", default=REPO / "data" / "sentiment_train.tsv")
    parser.add_argument("--vocab", default=REPO / "data" / "wordpiece_vocab.txt")
    parser.add_argument("--dev", default=REPO / "data" / "sentiment_dev.tsv")
    parser.add_argument("--out", default=REPO / "server" / "data" / "model.pt")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--epochs", type=int, default=6)
    args = parser.parse_args(argv)

    torch.set_num_threads(1)
    start = time.monotonic()
    served = train_model(
        args.train, args.vocab, seed=args.seed, epochs=args.epochs
    )
    elapsed = time.monotonic() - start
    print(f"trained in {elapsed:.1f}s, train accuracy {served.train_accuracy:.4f}")
    dev = load_tsv(args.dev)
    correct = sum(served.predict(text)[1] == label for text, label in dev)
    print(f"dev accuracy {correct / len(dev):.4f} on {len(dev)} sentences")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    served.save(out)
    print(f"checkpoint: {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
