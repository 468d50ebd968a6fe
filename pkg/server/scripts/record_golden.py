"""Record the golden protocol transcript for the committed checkpoint.

The transcript pins the protocol byte for byte: each "> " line is a
request sent verbatim, each "< " line is the exact reply the server
must produce. Payload floats are rounded to 8 significant digits by the
server itself, which keeps replies stable across runs on one platform.
Re-run this script if the checkpoint is retrained or the float behavior
of the platform shifts, and review the diff.

Run from the repository root:
    python3 server/scripts/record_golden.py
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import torch

from typoserver.model import ServedModel
from typoserver.protocol import serve_stream

SERVER_DIR = Path(__file__).resolve().parent.parent


def canonical_requests() -> list[dict]:
    sentence = "the soundtrack is dismal and the cast is wretched"
    return [
        {"id": 1, "op": "handshake"},
        {"id": 2, "op": "predict", "text": "robustness"},
        {"id": 3, "op": "grad_norms", "text": "robustness", "gold": 0},
        {"id": 4, "op": "predict", "text": sentence},
        {"id": 5, "op": "grad_norms", "text": sentence, "gold": 0},
        {"id": 6, "op": "predict", "text": "the soundtrack is dismsal and the cast is wretched"},
        {"id": 7, "op": "predict", "text": "a gem of a film with excellent pacing"},
        {"id": 8, "op": "grad_norms", "text": "a gem of a film with excellent pacing", "gold": 1},
        {"id": 9, "op": "warp", "text": "x"},
        {"id": 10, "op": "grad_norms", "text": "fine", "gold": 9},
        {"id": 11, "op": "predict", "text": 42},
    ]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--checkpoint", default=SERVER_DIR / "data" / "model.pt")
    parser.add_argument("--out", default=SERVER_DIR / "data" / "golden.txt")
    args = parser.parse_args(argv)

    torch.set_num_threads(1)
    served = ServedModel.load(args.checkpoint)
    request_lines = [
        (json.dumps(req) + "\n").encode("utf-8") for req in canonical_requests()
    ]
    rfile = io.BytesIO(b"".join(request_lines))
    wfile = io.BytesIO()
    serve_stream(served, rfile, wfile)
    replies = wfile.getvalue().splitlines(keepends=True)
    assert len(replies) == len(request_lines)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "wb") as f:
        for req, reply in zip(request_lines, replies):
            f.write(b"> " + req)
            f.write(b"< " + reply)
    print(f"recorded {len(replies)} exchanges to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
