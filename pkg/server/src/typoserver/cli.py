"""Server entry point: load a checkpoint, speak the protocol.

A load failure does not kill the process; the server stays up and
refuses every handshake with the load error, so clients fail fast with
a readable reason instead of a dead pipe.
"""

from __future__ import annotations

import argparse
import sys

import torch

from .model import ServedModel
from .protocol import LoadFailure, serve_stdio, serve_tcp


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="typoserver",
        description="Serve a transformer sentiment classifier over "
                    "newline-delimited JSON (predict + gradient norms).",
    )
    parser.add_argument("checkpoint", help="model checkpoint to serve")
    parser.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7711)
    parser.add_argument("--max-len", type=int, default=128,
                        help="maximum tokens per sequence")
    args = parser.parse_args(argv)

    # single-threaded math keeps replies identical run to run
    torch.set_num_threads(1)
    try:
        served: ServedModel | LoadFailure = ServedModel.load(
            args.checkpoint, max_len=args.max_len
        )
        print(
            f"serving {served.checkpoint_name} "
            f"({served.num_classes} classes, max_len {served.max_len}, "
            f"train accuracy {served.train_accuracy})",
            file=sys.stderr,
        )
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        served = LoadFailure(str(exc))
        print(f"load failed, refusing handshakes: {exc}", file=sys.stderr)

    if args.transport == "stdio":
        serve_stdio(served)
        return 0
    server = serve_tcp(served, args.host, args.port)
    print(f"listening on {args.host}:{server.server_address[1]}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
