"""Transformer sentiment classifier served over wire protocol v1."""

from .model import ServedModel
from .protocol import PROTOCOL_VERSION, serve_stdio, serve_stream, serve_tcp
from .tokenizer import WordPieceTokenizer

__all__ = [
    "PROTOCOL_VERSION",
    "ServedModel",
    "WordPieceTokenizer",
    "serve_stdio",
    "serve_stream",
    "serve_tcp",
]
