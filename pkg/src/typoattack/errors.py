"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, data problems
exit 2, remote-victim problems exit 3.
"""

from __future__ import annotations


class TypoAttackError(Exception):
    """Base class for all toolkit errors."""


class UsageError(TypoAttackError):
    """Bad command-line arguments or config keys."""


class DataError(TypoAttackError):
    """Malformed or missing input data (corpora, vocabularies, tables)."""


class RemoteVictimError(TypoAttackError):
    """A remote victim endpoint failed, timed out, or refused service."""


class ProtocolError(RemoteVictimError):
    """A wire-protocol payload violated the protocol contract."""


class VictimQueryError(RemoteVictimError):
    """One victim query failed after a clean request/response cycle.

    Scoped to a single example: the corpus runner excludes that example
    from accuracy denominators and carries on, unlike ProtocolError,
    which poisons the stream and aborts the run.
    """


class PayloadError(ProtocolError, VictimQueryError):
    """A reply parsed as JSON but violated a response invariant.

    The line framing is intact, so the connection stays usable and the
    error stays example-scoped; it is still a protocol violation, hence
    the dual parentage.
    """
