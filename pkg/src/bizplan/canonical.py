"""Canonical JSON bytes: the single definition of byte-identical equality.

Key-sorted, UTF-8, no insignificant whitespace. Used for the document
interchange form, gateway request hashing, and event-log checksums.
"""

from __future__ import annotations

import hashlib
import json


def canonical_json(value: object) -> bytes:
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_hash(value: object) -> str:
    return sha256_hex(canonical_json(value))
