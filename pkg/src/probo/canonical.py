"""Deterministic byte serialization and hashing.

Proponent and verifier output hashes are only comparable if both sides
serialize identically, so the byte contract is pinned here: map keys in
ascending lexicographic byte order, numbers as the shortest decimal string
that round-trips, UTF-8, no insignificant whitespace. The output is always
valid JSON, so canonical bytes double as the on-disk format for chain files
and event logs.
"""

from __future__ import annotations

import hashlib
import json
import math
import re

from .errors import NonCanonicalizable

ZERO_DIGEST = "0" * 64

_DIGEST_RE = re.compile(r"^[0-9a-f]{64}$")


def is_digest(value) -> bool:
    """True if value is a lowercase 64-char hex string (a SHA-256 digest)."""
    return isinstance(value, str) and bool(_DIGEST_RE.match(value))


def canonical_bytes(value) -> bytes:
    """Serialize a structured value (maps with string keys, lists, strings,
    ints, bools, finite floats) to its unique byte representation.

    Structurally equal values always yield equal bytes; list order is
    significant, map key order is not.
    """
    parts: list[str] = []
    _emit(value, parts)
    return "".join(parts).encode("utf-8")


def _emit(value, parts: list[str]) -> None:
    # bool is an int subclass: test it first
    if value is True:
        parts.append("true")
    elif value is False:
        parts.append("false")
    elif isinstance(value, int):
        parts.append(str(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise NonCanonicalizable(f"non-finite number: {value!r}")
        # repr() of a float is the shortest decimal that round-trips
        parts.append(repr(value))
    elif isinstance(value, str):
        parts.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(value):
            if i:
                parts.append(",")
            _emit(item, parts)
        parts.append("]")
    elif isinstance(value, dict):
        for key in value:
            if not isinstance(key, str):
                raise NonCanonicalizable(f"non-string map key: {key!r}")
        parts.append("{")
        # code-point order == UTF-8 byte order
        for i, key in enumerate(sorted(value)):
            if i:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _emit(value[key], parts)
        parts.append("}")
    else:
        raise NonCanonicalizable(f"unsupported type: {type(value).__name__}")


def digest(data: bytes) -> str:
    """SHA-256 of the input, as lowercase hex."""
    return hashlib.sha256(data).hexdigest()


def canonical_digest(value) -> str:
    """digest(canonical_bytes(value)) in one step."""
    return digest(canonical_bytes(value))
