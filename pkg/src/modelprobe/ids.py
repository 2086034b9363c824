"""ULID-style identifiers: 26-char Crockford base32, sortable by creation time."""

from __future__ import annotations

import os
import threading
import time

_ENCODING = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"

_lock = threading.Lock()
_last_ms = -1
_last_rand = 0


def new_id() -> str:
    """Return a fresh 26-character sortable identifier.

    48-bit millisecond timestamp + 80-bit randomness; within one process the
    random part is incremented for same-millisecond ids so creation order and
    lexicographic order agree.
    """
    global _last_ms, _last_rand
    with _lock:
        ms = time.time_ns() // 1_000_000
        if ms == _last_ms:
            _last_rand += 1
        else:
            _last_ms = ms
            _last_rand = int.from_bytes(os.urandom(10), "big") & ((1 << 79) - 1)
        value = (ms << 80) | _last_rand
    chars = []
    for _ in range(26):
        chars.append(_ENCODING[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


def is_valid_id(text: str) -> bool:
    return len(text) == 26 and all(c in _ENCODING for c in text)
