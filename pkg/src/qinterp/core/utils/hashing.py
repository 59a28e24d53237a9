"""SHA-256 hashing for snapshot source checksums"""

import hashlib
from pathlib import Path


CHUNK_SIZE = 1 << 16


def sha256_file(path: Path) -> str:
    """Return hex-encoded SHA-256 hash of a file's bytes (64 chars, stored in the manifest)."""
    digest = hashlib.sha256()
    with path.open("rb") as f:
        while chunk := f.read(CHUNK_SIZE):
            digest.update(chunk)
    return digest.hexdigest()
