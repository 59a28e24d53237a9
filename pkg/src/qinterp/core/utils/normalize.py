"""Surface normalization shared by ingestion and query time"""

import re
import unicodedata


WHITESPACE_RE = re.compile(r'\s+')


def normalize(text: str) -> str:
    """NFC-normalize, lowercase, collapse internal whitespace, and strip the ends."""
    text = unicodedata.normalize('NFC', text).lower()
    return WHITESPACE_RE.sub(' ', text).strip()
