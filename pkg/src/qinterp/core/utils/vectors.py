"""Vector helpers for embedding similarity"""

import numpy as np


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors; 0.0 when either has zero norm."""
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def mean_vector(vectors: list[np.ndarray]) -> np.ndarray | None:
    """Component-wise mean of the given vectors, or None for an empty list."""
    if not vectors:
        return None
    return np.mean(np.stack(vectors), axis=0)
