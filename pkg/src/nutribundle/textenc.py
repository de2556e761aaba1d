"""Deterministic lexical text encoder and cosine similarity.

Hashed character n-grams stand in for a sentence encoder so the whole
pipeline is reproducible without model weights; externally computed vectors
can be dropped in via :func:`import_vectors`.
"""

import hashlib
import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

_WORD_RE = re.compile(r"[a-z0-9]+")

NORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class EncoderConfig:
    dimension: int = 256
    ngram_size: int = 3
    hash_seed: int = 13

    def __post_init__(self):
        if self.dimension < 16:
            raise ValueError(f"dimension must be >= 16, got {self.dimension}")
        if self.ngram_size not in (2, 3, 4):
            raise ValueError(f"ngram_size must be 2, 3 or 4, got {self.ngram_size}")


DEFAULT_CONFIG = EncoderConfig()


def _bucket(ngram: str, config: EncoderConfig) -> int:
    key = config.hash_seed.to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(ngram.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little") % config.dimension


def _ngrams(text: str, size: int) -> Counter:
    counts: Counter = Counter()
    for word in _WORD_RE.findall(text.lower()):
        padded = f"#{word}#"
        if len(padded) < size:
            counts[padded] += 1
            continue
        for i in range(len(padded) - size + 1):
            counts[padded[i : i + size]] += 1
    return counts


def encode(text: str, config: EncoderConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Embed text as a unit-norm vector of hashed n-gram weights.

    Case- and surrounding-whitespace-insensitive; raises on text with no
    alphanumeric content rather than returning a zero vector.
    """
    counts = _ngrams(text, config.ngram_size)
    if not counts:
        raise ValueError(f"cannot encode text with no alphanumeric characters: {text!r}")
    vec = np.zeros(config.dimension)
    for ngram, count in counts.items():
        # Sublinear term weighting: count / sqrt(count).
        vec[_bucket(ngram, config)] += math.sqrt(count)
    return vec / np.linalg.norm(vec)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1] against rounding."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def import_vectors(path: str) -> dict[str, np.ndarray]:
    """Load id,components CSV lines as unit-normalized vectors."""
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise ValueError(f"{path} line {line_no}: expected id plus components")
            try:
                values = np.array([float(p) for p in parts[1:]])
            except ValueError:
                raise ValueError(f"{path} line {line_no}: malformed component")
            if dim is None:
                dim = values.size
            elif values.size != dim:
                raise ValueError(
                    f"{path} line {line_no}: dimension {values.size} inconsistent with {dim}"
                )
            norm = np.linalg.norm(values)
            if norm == 0:
                raise ValueError(f"{path} line {line_no}: zero vector cannot be normalized")
            vectors[parts[0]] = values / norm
    return vectors
