"""Pluggable text encoders.

Real pretrained encoders stay behind this interface and out of CI; the
deterministic mock is the test backbone. An encoder is anything with a
name, a fixed output dim, and an ``encode(text) -> vector`` method that is
deterministic for a fixed input.
"""

from __future__ import annotations

import hashlib
import importlib
import re
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


@runtime_checkable
class EncoderPlugin(Protocol):
    name: str
    dim: int

    def encode(self, text: str) -> np.ndarray: ...


def _hash_unit_vector(key: str, dim: int) -> np.ndarray:
    """Stable pseudo-random direction for a string, from SHA-256 bytes."""
    values = np.empty(dim)
    counter = 0
    filled = 0
    while filled < dim:
        digest = hashlib.sha256(f"{key}#{counter}".encode("utf-8")).digest()
        chunk = np.frombuffer(digest, dtype="<u4").astype(np.float64)
        take = min(dim - filled, chunk.size)
        values[filled : filled + take] = chunk[:take]
        filled += take
        counter += 1
    # map uint32 range onto [-1, 1]
    return values / 2147483647.5 - 1.0


@dataclass
class MockEncoder:
    """Bag-of-hashed-tokens encoder: pure function of the input string.

    Token vectors come from seeded hashing, the sum is L2-normalized, so
    texts sharing vocabulary land near each other while everything stays
    bit-reproducible across runs and platforms.
    """

    dim: int = 32
    seed: int = 0
    name: str = "mock"

    def encode(self, text: str) -> np.ndarray:
        tokens = [t.lower() for t in _TOKEN_RE.findall(text)]
        if not tokens:
            tokens = [text or "<empty>"]
        total = np.zeros(self.dim)
        for tok in tokens:
            total += _hash_unit_vector(f"{self.seed}:{tok}", self.dim)
        norm = float(np.linalg.norm(total))
        if norm == 0.0:
            total = _hash_unit_vector(f"{self.seed}:<degenerate>", self.dim)
            norm = float(np.linalg.norm(total))
        return total / norm


def load_encoder(spec: str, dim: int = 32) -> EncoderPlugin:
    """Resolve an encoder spec: "mock" or "module:attribute".

    The attribute may be an encoder instance or a zero-argument factory.
    """
    if spec == "mock":
        return MockEncoder(dim=dim)
    if ":" not in spec:
        raise ValueError(f"unknown encoder {spec!r}; use 'mock' or 'module:attribute'")
    module_name, attr = spec.split(":", 1)
    module = importlib.import_module(module_name)
    obj = getattr(module, attr)
    encoder = obj() if callable(obj) and not isinstance(obj, EncoderPlugin) else obj
    if not isinstance(encoder, EncoderPlugin):
        raise TypeError(f"{spec!r} does not provide an encoder (name/dim/encode)")
    return encoder
