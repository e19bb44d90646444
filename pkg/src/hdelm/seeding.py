"""Deterministic RNG construction and seed derivation.

All randomness in the package flows through numpy's Philox counter-based
bit generator keyed by an explicit integer seed, so every artifact
(feature layer, collocation set, perturbation sequence) is reproducible
from the seeds echoed in reports.
"""

from __future__ import annotations

import hashlib

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Philox-backed generator for the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))


def derive_seed(seed: int, *tags) -> int:
    """Derive an independent 64-bit seed from a parent seed and tags.

    Tags may be ints or strings (e.g. a sub-domain ID, or a stream name
    such as "layer" / "colloc"). The derivation is a stable hash, so
    derived streams are independent yet reproducible.
    """
    material = ":".join([repr(int(seed))] + [repr(t) for t in tags])
    digest = hashlib.blake2s(material.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")
