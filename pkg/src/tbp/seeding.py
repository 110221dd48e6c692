"""Seed derivation.

Every random stream in the package comes from a numpy ``PCG64`` generator
whose seed is derived from the run seed and a purpose tag with BLAKE2b.
Streams are therefore independent of call order and scheduling.
"""

import hashlib

import numpy as np


def derive_seed(seed, *tags):
    """64-bit seed for the stream named by ``tags`` under ``seed``."""
    text = "/".join([str(int(seed))] + [str(t) for t in tags])
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(seed, *tags):
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *tags)))
