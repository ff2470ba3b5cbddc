import hashlib
from typing import Union

import numpy as np


def _stream_key(name: Union[str, int]) -> int:
    if isinstance(name, (int, np.integer)):
        return int(name)
    digest = hashlib.sha256(str(name).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int, *stream: Union[str, int]) -> np.random.Generator:
    """Deterministic generator for (seed, stream...). Same inputs, same draws."""
    entropy = [int(seed)] + [_stream_key(s) for s in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
