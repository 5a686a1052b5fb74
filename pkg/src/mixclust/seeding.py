"""Named random sub-streams derived from one global seed."""
import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(name.encode())]))
