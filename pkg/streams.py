"""Counter-based random streams keyed by (seed, tag, keys..., index).

Every Monte-Carlo unit of work (a bootstrap replicate, a study replication, a
bridge path) gets its own Philox generator. The key comes from the seed and
the purpose, the counter from the index, so results never depend on the order
in which units are evaluated or on how many threads evaluate them.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

BOOTSTRAP = 1
STUDY_DATA = 2
STUDY_BOOTSTRAP = 3
BRIDGE_PATHS = 4

_COUNTER_SHIFT = 128
# seeds fit a signed 64-bit column
SEED_LIMIT = 2 ** 63


@lru_cache(maxsize=4096)
def _philox_key(entropy: tuple) -> tuple:
    key = np.random.SeedSequence(list(entropy)).generate_state(2, dtype=np.uint64)
    return int(key[0]), int(key[1])


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise ValueError(f"seed must lie in [0, 2**63), got {seed}")
    return seed


def substream(seed: int, tag: int, *keys: int, index: int = 0) -> np.random.Generator:
    entropy = (_check_seed(seed), int(tag), *(int(k) for k in keys))
    key = np.array(_philox_key(entropy), dtype=np.uint64)
    bit_generator = np.random.Philox(key=key, counter=int(index) << _COUNTER_SHIFT)
    return np.random.Generator(bit_generator)


def derive_seed(seed: int, tag: int, *keys: int) -> int:
    entropy = [_check_seed(seed), int(tag), *(int(k) for k in keys)]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))
