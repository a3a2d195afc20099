"""Counter-based random streams.

Every path owns a Philox stream keyed by ``(master_seed, path_index)``; the
k-th Gaussian increment of a path is the k-th draw of that stream, so results
do not depend on how paths are scheduled. Independent auxiliary streams for
the same path are separated through the top word of the 256-bit counter.
"""

import numpy as np

INCREMENTS = 0
BRIDGE = 1
START = 2
RESAMPLING = 3

_MASK64 = (1 << 64) - 1


def _check(seed, index):
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"master seed must fit in 64 unsigned bits, got {seed}")
    if not 0 <= index <= _MASK64:
        raise ValueError(f"stream index must fit in 64 unsigned bits, got {index}")


def stream(master_seed, index, purpose=INCREMENTS):
    """``numpy.random.Generator`` over Philox keyed by ``(master_seed, index)``."""
    master_seed = int(master_seed)
    index = int(index)
    _check(master_seed, index)
    bitgen = np.random.Philox(key=master_seed | (index << 64), counter=int(purpose) << 192)
    return np.random.Generator(bitgen)


def resampling_stream(master_seed, label=0):
    """Stream for bootstrap and permutation resampling, disjoint from path streams."""
    return stream(master_seed, _MASK64 - int(label), RESAMPLING)
