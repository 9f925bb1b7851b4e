"""Counter-based random streams.

Every random draw is a pure function of ``(seed, stream, i, j)``, so sampling a
node does not depend on the order in which other nodes are sampled.  The hash
is splitmix64 applied to the packed key.
"""

import numpy as np
from scipy import stats

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# stream ids; keep these stable, they are part of the reproducibility contract
TEXT_DEGREE = 1
EDGE_END = 2
TEST_DEGREE = 3
TEST_EDGE_END = 4
DOMAIN_FLAG = 5
PREREQ_COUNT = 6
PREREQ_PICK = 7
IID_LEARNED = 8
PARTIAL_PICK = 9
TRIAL_SEED = 10
BASIC_SEED = 11
RAW_PAYLOAD = 12
CLASS_STRIDE = 1 << 16  # per-class streams use stream + k * CLASS_STRIDE


def _mix(x):
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def hash64(seed, stream, i, j=0):
    """64-bit hash of the key; ``i`` and ``j`` broadcast as integer arrays."""
    with np.errstate(over="ignore"):
        key = np.uint64(int(seed) & _MASK64)
        h = _mix(key + _GOLDEN * np.uint64(int(stream) & _MASK64))
        h = _mix(h ^ (np.asarray(i).astype(np.uint64) + _GOLDEN))
        h = _mix(h ^ (np.asarray(j).astype(np.uint64) * _GOLDEN + np.uint64(1)))
    return h


def uniform(seed, stream, i, j=0):
    """Uniform variates in [0, 1) with 53 random bits."""
    h = hash64(seed, stream, i, j)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def poisson(seed, stream, i, mean, j=0):
    """Poisson variates by inverse CDF of the counter-based uniforms."""
    u = uniform(seed, stream, i, j)
    mean = np.broadcast_to(np.asarray(mean, dtype=float), u.shape)
    out = np.zeros(u.shape, dtype=np.int64)
    pos = mean > 0
    if np.any(pos):
        out[pos] = np.maximum(stats.poisson.ppf(u[pos], mean[pos]), 0).astype(np.int64)
    return out


def derive_seed(seed, index, stream=TRIAL_SEED):
    """Child seed for trial ``index``; distinct trials get unrelated streams."""
    return int(hash64(seed, stream, np.asarray([index]))[0])
