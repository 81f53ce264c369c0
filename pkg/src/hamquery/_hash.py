"""Counter-based hashing used for oracle answers and algorithm-side coins.

Every random bit in the package that is attached to a vertex pair comes from
``pair_uniform(key, u, v)``: a splitmix64 finaliser applied to the key xor the
packed canonical pair. Three implementations exist (pure Python, vectorised
numpy, numba) and are tested against each other.
"""

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    z = (z + _GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *salts: int) -> int:
    """Fold integer salts into a 64-bit key."""
    k = mix64(int(seed) & MASK64)
    for s in salts:
        k = mix64(k ^ (int(s) & MASK64))
    return k


def pair_uniform_py(key: int, u: int, v: int) -> float:
    if u > v:
        u, v = v, u
    h = mix64(key ^ ((u << 32) | v))
    return (h >> 11) * _INV53


def pair_uniform_np(key: int, us, vs) -> np.ndarray:
    us = np.asarray(us, dtype=np.uint64)
    vs = np.asarray(vs, dtype=np.uint64)
    a = np.minimum(us, vs)
    b = np.maximum(us, vs)
    z = np.uint64(key) ^ ((a << np.uint64(32)) | b)
    with np.errstate(over="ignore"):
        z = z + np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


@nb.njit(cache=True, inline="always")
def nb_mix64(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def nb_uniform(key, u, v):
    if u > v:
        u, v = v, u
    z = key ^ ((np.uint64(u) << np.uint64(32)) | np.uint64(v))
    h = nb_mix64(z)
    return np.float64(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True)
def nb_uniform_many(key, us, vs):
    out = np.empty(us.shape[0], dtype=np.float64)
    for i in range(us.shape[0]):
        out[i] = nb_uniform(key, us[i], vs[i])
    return out


def pack_pair(u: int, v: int) -> int:
    if u > v:
        u, v = v, u
    return (u << 32) | v


def unpack_pair(key: int) -> tuple[int, int]:
    return key >> 32, key & 0xFFFFFFFF
