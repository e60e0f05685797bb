"""MinHash signatures and banded LSH over character-shingle sets.

Each permutation is emulated by a salted 64-bit mixer applied to a fixed
64-bit base hash of the shingle, so signatures are reproducible across
processes (Python's own ``hash`` is randomized per interpreter).
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_NUM_PERMS = 128
DEFAULT_SEED = 0x5EED_F00D
MASK64 = (1 << 64) - 1

# mixed-value cells computed per numpy chunk when hashing many sets
_CHUNK_CELLS = 1 << 22


@lru_cache(maxsize=1 << 20)
def base_hash(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


def _splitmix64_stream(seed: int, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.uint64)
    state = seed & MASK64
    for i in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out[i] = z ^ (z >> 31)
    return out


@lru_cache(maxsize=32)
def _salts(num_perms: int, seed: int) -> np.ndarray:
    salts = _splitmix64_stream(seed, num_perms)
    salts.setflags(write=False)
    return salts


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps mod 2**64
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@dataclass(frozen=True, eq=False)
class MinHashSignature:
    values: np.ndarray
    num_perms: int
    seed: int

    def __post_init__(self) -> None:
        if len(self.values) != self.num_perms:
            raise ValueError("signature length does not match num_perms")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MinHashSignature):
            return NotImplemented
        return (
            self.num_perms == other.num_perms
            and self.seed == other.seed
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.num_perms, self.seed, self.values.tobytes()))


def minhash_matrix(
    shingle_sets: Sequence[Iterable[str]],
    num_perms: int = DEFAULT_NUM_PERMS,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """Signatures for many sets at once, one row per set (uint64, n x num_perms)."""
    if num_perms < 1:
        raise ValueError("num_perms must be positive")
    salts = _salts(num_perms, seed)
    n = len(shingle_sets)
    out = np.empty((n, num_perms), dtype=np.uint64)
    if n == 0:
        return out

    hashes: list[np.ndarray] = []
    for i, s in enumerate(shingle_sets):
        h = np.fromiter((base_hash(t) for t in sorted(s)), dtype=np.uint64)
        if h.size == 0:
            raise ValueError(f"shingle set {i} is empty")
        hashes.append(h)
    lengths = np.fromiter((h.size for h in hashes), dtype=np.int64, count=n)

    start = 0
    while start < n:
        stop, cells = start, 0
        while stop < n and (stop == start or cells + lengths[stop] * num_perms <= _CHUNK_CELLS):
            cells += lengths[stop] * num_perms
            stop += 1
        flat = np.concatenate(hashes[start:stop])
        mixed = _mix(flat[:, None] ^ salts[None, :])
        offsets = np.concatenate(([0], np.cumsum(lengths[start:stop])[:-1]))
        out[start:stop] = np.minimum.reduceat(mixed, offsets, axis=0)
        start = stop
    return out


def minhash(shingles: Iterable[str], num_perms: int = DEFAULT_NUM_PERMS, seed: int = DEFAULT_SEED) -> MinHashSignature:
    shingles = frozenset(shingles)
    if not shingles:
        raise ValueError("cannot sign an empty shingle set")
    values = minhash_matrix([shingles], num_perms, seed)[0]
    values.setflags(write=False)
    return MinHashSignature(values, num_perms, seed)


def estimate_similarity(a: MinHashSignature, b: MinHashSignature) -> float:
    """Fraction of agreeing signature slots (unbiased Jaccard estimate)."""
    if a.num_perms != b.num_perms or a.seed != b.seed:
        raise ValueError("signatures were built with different parameters")
    return float(np.count_nonzero(a.values == b.values)) / a.num_perms


def exact_jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    if not a or not b:
        raise ValueError("jaccard of an empty set is undefined here")
    return len(a & b) / len(a | b)


def characteristic_threshold(bands: int, rows: int) -> float:
    return (1.0 / bands) ** (1.0 / rows)


def retrieval_probability(similarity: float, bands: int, rows: int) -> float:
    """Chance that a pair at ``similarity`` shares at least one band."""
    return 1.0 - (1.0 - similarity**rows) ** bands


def choose_banding(num_perms: int, target_threshold: float, tolerance: float = 0.05) -> tuple[int, int]:
    """Pick (bands, rows) with bands * rows == num_perms closest to the target threshold."""
    if not 0.0 < target_threshold < 1.0:
        raise ValueError("target threshold must lie in (0, 1)")
    options = [(b, num_perms // b) for b in range(1, num_perms + 1) if num_perms % b == 0]
    bands, rows = min(options, key=lambda br: (abs(characteristic_threshold(*br) - target_threshold), br[0]))
    if abs(characteristic_threshold(bands, rows) - target_threshold) > tolerance:
        raise ValueError(
            f"no banding of {num_perms} permutations lands within {tolerance} of {target_threshold}"
        )
    return bands, rows


@dataclass(frozen=True)
class LshIndex:
    bands: int
    rows_per_band: int
    num_perms: int
    seed: int
    target_threshold: float
    ids: tuple[int, ...]
    signatures: np.ndarray = field(repr=False)
    buckets: tuple[dict[bytes, tuple[int, ...]], ...] = field(repr=False)

    @property
    def threshold(self) -> float:
        return characteristic_threshold(self.bands, self.rows_per_band)

    def __len__(self) -> int:
        return len(self.ids)

    def band_keys(self, values: np.ndarray) -> list[bytes]:
        r = self.rows_per_band
        return [values[i * r : (i + 1) * r].tobytes() for i in range(self.bands)]

    def candidate_pairs(self) -> np.ndarray:
        """Row-index pairs (i < j) that collide in at least one band."""
        pairs: set[tuple[int, int]] = set()
        for table in self.buckets:
            for members in table.values():
                if len(members) > 1:
                    pairs.update(itertools.combinations(members, 2))
        if not pairs:
            return np.empty((0, 2), dtype=np.int64)
        return np.array(sorted(pairs), dtype=np.int64)

    def build_log(self) -> dict:
        return {
            "num_perms": self.num_perms,
            "seed": self.seed,
            "bands": self.bands,
            "rows_per_band": self.rows_per_band,
            "characteristic_threshold": round(self.threshold, 6),
            "target_threshold": self.target_threshold,
            "size": len(self.ids),
        }


def build_lsh(
    signatures: Sequence[MinHashSignature] | np.ndarray,
    target_threshold: float,
    ids: Sequence[int] | None = None,
    num_perms: int | None = None,
    seed: int = DEFAULT_SEED,
) -> LshIndex:
    """Insert signatures into banded buckets.

    ``signatures`` is either a list of MinHashSignature or a precomputed
    (n x num_perms) matrix, in which case ``num_perms``/``seed`` describe it.
    Bucket buckets hold row positions; ``ids`` maps rows to caller handles.
    """
    if isinstance(signatures, np.ndarray):
        matrix = signatures
        num_perms = matrix.shape[1] if num_perms is None else num_perms
    else:
        sigs = list(signatures)
        if sigs:
            num_perms, seed = sigs[0].num_perms, sigs[0].seed
            if any(s.num_perms != num_perms or s.seed != seed for s in sigs):
                raise ValueError("all signatures must share num_perms and seed")
            matrix = np.stack([s.values for s in sigs])
        else:
            num_perms = num_perms or DEFAULT_NUM_PERMS
            matrix = np.empty((0, num_perms), dtype=np.uint64)
    if matrix.ndim != 2 or matrix.shape[1] != num_perms:
        raise ValueError("signature matrix shape does not match num_perms")

    bands, rows = choose_banding(num_perms, target_threshold)
    ids = tuple(range(matrix.shape[0])) if ids is None else tuple(ids)
    if len(ids) != matrix.shape[0]:
        raise ValueError("ids and signatures differ in length")

    tables: list[dict[bytes, tuple[int, ...]]] = []
    for band in range(bands):
        block = np.ascontiguousarray(matrix[:, band * rows : (band + 1) * rows])
        table: dict[bytes, list[int]] = defaultdict(list)
        raw = block.tobytes()
        width = rows * 8
        for i in range(block.shape[0]):
            table[raw[i * width : (i + 1) * width]].append(i)
        tables.append({k: tuple(v) for k, v in table.items()})

    index = LshIndex(bands, rows, num_perms, seed, target_threshold, ids, matrix, tuple(tables))
    logger.debug("built LSH index %s", index.build_log())
    return index


def query(index: LshIndex, probe: MinHashSignature, exclude: int | None = None) -> set[int]:
    """Caller ids colliding with ``probe`` in at least one band."""
    if probe.num_perms != index.num_perms or probe.seed != index.seed:
        raise ValueError("probe parameters do not match the index")
    rows: set[int] = set()
    for table, key in zip(index.buckets, index.band_keys(probe.values)):
        rows.update(table.get(key, ()))
    found = {index.ids[r] for r in rows}
    if exclude is not None:
        found.discard(exclude)
    return found
