"""Reproducible random-number streams.

All randomized code in the package draws from Philox, a counter-based
64-bit generator, through named substreams derived from a user seed.
Stream derivation goes through ``numpy.random.SeedSequence`` with the
stream index as spawn key, which keeps distinct (seed, stream) pairs
collision-free; a plain ``seed XOR stream`` would alias neighbouring
seeds.  Work that is split across workers partitions draws into
fixed-size chunks with one substream per chunk, so results are
byte-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

GENERATOR_ID = "philox4x64/seedseq"

CHUNK = 65536


def derive_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for substream ``stream`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, namespace: int) -> int:
    """A child seed independent of every direct substream of ``seed``.

    Used to give a side activity (e.g. threshold calibration) its own
    stream family that cannot collide with replication substreams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(namespace), 0x5EED))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def chunk_sizes(count: int, chunk: int = CHUNK) -> list[int]:
    """Partition ``count`` draws into fixed-size chunks (last one ragged)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    full, rest = divmod(count, chunk)
    sizes = [chunk] * full
    if rest:
        sizes.append(rest)
    return sizes


def run_chunked(fn, seed: int, count: int, threads: int = 0) -> list:
    """Evaluate ``fn(rng, size)`` over fixed-size chunks of ``count`` draws.

    Chunk ``i`` uses substream ``i`` of ``seed``; results come back in chunk
    order, so the concatenated output does not depend on ``threads``.
    """
    sizes = chunk_sizes(count)
    jobs = [(i, n) for i, n in enumerate(sizes)]
    if threads is None or threads <= 1 or len(jobs) <= 1:
        return [fn(derive_generator(seed, i), n) for i, n in jobs]
    workers = threads if threads > 0 else min(8, len(jobs))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, derive_generator(seed, i), n) for i, n in jobs]
        return [f.result() for f in futures]
