"""Compressed n-gram count store behind a minimal perfect hash.

The hash is built by peeling a random 3-partite hypergraph: every key maps
to one vertex in each of three segments, and a 2-bit value per vertex picks
which of a key's three vertices is "its" vertex. Ranking the chosen vertices
yields a dense slot in [0, key_count). Each slot carries a short fingerprint
(to reject most strangers) and a log-bucketed 8-bit count.
"""

from __future__ import annotations

import hashlib
import math
import struct
from bisect import bisect_right
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

MAGIC = b"NGMPH1"
_HEADER = struct.Struct("<BBBxQQQ")

_VERTICES_PER_KEY = 1.23  # hypergraph load below the 3-uniform peeling threshold


class MphBuildError(Exception):
    """Raised when no peelable hypergraph is found within the retry budget."""


def _hash128(key: bytes, seed: int) -> bytes:
    return hashlib.blake2b(
        key, digest_size=16, key=seed.to_bytes(8, "little")
    ).digest()


class MinimalPerfectHash:
    """Collision-free map from a fixed key set onto [0, key_count)."""

    def __init__(
        self,
        seed: int,
        seg_len: int,
        g: np.ndarray,
        used: np.ndarray,
        key_count: int,
    ) -> None:
        self.seed = seed
        self.seg_len = seg_len
        self.g = g
        self.used = used
        self.key_count = key_count
        self.hash_evals = 0
        self._rank_before = np.concatenate(
            ([0], np.cumsum(used.astype(np.uint32))[:-1])
        ).astype(np.uint32)

    @property
    def vertex_count(self) -> int:
        return 3 * self.seg_len

    def _locate(self, key: bytes) -> tuple[int, int]:
        """Return (vertex, 32-bit fingerprint) for a key; one hash evaluation."""
        self.hash_evals += 1
        d = _hash128(key, self.seed)
        seg = self.seg_len
        v0 = int.from_bytes(d[0:4], "little") % seg
        v1 = seg + int.from_bytes(d[4:8], "little") % seg
        v2 = 2 * seg + int.from_bytes(d[8:12], "little") % seg
        g = self.g
        j = (int(g[v0]) + int(g[v1]) + int(g[v2])) % 3
        vertex = (v0, v1, v2)[j]
        return vertex, int.from_bytes(d[12:16], "little")

    def slot(self, key: bytes) -> int | None:
        """Dense slot for a build-time key; None or an arbitrary slot otherwise."""
        vertex, _ = self._locate(key)
        if not self.used[vertex]:
            return None
        return int(self._rank_before[vertex])


def _hash_edges(keys: Sequence[bytes], seed: int, seg: int) -> list[tuple[int, int, int]]:
    edges = []
    for key in keys:
        d = _hash128(key, seed)
        edges.append(
            (
                int.from_bytes(d[0:4], "little") % seg,
                seg + int.from_bytes(d[4:8], "little") % seg,
                2 * seg + int.from_bytes(d[8:12], "little") % seg,
            )
        )
    return edges


def _peel(edges: list[tuple[int, int, int]], m: int) -> list[tuple[int, int]] | None:
    """Peel degree-1 vertices; returns (edge, free_vertex) in peel order or None."""
    degree = [0] * m
    xor_edges = [0] * m
    for e, verts in enumerate(edges):
        for v in verts:
            degree[v] += 1
            xor_edges[v] ^= e
    stack: list[tuple[int, int]] = []
    queue = [v for v in range(m) if degree[v] == 1]
    while queue:
        v = queue.pop()
        if degree[v] != 1:
            continue
        e = xor_edges[v]
        stack.append((e, v))
        for u in edges[e]:
            degree[u] -= 1
            xor_edges[u] ^= e
            if u != v and degree[u] == 1:
                queue.append(u)
    return stack if len(stack) == len(edges) else None


def build_mph(
    keys: Iterable[bytes], base_seed: int = 0, max_retries: int = 100
) -> MinimalPerfectHash:
    """Construct the hash by hypergraph peeling, retrying with fresh seeds."""
    key_list = list(keys)
    if not key_list:
        raise DataError("cannot build a perfect hash over an empty key set")
    if len(set(key_list)) != len(key_list):
        raise DataError("duplicate keys in perfect hash input")

    n = len(key_list)
    seg = max(1, math.ceil(_VERTICES_PER_KEY * n / 3))
    m = 3 * seg

    for attempt in range(max_retries):
        seed = base_seed + attempt
        edges = _hash_edges(key_list, seed, seg)
        stack = _peel(edges, m)
        if stack is None:
            continue
        g = np.full(m, 3, dtype=np.uint8)
        visited = np.zeros(m, dtype=bool)
        used = np.zeros(m, dtype=bool)
        for e, free_vertex in reversed(stack):
            verts = edges[e]
            free_idx = verts.index(free_vertex)
            acc = 0
            for i, u in enumerate(verts):
                if i == free_idx:
                    continue
                if not visited[u]:
                    visited[u] = True
                    g[u] = 0
                acc += int(g[u])
            g[free_vertex] = (free_idx - acc) % 3
            visited[free_vertex] = True
            used[free_vertex] = True
        return MinimalPerfectHash(seed=seed, seg_len=seg, g=g, used=used, key_count=n)

    raise MphBuildError(
        f"no peelable hypergraph for {n} keys after {max_retries} seeds"
    )


def quantization_bounds(bits: int = 8, growth: float = 1.09) -> list[int]:
    """Lower bounds of the count buckets; bucket q spans [b[q], b[q+1]-1].

    Small counts get single-value buckets (lossless); larger buckets grow
    geometrically. Counts beyond the last bound clamp into the top bucket.
    """
    n_buckets = 1 << bits
    bounds = [1]
    while len(bounds) <= n_buckets:
        prev = bounds[-1]
        bounds.append(max(prev + 1, math.floor(prev * growth)))
    return bounds


def quantize_count(count: int, bounds: list[int]) -> int:
    if count < 1:
        raise ValueError("counts must be >= 1")
    q = bisect_right(bounds, count) - 1
    return min(q, len(bounds) - 2)


def dequantize_count(q: int, bounds: list[int]) -> float:
    lo = bounds[q]
    hi = bounds[q + 1] - 1
    if lo == hi:
        return float(lo)
    return math.sqrt(lo * hi)


class NGramStore:
    """Immutable n-gram frequency model; concurrent lookups are safe."""

    def __init__(
        self,
        order: int,
        fp_bits: int,
        quant_bits: int,
        mph: MinimalPerfectHash,
        fingerprints: np.ndarray,
        counts: np.ndarray,
    ) -> None:
        self.order = order
        self.fp_bits = fp_bits
        self.quant_bits = quant_bits
        self.mph = mph
        self.fingerprints = fingerprints
        self.counts = counts
        self.bounds = quantization_bounds(quant_bits)

    @property
    def key_count(self) -> int:
        return self.mph.key_count

    @property
    def hash_evals(self) -> int:
        return self.mph.hash_evals

    def lookup(self, phrase: Sequence[str] | str) -> float:
        """Dequantized count of a normalized token sequence, 0 for strangers.

        A stranger slips through only when its fingerprint collides, at rate
        2^-fp_bits under hash uniformity.
        """
        tokens = phrase.split(" ") if isinstance(phrase, str) else list(phrase)
        if not 1 <= len(tokens) <= self.order:
            raise ValueError(
                f"phrase must have 1..{self.order} tokens, got {len(tokens)}"
            )
        key = " ".join(tokens).encode("utf-8")
        vertex, fp = self.mph._locate(key)
        if not self.mph.used[vertex]:
            return 0.0
        slot = int(self.mph._rank_before[vertex])
        mask = (1 << self.fp_bits) - 1
        if int(self.fingerprints[slot]) != (fp & mask):
            return 0.0
        return dequantize_count(int(self.counts[slot]), self.bounds)

    def save(self, path: str | Path) -> None:
        mph = self.mph
        m = mph.vertex_count
        g_packed = np.zeros((m + 3) // 4, dtype=np.uint8)
        for shift in range(4):
            part = mph.g[shift::4]
            g_packed[: len(part)] |= (part << (2 * shift)).astype(np.uint8)
        used_packed = np.packbits(mph.used, bitorder="little")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(
                _HEADER.pack(
                    self.order,
                    self.fp_bits,
                    self.quant_bits,
                    mph.key_count,
                    mph.seg_len,
                    mph.seed,
                )
            )
            fh.write(g_packed.tobytes())
            fh.write(used_packed.tobytes())
            fh.write(self.fingerprints.astype("<u4").tobytes())
            fh.write(self.counts.tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "NGramStore":
        path = Path(path)
        if not path.exists():
            raise DataError(f"n-gram model not found: {path}")
        blob = path.read_bytes()
        if blob[: len(MAGIC)] != MAGIC:
            raise DataError(f"{path} is not an n-gram model (bad magic)")
        off = len(MAGIC)
        order, fp_bits, quant_bits, key_count, seg_len, seed = _HEADER.unpack_from(
            blob, off
        )
        off += _HEADER.size
        m = 3 * seg_len
        g_bytes = (m + 3) // 4
        g_packed = np.frombuffer(blob, dtype=np.uint8, count=g_bytes, offset=off)
        off += g_bytes
        g = np.zeros(m, dtype=np.uint8)
        for shift in range(4):
            part = (g_packed >> (2 * shift)) & 3
            g[shift::4] = part[: len(g[shift::4])]
        used_bytes = (m + 7) // 8
        used_packed = np.frombuffer(blob, dtype=np.uint8, count=used_bytes, offset=off)
        off += used_bytes
        used = np.unpackbits(used_packed, bitorder="little")[:m].astype(bool)
        fingerprints = np.frombuffer(blob, dtype="<u4", count=key_count, offset=off)
        off += 4 * key_count
        counts = np.frombuffer(blob, dtype=np.uint8, count=key_count, offset=off)
        mph = MinimalPerfectHash(
            seed=seed, seg_len=seg_len, g=g, used=used, key_count=key_count
        )
        return cls(
            order=order,
            fp_bits=fp_bits,
            quant_bits=quant_bits,
            mph=mph,
            fingerprints=fingerprints.copy(),
            counts=counts.copy(),
        )


def count_ngrams(
    sequences: Iterable[Sequence[str]], order: int = 4
) -> dict[str, int]:
    """Exact counts of all 1..order grams within each token sequence."""
    counts: dict[str, int] = {}
    for seq in sequences:
        toks = list(seq)
        for n in range(1, order + 1):
            for i in range(len(toks) - n + 1):
                gram = " ".join(toks[i : i + n])
                counts[gram] = counts.get(gram, 0) + 1
    return counts


def build_model(
    sequences: Iterable[Sequence[str]],
    order: int = 4,
    fp_bits: int = 16,
    quant_bits: int = 8,
    base_seed: int = 0,
) -> NGramStore:
    """Count n-grams and pack them into a fingerprinted perfect-hash store."""
    if not 1 <= fp_bits <= 32:
        raise ValueError("fp_bits must be in 1..32")
    counts = count_ngrams(sequences, order)
    if not counts:
        raise DataError("empty corpus: no n-grams to store")
    keys = sorted(counts)
    mph = build_mph([k.encode("utf-8") for k in keys], base_seed=base_seed)
    bounds = quantization_bounds(quant_bits)
    fingerprints = np.zeros(len(keys), dtype=np.uint32)
    quantized = np.zeros(len(keys), dtype=np.uint8)
    mask = (1 << fp_bits) - 1
    for k in keys:
        encoded = k.encode("utf-8")
        vertex, fp = mph._locate(encoded)
        slot = int(mph._rank_before[vertex])
        fingerprints[slot] = fp & mask
        quantized[slot] = quantize_count(counts[k], bounds)
    return NGramStore(
        order=order,
        fp_bits=fp_bits,
        quant_bits=quant_bits,
        mph=mph,
        fingerprints=fingerprints,
        counts=quantized,
    )
