"""Hierarchical Navigable Small World index over unit vectors, from scratch.

Cosine similarity is a dot product because every stored vector is unit-norm.
The graph keeps hard invariants: edges are bidirectional per layer, degrees
are capped (m per layer, m0 at layer 0), and every tie anywhere is broken
deterministically, so identical insert sequences produce byte-identical
saved indexes.

Persistence is a single binary file: magic + version + checksum header, then
ids, levels, a little-endian float32 vector block, and varint adjacency.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"THSX"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<IIIIIdqIii")  # dim m m0 efc efs lambda seed count entry entry_level


class IndexFormatError(Exception):
    """Unreadable index file: bad magic, version, checksum, or truncation."""


@dataclass(frozen=True)
class HnswParams:
    m: int = 16
    m0: int = 32
    ef_construction: int = 200
    ef_search: int = 100
    level_lambda: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.m0 < self.m:
            raise ValueError("m0 must be >= m")
        if self.ef_construction < self.m:
            raise ValueError("ef_construction must be >= m")
        if self.ef_search < 1:
            raise ValueError("ef_search must be >= 1")
        if self.level_lambda is None:
            object.__setattr__(self, "level_lambda", 1.0 / math.log(self.m))


@dataclass(frozen=True)
class SearchHit:
    id: str
    score: float


def recall_at_k(approx: list[SearchHit], exact: list[SearchHit], k: int) -> float:
    """Overlap of the two top-k id sets over min(k, |exact|)."""
    approx_ids = {h.id for h in approx[:k]}
    exact_ids = {h.id for h in exact[:k]}
    denom = min(k, len(exact))
    if denom == 0:
        return 1.0
    return len(approx_ids & exact_ids) / denom


def brute_force_search(vectors: dict[str, np.ndarray], query: np.ndarray, k: int) -> list[SearchHit]:
    """Exact top-k by dot product; same ordering rule as the index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not vectors:
        raise ValueError("empty vector store")
    ids = list(vectors.keys())
    matrix = np.stack([np.asarray(vectors[i], dtype=np.float32) for i in ids])
    return brute_force_topk(ids, matrix, query, k)


def brute_force_topk(ids: list[str], matrix: np.ndarray, query: np.ndarray, k: int) -> list[SearchHit]:
    scores = matrix @ np.asarray(query, dtype=np.float32)
    order = sorted(range(len(ids)), key=lambda i: (-float(scores[i]), ids[i]))[:k]
    return [SearchHit(id=ids[i], score=float(scores[i])) for i in order]


@dataclass
class _Node:
    level: int
    links: list[list[int]] = field(default_factory=list)


class HnswIndex:
    def __init__(self, dim: int, params: HnswParams | None = None):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.params = params or HnswParams()
        self._ids: list[str] = []
        self._id_to_idx: dict[str, int] = {}
        self._vectors = np.zeros((0, dim), dtype=np.float32)
        self._nodes: list[_Node] = []
        self._entry = -1
        self._entry_level = -1
        self._rng = random.Random(self.params.seed)

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, id: str) -> bool:
        return id in self._id_to_idx

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def vector_for(self, id: str) -> np.ndarray:
        return self._vectors[self._id_to_idx[id]].copy()

    # -- construction ------------------------------------------------------

    def _draw_level(self) -> int:
        u = max(self._rng.random(), 1e-300)
        return int(-math.log(u) * self.params.level_lambda)

    def _grow(self, vector: np.ndarray) -> int:
        idx = len(self._ids)
        if idx >= self._vectors.shape[0]:
            new_cap = max(16, self._vectors.shape[0] * 2)
            grown = np.zeros((new_cap, self.dim), dtype=np.float32)
            grown[: self._vectors.shape[0]] = self._vectors
            self._vectors = grown
        self._vectors[idx] = vector
        return idx

    def insert(self, id: str, vector) -> None:
        if id in self._id_to_idx:
            raise ValueError(f"duplicate id: {id}")
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {vec.shape}")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-3:
            raise ValueError(f"vector for {id} is not unit-norm (|v| = {norm:.6f})")

        level = self._draw_level()
        idx = self._grow(vec)
        self._ids.append(id)
        self._id_to_idx[id] = idx
        node = _Node(level=level, links=[[] for _ in range(level + 1)])
        self._nodes.append(node)

        if self._entry == -1:
            self._entry = idx
            self._entry_level = level
            return

        ef = self.params.ef_construction
        cur = self._entry
        for layer in range(self._entry_level, level, -1):
            cur = self._greedy_step(vec, cur, layer)

        eps = [cur]
        for layer in range(min(level, self._entry_level), -1, -1):
            found = self._search_layer(vec, eps, ef, layer)
            # The ground layer is built denser (up to m0 links per insert):
            # with the hard degree caps pinned, layer-0 edge density is what
            # carries beam-search recall on low-contrast data.
            cap = self.params.m0 if layer == 0 else self.params.m
            selected = self._select_neighbors(found, cap)
            for s, nb in selected:
                node.links[layer].append(nb)
                self._nodes[nb].links[layer].append(idx)
                if len(self._nodes[nb].links[layer]) > cap:
                    self._shrink(nb, layer, cap)
            eps = [i for _, i in found]

        if level > self._entry_level:
            self._entry = idx
            self._entry_level = level

    def _greedy_step(self, q: np.ndarray, start: int, layer: int) -> int:
        cur = start
        cur_score = float(self._vectors[cur] @ q)
        improved = True
        while improved:
            improved = False
            neighbors = self._nodes[cur].links[layer]
            if not neighbors:
                break
            scores = self._vectors[neighbors] @ q
            best_pos = int(np.argmax(scores))
            # argmax takes the first maximum, which is the earliest-inserted
            # neighbor in the stored order: deterministic.
            if float(scores[best_pos]) > cur_score:
                cur = neighbors[best_pos]
                cur_score = float(scores[best_pos])
                improved = True
        return cur

    def _search_layer(self, q: np.ndarray, entry_points: list[int], ef: int, layer: int) -> list[tuple[float, int]]:
        """Best-first beam search; returns (score, idx) sorted best-first."""
        visited = np.zeros(len(self._ids), dtype=bool)
        seeds = sorted(set(entry_points))
        visited[seeds] = True
        seed_scores = (self._vectors[seeds] @ q).tolist()
        candidates: list[tuple[float, int]] = []  # max-heap via negation
        results: list[tuple[float, int]] = []  # min-heap of kept scores
        for i, s in zip(seeds, seed_scores):
            heapq.heappush(candidates, (-s, i))
            heapq.heappush(results, (s, i))
        while len(results) > ef:
            heapq.heappop(results)

        while candidates:
            neg, c = heapq.heappop(candidates)
            if len(results) == ef and -neg < results[0][0]:
                break
            fresh = [n for n in self._nodes[c].links[layer] if not visited[n]]
            if not fresh:
                continue
            visited[fresh] = True
            scores = (self._vectors[fresh] @ q).tolist()
            worst = results[0][0] if len(results) == ef else -math.inf
            for n, s in zip(fresh, scores):
                if len(results) < ef:
                    heapq.heappush(results, (s, n))
                    heapq.heappush(candidates, (-s, n))
                    if len(results) == ef:
                        worst = results[0][0]
                elif s > worst:
                    heapq.heapreplace(results, (s, n))
                    heapq.heappush(candidates, (-s, n))
                    worst = results[0][0]
        return sorted(((s, i) for s, i in results), key=lambda t: (-t[0], t[1]))

    def _select_neighbors(
        self, candidates: list[tuple[float, int]], limit: int
    ) -> list[tuple[float, int]]:
        """Heuristic pruning: keep a candidate only if it is closer to the
        base vector than to every neighbor already kept, then backfill the
        remaining slots with the best pruned candidates."""
        if len(candidates) <= 1:
            return list(candidates[:limit])
        ordered = sorted(candidates, key=lambda t: (-t[0], t[1]))
        pruned: list[tuple[float, int]] = []
        if len(ordered) <= 64:
            # Small sets (degree-cap shrinks): one gram matrix, then a pure
            # scalar loop. Cheaper than a matvec per candidate.
            vecs = self._vectors[[i for _, i in ordered]]
            gram = (vecs @ vecs.T).tolist()
            kept: list[tuple[float, int]] = []
            kept_pos: list[int] = []
            for pos, (score, idx) in enumerate(ordered):
                if len(kept) == limit:
                    break
                row = gram[pos]
                if any(row[kp] >= score for kp in kept_pos):
                    pruned.append((score, idx))
                    continue
                kept.append((score, idx))
                kept_pos.append(pos)
        else:
            kept = []
            kept_buf = np.empty((limit, self._vectors.shape[1]), dtype=np.float32)
            for score, idx in ordered:
                n = len(kept)
                if n == limit:
                    break
                if n:
                    sims = kept_buf[:n] @ self._vectors[idx]
                    if float(sims.max()) >= score:
                        pruned.append((score, idx))
                        continue
                kept_buf[n] = self._vectors[idx]
                kept.append((score, idx))
        fill = limit - len(kept)
        if fill > 0 and pruned:
            kept.extend(pruned[:fill])
            kept.sort(key=lambda t: (-t[0], t[1]))
        return kept

    def _shrink(self, idx: int, layer: int, cap: int) -> None:
        """Re-select the node's neighbor list and drop back-edges of evictees.

        An evictee whose own list would become empty at this layer keeps its
        edge instead (the worst non-isolating kept neighbor is evicted in its
        place), preserving both reachability and the degree bound.
        """
        base = self._vectors[idx]
        neighbors = self._nodes[idx].links[layer]
        scores = self._vectors[neighbors] @ base
        candidates = [(s, n) for s, n in zip(scores.tolist(), neighbors)]
        kept = self._select_neighbors(candidates, cap)
        kept_ids = {n for _, n in kept}
        evicted = [(s, n) for s, n in sorted(candidates, key=lambda t: (-t[0], t[1])) if n not in kept_ids]

        final = list(kept)
        safe_evicted: list[int] = []
        for s, n in evicted:
            links_n = self._nodes[n].links[layer]
            if len(links_n) <= 1 and len(final) >= 1:
                # Would isolate n: swap in n for the worst kept entry that
                # can safely lose this edge. The degree cap is absolute, so
                # if no such entry exists, n is evicted after all.
                swap_at = -1
                for j in range(len(final) - 1, -1, -1):
                    if len(self._nodes[final[j][1]].links[layer]) > 1:
                        swap_at = j
                        break
                if swap_at == -1:
                    safe_evicted.append(n)
                    continue
                safe_evicted.append(final[swap_at][1])
                final.pop(swap_at)
                final.append((s, n))
                final.sort(key=lambda t: (-t[0], t[1]))
            else:
                safe_evicted.append(n)
        self._nodes[idx].links[layer] = [n for _, n in final]
        for n in safe_evicted:
            links_n = self._nodes[n].links[layer]
            if idx in links_n:
                links_n.remove(idx)

    # -- queries -----------------------------------------------------------

    def search(self, query, k: int, ef: int | None = None) -> list[SearchHit]:
        if len(self._ids) == 0:
            raise ValueError("search on empty index")
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query, dtype=np.float32)
        if q.shape != (self.dim,):
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {q.shape}")
        ef_eff = max(ef if ef is not None else self.params.ef_search, k)

        # Upper layers hold a small fraction of the nodes, so a full-width
        # beam there is nearly free and hands layer 0 diverse entry points.
        eps = [self._entry]
        for layer in range(self._entry_level, 0, -1):
            eps = [i for _, i in self._search_layer(q, eps, ef_eff, layer)]
        found = self._search_layer(q, eps, ef_eff, 0)
        hits = [SearchHit(id=self._ids[i], score=s) for s, i in found]
        hits.sort(key=lambda h: (-h.score, h.id))
        return hits[:k]

    # -- persistence -------------------------------------------------------

    def save(self, path: str) -> None:
        payload = bytearray()
        payload += _HEADER.pack(
            self.dim,
            self.params.m,
            self.params.m0,
            self.params.ef_construction,
            self.params.ef_search,
            self.params.level_lambda,
            self.params.seed,
            len(self._ids),
            self._entry,
            self._entry_level,
        )
        for id in self._ids:
            raw = id.encode("utf-8")
            payload += _encode_varint(len(raw))
            payload += raw
        for node in self._nodes:
            payload += _encode_varint(node.level)
        payload += self._vectors[: len(self._ids)].astype("<f4").tobytes()
        for node in self._nodes:
            for layer_links in node.links:
                payload += _encode_varint(len(layer_links))
                for n in layer_links:
                    payload += _encode_varint(n)
        digest = hashlib.sha256(payload).digest()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<H", FORMAT_VERSION))
            fh.write(digest)
            fh.write(payload)

    @classmethod
    def load(cls, path: str) -> "HnswIndex":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 4 + 2 + 32 or blob[:4] != MAGIC:
            raise IndexFormatError("not an index file (bad magic)")
        (version,) = struct.unpack_from("<H", blob, 4)
        if version != FORMAT_VERSION:
            raise IndexFormatError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
        digest = blob[6:38]
        payload = blob[38:]
        if hashlib.sha256(payload).digest() != digest:
            raise IndexFormatError("checksum mismatch: file corrupted")
        try:
            return cls._decode(payload)
        except (struct.error, IndexError, ValueError) as exc:
            raise IndexFormatError(f"truncated or malformed index payload: {exc}") from exc

    @classmethod
    def _decode(cls, payload: bytes) -> "HnswIndex":
        dim, m, m0, efc, efs, lam, seed, count, entry, entry_level = _HEADER.unpack_from(payload, 0)
        params = HnswParams(m=m, m0=m0, ef_construction=efc, ef_search=efs, level_lambda=lam, seed=seed)
        index = cls(dim=dim, params=params)
        offset = _HEADER.size
        ids = []
        for _ in range(count):
            n, offset = _decode_varint(payload, offset)
            ids.append(payload[offset : offset + n].decode("utf-8"))
            offset += n
        levels = []
        for _ in range(count):
            lvl, offset = _decode_varint(payload, offset)
            levels.append(lvl)
        vec_bytes = count * dim * 4
        if offset + vec_bytes > len(payload):
            raise IndexFormatError("vector block truncated")
        vectors = np.frombuffer(payload[offset : offset + vec_bytes], dtype="<f4").reshape(count, dim)
        offset += vec_bytes
        nodes = []
        for i in range(count):
            links = []
            for _ in range(levels[i] + 1):
                length, offset = _decode_varint(payload, offset)
                layer = []
                for _ in range(length):
                    nb, offset = _decode_varint(payload, offset)
                    if nb >= count:
                        raise ValueError(f"adjacency references missing node {nb}")
                    layer.append(nb)
                links.append(layer)
            nodes.append(_Node(level=levels[i], links=links))
        index._ids = ids
        index._id_to_idx = {id: i for i, id in enumerate(ids)}
        index._vectors = np.array(vectors, dtype=np.float32)
        index._nodes = nodes
        index._entry = entry
        index._entry_level = entry_level
        # Replay the level draws so post-load inserts match a never-saved index.
        for _ in range(count):
            index._rng.random()
        return index


def _encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while True:
        bits = value & 0x7F
        value >>= 7
        if value:
            out.append(bits | 0x80)
        else:
            out.append(bits)
            return bytes(out)


def _decode_varint(data: bytes, offset: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if offset >= len(data):
            raise ValueError("varint runs past end of data")
        byte = data[offset]
        offset += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, offset
        shift += 7
        if shift > 63:
            raise ValueError("varint too long")
