"""Dexel statistics, entropy estimates, greedy coding order and training.

A "dexel" is one bit position of a binary descriptor.  Training estimates
per-position marginal and pairwise joint bit statistics from a corpus,
derives the greedy coding permutation that minimizes the first-order chain
entropy bound, and packages Laplace-smoothed conditional probabilities
(quantized to 16-bit fixed point) as an immutable, serializable model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, MalformedPayload

MODEL_MAGIC = b"HMDL"
MODEL_VERSION = 1

SOURCE_KINDS = ("residual", "intra")
_KIND_CODE = {"residual": 0, "intra": 1}
_KIND_NAME = {v: k for k, v in _KIND_CODE.items()}


def _entropy_terms(p: np.ndarray) -> np.ndarray:
    """-p*log2(p) with the 0*log(0) := 0 convention."""
    out = np.zeros_like(p, dtype=np.float64)
    nz = p > 0
    out[nz] = -p[nz] * np.log2(p[nz])
    return out


class DexelStats:
    """Marginal and ordered-pair bit counts over training vectors."""

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.marginal_counts = np.zeros((dimension, 2), dtype=np.int64)
        self.pair_counts = np.zeros((dimension, dimension, 2, 2), dtype=np.int64)
        self.sample_count = 0

    def accumulate(self, vector) -> "DexelStats":
        return self.accumulate_many(np.asarray(vector, dtype=np.uint8)[None, :])

    def accumulate_many(self, vectors) -> "DexelStats":
        v = np.asarray(vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != self.dimension:
            raise ValueError(
                f"expected (n, {self.dimension}) bit vectors, got shape {v.shape}"
            )
        if np.any((v != 0) & (v != 1)):
            raise ValueError("vectors must be binary")
        w = 1.0 - v
        ones = v.sum(axis=0)
        self.marginal_counts[:, 1] += ones.astype(np.int64)
        self.marginal_counts[:, 0] += (v.shape[0] - ones).astype(np.int64)
        # pair_counts[j1, j2, a, b] counts vectors with v[j1] == a, v[j2] == b.
        self.pair_counts[:, :, 0, 0] += (w.T @ w).astype(np.int64)
        self.pair_counts[:, :, 0, 1] += (w.T @ v).astype(np.int64)
        self.pair_counts[:, :, 1, 0] += (v.T @ w).astype(np.int64)
        self.pair_counts[:, :, 1, 1] += (v.T @ v).astype(np.int64)
        self.sample_count += v.shape[0]
        return self

    def merge(self, other: "DexelStats") -> "DexelStats":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch in stats merge")
        self.marginal_counts += other.marginal_counts
        self.pair_counts += other.pair_counts
        self.sample_count += other.sample_count
        return self

    def _require_samples(self):
        if self.sample_count <= 0:
            raise InsufficientData("no training vectors accumulated")

    def marginal_probs(self) -> np.ndarray:
        self._require_samples()
        return self.marginal_counts / self.sample_count

    def marginal_entropy(self, j: int) -> float:
        return float(self.marginal_entropies()[j])

    def marginal_entropies(self) -> np.ndarray:
        return _entropy_terms(self.marginal_probs()).sum(axis=1)

    def conditional_entropy(self, j1: int, j2: int) -> float:
        if j1 == j2:
            raise ValueError("conditional entropy needs two distinct positions")
        return float(self.conditional_entropy_matrix()[j1, j2])

    def conditional_entropy_matrix(self) -> np.ndarray:
        """H(j1 | j2) for every ordered pair, shape (D, D)."""
        self._require_samples()
        joint = self.pair_counts / self.sample_count  # [j1, j2, x, y]
        pm = self.marginal_probs()  # [j, v]
        py = np.broadcast_to(pm[None, :, None, :], joint.shape)  # p_{j2}(y)
        terms = np.zeros_like(joint)
        nz = joint > 0
        terms[nz] = joint[nz] * np.log2(py[nz] / joint[nz])
        return terms.sum(axis=(2, 3))


def greedy_order(stats: DexelStats) -> np.ndarray:
    """Coding permutation: start at the min-marginal-entropy position, then
    repeatedly take the unused position with the lowest conditional entropy
    given the previously chosen one.  Ties break to the lowest index."""
    stats._require_samples()
    d = stats.dimension
    hm = stats.marginal_entropies()
    hc = stats.conditional_entropy_matrix()
    order = np.empty(d, dtype=np.int64)
    used = np.zeros(d, dtype=bool)
    order[0] = int(np.argmin(hm))
    used[order[0]] = True
    for j in range(1, d):
        cand = hc[:, order[j - 1]].copy()
        cand[used] = np.inf
        order[j] = int(np.argmin(cand))
        used[order[j]] = True
    return order


def chain_bound(stats: DexelStats, order) -> float:
    """First-order chain entropy bound (bits per vector) for a coding order."""
    order = np.asarray(order, dtype=np.int64)
    d = stats.dimension
    if sorted(order.tolist()) != list(range(d)):
        raise ValueError("order is not a permutation of the dexel positions")
    hm = stats.marginal_entropies()
    hc = stats.conditional_entropy_matrix()
    total = hm[order[0]]
    for j in range(1, d):
        total += hc[order[j], order[j - 1]]
    return float(total)


@dataclass(frozen=True)
class DexelOrderModel:
    dimension: int
    order: np.ndarray  # permutation, coding position -> dexel index
    first_prob: int  # P(bit=1) at order[0], 16-bit fixed point
    cond_probs: np.ndarray  # (D, 2) uint16, row 0 unused; [pos, prev_bit]
    source_kind: str  # "residual" or "intra"
    quality_bucket: int  # quality factor the residual stats were trained at

    @property
    def model_id(self):
        return (self.source_kind, self.quality_bucket, self.dimension)

    def to_bytes(self) -> bytes:
        out = bytearray(MODEL_MAGIC)
        out += struct.pack(
            "<BBBH",
            MODEL_VERSION,
            _KIND_CODE[self.source_kind],
            self.quality_bucket,
            self.dimension,
        )
        out += self.order.astype("<u2").tobytes()
        out += struct.pack("<H", self.first_prob)
        out += self.cond_probs[1:].astype("<u2").tobytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DexelOrderModel":
        if data[:4] != MODEL_MAGIC:
            raise MalformedPayload("bad model magic")
        version, kind, bucket, d = struct.unpack_from("<BBBH", data, 4)
        if version != MODEL_VERSION:
            raise MalformedPayload(f"unsupported model version {version}")
        expect = 9 + 2 * d + 2 + 4 * (d - 1)
        if len(data) != expect:
            raise MalformedPayload("model file length mismatch")
        order = np.frombuffer(data, dtype="<u2", count=d, offset=9).astype(np.int64)
        (first,) = struct.unpack_from("<H", data, 9 + 2 * d)
        cond = np.zeros((d, 2), dtype=np.uint16)
        cond[1:] = np.frombuffer(
            data, dtype="<u2", count=2 * (d - 1), offset=11 + 2 * d
        ).reshape(d - 1, 2)
        return cls(
            dimension=d,
            order=order,
            first_prob=first,
            cond_probs=cond,
            source_kind=_KIND_NAME[kind],
            quality_bucket=bucket,
        )

    def save(self, path) -> None:
        import os

        tmp = f"{path}.tmp"
        with open(tmp, "wb") as f:
            f.write(self.to_bytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "DexelOrderModel":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

    def cross_entropy_bits(self) -> float:
        """Expected code length (bits/vector) when the source follows the
        model's own chain distribution."""

        def h(p):
            return float(_entropy_terms(np.array([p, 1.0 - p])).sum())

        p1 = self.first_prob / 65536.0
        total = h(p1)
        m = p1  # P(previous coded bit == 1)
        for j in range(1, self.dimension):
            q0 = self.cond_probs[j, 0] / 65536.0
            q1 = self.cond_probs[j, 1] / 65536.0
            total += (1.0 - m) * h(q0) + m * h(q1)
            m = (1.0 - m) * q0 + m * q1
        return total

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw vectors from the model chain, returned in natural dexel order."""
        coded = np.zeros((n, self.dimension), dtype=np.uint8)
        u = rng.random((n, self.dimension))
        coded[:, 0] = u[:, 0] < self.first_prob / 65536.0
        for j in range(1, self.dimension):
            p = self.cond_probs[j, coded[:, j - 1]] / 65536.0
            coded[:, j] = u[:, j] < p
        out = np.zeros_like(coded)
        out[:, self.order] = coded
        return out


def _quantize_prob(p: np.ndarray) -> np.ndarray:
    return np.clip(np.round(p * 65536.0), 1, 65535).astype(np.uint16)


def train(pairs, kind: str, q: int = 0) -> DexelOrderModel:
    """Fit a coding model from (original, lossy) descriptor pairs.

    ``kind="residual"`` trains on original XOR lossy; ``kind="intra"`` on the
    originals alone.  Probabilities are add-one smoothed and quantized to
    16-bit fixed point, so they never reach 0 or 1 exactly.
    """
    if kind not in SOURCE_KINDS:
        raise ValueError(f"unknown source kind {kind!r}")
    vectors = []
    for orig, lossy in pairs:
        orig = np.asarray(orig, dtype=np.uint8)
        if kind == "residual":
            vectors.append(orig ^ np.asarray(lossy, dtype=np.uint8))
        else:
            vectors.append(orig)
    if len(vectors) < 2:
        raise InsufficientData(f"need at least 2 training vectors, got {len(vectors)}")
    v = np.stack(vectors)
    stats = DexelStats(v.shape[1]).accumulate_many(v)
    return model_from_stats(stats, kind=kind, quality_bucket=q)


def model_from_stats(
    stats: DexelStats, kind: str, quality_bucket: int = 0
) -> DexelOrderModel:
    order = greedy_order(stats)
    n = stats.sample_count
    first = _quantize_prob(
        np.array((stats.marginal_counts[order[0], 1] + 1) / (n + 2))
    )
    d = stats.dimension
    cond = np.zeros((d, 2), dtype=np.uint16)
    for j in range(1, d):
        prev_j, cur_j = order[j - 1], order[j]
        # pair_counts[prev_j, cur_j, prev_value, current_value]
        c = stats.pair_counts[prev_j, cur_j]
        for prev in (0, 1):
            p = (c[prev, 1] + 1) / (c[prev, 0] + c[prev, 1] + 2)
            cond[j, prev] = _quantize_prob(np.array(p))
    return DexelOrderModel(
        dimension=d,
        order=order,
        first_prob=int(first),
        cond_probs=cond,
        source_kind=kind,
        quality_bucket=int(quality_bucket),
    )


def pick_model(models, q: int) -> DexelOrderModel:
    """Model whose quality bucket is nearest to q; ties go to the lower bucket."""
    models = list(models)
    if not models:
        raise ValueError("no models supplied")
    return min(models, key=lambda m: (abs(m.quality_bucket - q), m.quality_bucket))
