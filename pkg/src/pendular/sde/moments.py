"""Mergeable first and second moments of positive-P trajectories.

Per recorded time the accumulator tracks the five c-number variables
``(alpha, alpha+, beta, beta+, alpha+ alpha)``: their means and the centred
co-moment matrix sum_k (z_i - mean_i)(z_j - mean_j) with plain (not
conjugated) products.  Centring keeps the variances of the ~1e5-sized field
amplitudes exact where raw power sums would cancel catastrophically.  The
photon-number entry supplies the quartic product alpha+ alpha alpha+ alpha
needed for the Fano factor.

Moments are stored per block of consecutive trajectory indices.  Merging is
a disjoint union of blocks and totals are always folded in block order, so
any partition of the same trajectories gives bit-identical results.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VARIABLES = ("alpha", "alpha_plus", "beta", "beta_plus", "n_photon")
N_VARS = len(VARIABLES)


@dataclass
class BlockMoments:
    count: int
    mean: np.ndarray  # (n_times, 5) complex
    comoment: np.ndarray  # (n_times, 5, 5) complex
    diverged: int = 0

    @classmethod
    def empty(cls, n_times: int, diverged: int = 0) -> "BlockMoments":
        return cls(0, np.zeros((n_times, N_VARS), complex),
                   np.zeros((n_times, N_VARS, N_VARS), complex), diverged)

    @classmethod
    def from_trajectories(cls, records: np.ndarray, diverged: int = 0) -> "BlockMoments":
        """Moments of ``records`` shaped (n_traj, n_times, 4) in (alpha, alpha+, beta, beta+)."""
        records = np.asarray(records, dtype=complex)
        n_traj, n_times = records.shape[:2]
        if n_traj == 0:
            return cls.empty(n_times, diverged)
        z = np.empty((n_traj, n_times, N_VARS), complex)
        z[..., :4] = records
        z[..., 4] = records[..., 1] * records[..., 0]
        return cls.from_variables(z, diverged)

    @classmethod
    def from_variables(cls, z: np.ndarray, diverged: int = 0) -> "BlockMoments":
        z = np.ascontiguousarray(z, dtype=complex)
        n = z.shape[0]
        mean = z.sum(axis=0) / n
        d = z - mean
        com = np.einsum("kti,ktj->tij", d, d, optimize=False)
        return cls(n, mean, com, diverged)

    def combine(self, other: "BlockMoments") -> "BlockMoments":
        """Pairwise (Chan et al.) update; exact in real arithmetic."""
        if other.count == 0:
            return BlockMoments(self.count, self.mean, self.comoment, self.diverged + other.diverged)
        if self.count == 0:
            return BlockMoments(other.count, other.mean, other.comoment, self.diverged + other.diverged)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        w = self.count * other.count / n
        com = self.comoment + other.comoment + w * delta[:, :, None] * delta[:, None, :]
        return BlockMoments(n, mean, com, self.diverged + other.diverged)


@dataclass
class MomentAccumulator:
    times: np.ndarray
    blocks: dict = field(default_factory=dict)
    block_size: int | None = None

    @property
    def count(self) -> int:
        return sum(b.count for b in self.blocks.values())

    @property
    def diverged_count(self) -> int:
        return sum(b.diverged for b in self.blocks.values())

    @property
    def diverged_fraction(self) -> float:
        total = self.count + self.diverged_count
        return self.diverged_count / total if total else 0.0

    @property
    def reliable(self) -> bool:
        """False when more than 1% of trajectories diverged."""
        return self.diverged_fraction <= 0.01

    def add_block(self, block_id: int, moments: BlockMoments) -> None:
        if block_id in self.blocks:
            raise ValueError(f"block {block_id} already accumulated")
        self.blocks[block_id] = moments

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if len(self.times) != len(other.times) or not np.array_equal(self.times, other.times):
            raise ValueError("cannot merge accumulators recorded at different times")
        overlap = self.blocks.keys() & other.blocks.keys()
        if overlap:
            raise ValueError(f"blocks {sorted(overlap)} present in both accumulators")
        return MomentAccumulator(self.times, {**self.blocks, **other.blocks}, self.block_size)

    def subset(self, block_ids) -> "MomentAccumulator":
        return MomentAccumulator(self.times, {b: self.blocks[b] for b in block_ids}, self.block_size)

    def block_ids(self) -> list[int]:
        return sorted(self.blocks)

    def total(self) -> BlockMoments:
        out = BlockMoments.empty(len(self.times))
        for b in sorted(self.blocks):
            out = out.combine(self.blocks[b])
        return out

    def raw_sums(self) -> tuple[int, np.ndarray, np.ndarray]:
        """(count, sum z_i, sum z_i z_j) reconstructed from the centred form."""
        t = self.total()
        s1 = t.mean * t.count
        s2 = t.comoment + t.count * t.mean[:, :, None] * t.mean[:, None, :]
        return t.count, s1, s2
