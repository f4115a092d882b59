"""Deterministic random-stream derivation for Monte-Carlo ensembles.

Path ``i`` of an ensemble draws from the substream
``SeedSequence(master_seed, spawn_key=(i,))``; nested components of one
path (e.g. the subordinator clock versus the Brownian driver) extend the
spawn key by one more index.  The mapping depends only on
``(master_seed, indices)``, never on scheduling, so ensembles are
reproducible for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SeedInfo:
    """Provenance of a random stream: master seed plus spawn indices."""

    master: int
    spawn_key: tuple[int, ...] = ()

    def child(self, index: int) -> "SeedInfo":
        return SeedInfo(self.master, self.spawn_key + (index,))


def substream(master_seed: int, *indices: int) -> np.random.Generator:
    """Generator for the substream addressed by ``(master_seed, *indices)``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(indices))
    return np.random.default_rng(ss)


def stream_pair(rng: np.random.Generator) -> tuple[np.random.Generator, np.random.Generator]:
    """Two disjoint child streams of ``rng`` (deterministic given rng state)."""
    a, b = rng.spawn(2)
    return a, b
