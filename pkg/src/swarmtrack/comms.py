"""Range-limited connectivity and delayed multi-hop information exchange.

Two UAVs communicate directly within the single-hop radius; farther pairs
relay through intermediates and their records age by one time step per hop:
a record received over h hops at step k was emitted at step k - h + 1.
The hop matrix is rebuilt from current positions every step, and each agent
keeps only the short tail of its own records that relaying can still
request.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .radar import MeasurementRecord

UNREACHABLE = math.inf


@dataclass(frozen=True)
class CommsConfig:
    """Single-hop radius and the maximum relay depth."""

    r_max_m: float
    h_max: int

    def validate(self) -> None:
        if self.r_max_m <= 0:
            raise ValueError("communication radius must be positive")
        if self.h_max < 1:
            raise ValueError("h_max must be at least 1")


def hop_counts(positions: np.ndarray, r_max: float) -> np.ndarray:
    """Shortest hop counts between all agents; ``inf`` for unreachable pairs.

    Edges connect agents within ``r_max`` of each other; the diagonal is 0.
    """
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    deltas = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", deltas, deltas))
    adjacency = dist <= r_max
    np.fill_diagonal(adjacency, False)

    hops = np.full((n, n), UNREACHABLE)
    np.fill_diagonal(hops, 0.0)
    for start in range(n):
        frontier = deque([start])
        while frontier:
            node = frontier.popleft()
            next_hop = hops[start, node] + 1.0
            for other in np.flatnonzero(adjacency[node]):
                if next_hop < hops[start, other]:
                    hops[start, other] = next_hop
                    frontier.append(other)
    return hops


class RecordHistory:
    """Ring buffer of an agent's own records, deep enough for relaying."""

    def __init__(self, h_max: int):
        self._buffer: deque[MeasurementRecord] = deque(maxlen=max(1, h_max))

    def push(self, record: MeasurementRecord) -> None:
        self._buffer.append(record)

    def at_time(self, time_index: int) -> MeasurementRecord | None:
        if not self._buffer:
            return None
        newest = self._buffer[-1].time_index
        offset = newest - time_index
        if offset < 0 or offset >= len(self._buffer):
            return None
        record = self._buffer[len(self._buffer) - 1 - offset]
        return record


def exchange(
    histories: list[RecordHistory],
    hops: np.ndarray,
    k: int,
    h_max: int,
) -> list[list[MeasurementRecord]]:
    """Assemble each agent's information vector for step ``k``.

    Agent i receives, from every j reachable within ``h_max`` hops, the
    record j emitted at step k - h_ij + 1; its own current record comes
    first.  Records from before step 1 (startup) are omitted.
    """
    n = len(histories)
    out: list[list[MeasurementRecord]] = []
    for i in range(n):
        bundle: list[MeasurementRecord] = []
        own = histories[i].at_time(k)
        if own is not None:
            bundle.append(own)
        for j in range(n):
            if j == i:
                continue
            h_ij = hops[i, j]
            if not (1 <= h_ij <= h_max):
                continue
            emitted = k - int(h_ij) + 1
            if emitted < 1:
                continue
            record = histories[j].at_time(emitted)
            if record is not None:
                bundle.append(record)
        out.append(bundle)
    return out
